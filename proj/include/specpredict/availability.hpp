#pragma once

#include <cstdint>
#include <variant>

#include "specpredict/markov.hpp"
#include "specpredict/propagation.hpp"

namespace specpredict {

struct RadioParams {
  double p_tx_dbm = 30.0;
  double g_t_dbi = 0.0;
  double g_r_dbi = 0.0;
  double p_th_dbm = -90.0;  ///< P_rx >= p_th counts as interference
};

/// Secondary-user view of the channel at one step.
enum class AvailabilityState : std::uint8_t { Free = 0, Occupied = 1 };

enum class RangeClass { InRange, OutOfRange };

/// P_rx = P_tx + G_t + G_r - L_total, all in dB units.
constexpr double received_power(const RadioParams& radio, const PathLossResult& loss) noexcept {
  return radio.p_tx_dbm + radio.g_t_dbi + radio.g_r_dbi - loss.l_total_db;
}

/// Occupied iff the primary is active and its signal reaches the threshold (inclusive).
constexpr AvailabilityState channel_state(ChannelState x, double p_rx_dbm, double p_th_dbm) noexcept {
  const auto active = static_cast<std::uint8_t>(x);
  return static_cast<AvailabilityState>(active & static_cast<std::uint8_t>(p_rx_dbm >= p_th_dbm));
}

constexpr RangeClass classify_range(const RadioParams& radio, const PathLossResult& loss) noexcept {
  return received_power(radio, loss) >= radio.p_th_dbm ? RangeClass::InRange : RangeClass::OutOfRange;
}

struct RangeDistance {
  double km;
};

/// No threshold crossing inside the search bracket.
enum class NoCrossing {
  AlwaysIn,   ///< threshold reached even at d_max
  AlwaysOut,  ///< threshold missed even at d_min
};

using RangeResult = std::variant<RangeDistance, NoCrossing>;

/// Distance at which P_rx falls through p_th, by bisection to 1 m over
/// [d_min_km, d_max_km]. `geometry_template` supplies everything but distance.
/// Assumes loss is non-decreasing in distance (true for the built-in models).
/// Throws InvalidBracket if d_min_km >= d_max_km.
RangeResult interference_range(const PropagationModel& model, const RadioParams& radio,
                               const LinkGeometry& geometry_template, double d_min_km,
                               double d_max_km);

inline constexpr double kRangeToleranceKm = 1e-3;

}  // namespace specpredict
