#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "specpredict/rng.hpp"

namespace specpredict {

/// Primary transmitter activity at one time step.
enum class ChannelState : std::uint8_t { Idle = 0, Active = 1 };

/// Transition probabilities of the two-state activity chain.
///
/// `lambda` is Pr{Idle -> Active} and `mu` is Pr{Active -> Idle} per step.
/// The frozen chain lambda = mu = 0 is representable; stationary queries on it
/// throw DegenerateChain.
class MarkovParams {
 public:
  MarkovParams(double lambda, double mu);

  double lambda() const noexcept { return lambda_; }
  double mu() const noexcept { return mu_; }
  bool degenerate() const noexcept { return lambda_ + mu_ == 0.0; }

  friend bool operator==(const MarkovParams&, const MarkovParams&) = default;

 private:
  double lambda_;
  double mu_;
};

/// Probability mass over {Idle, Active}.
class StateDistribution {
 public:
  /// Throws InvalidArgument unless both are in [0, 1] and sum to 1 within 1e-12.
  StateDistribution(double p_idle, double p_active);

  static StateDistribution certain(ChannelState state) noexcept;

  double p_idle() const noexcept { return p_idle_; }
  double p_active() const noexcept { return p_active_; }

 private:
  double p_idle_;
  double p_active_;
};

using OccupancyTrace = std::vector<ChannelState>;

StateDistribution stationary_distribution(const MarkovParams& params);

/// One transition. Consumes exactly one uniform variate u; a transition with
/// probability p fires when u < p.
inline ChannelState step(ChannelState current, const MarkovParams& params, Rng& rng) {
  const double u = rng.uniform();
  if (current == ChannelState::Idle) {
    return u < params.lambda() ? ChannelState::Active : ChannelState::Idle;
  }
  return u < params.mu() ? ChannelState::Idle : ChannelState::Active;
}

/// Draws a state from `dist` with one uniform variate (Active iff u < p_active).
ChannelState draw_state(const StateDistribution& dist, Rng& rng);

/// Writes X_1..X_N into `out` starting from X_0 = `initial`. X_0 is not emitted.
void sample_path_into(const MarkovParams& params, ChannelState initial,
                      std::span<ChannelState> out, Rng& rng);

std::vector<ChannelState> sample_path(const MarkovParams& params, ChannelState initial,
                                      std::size_t n_steps, Rng& rng);

/// Draws X_0 from `initial` first, then X_1..X_N.
std::vector<ChannelState> sample_path(const MarkovParams& params,
                                      const StateDistribution& initial, std::size_t n_steps,
                                      Rng& rng);

/// Exact n-step distribution by iterating p_active' = p_idle*lambda + p_active*(1 - mu).
StateDistribution evolve_distribution(const StateDistribution& initial,
                                      const MarkovParams& params, std::size_t n_steps);

/// Pr{X_n = Active} for n = 1..n_steps.
std::vector<double> active_probability_trajectory(const StateDistribution& initial,
                                                  const MarkovParams& params,
                                                  std::size_t n_steps);

struct TransitionCounts {
  std::uint64_t idle_to_idle = 0;
  std::uint64_t idle_to_active = 0;
  std::uint64_t active_to_idle = 0;
  std::uint64_t active_to_active = 0;

  std::uint64_t from_idle() const noexcept { return idle_to_idle + idle_to_active; }
  std::uint64_t from_active() const noexcept { return active_to_idle + active_to_active; }
};

TransitionCounts count_transitions(std::span<const ChannelState> trace);

struct EstimateOptions {
  /// Add-one smoothing: (count + 1) / (origin_count + 2). Makes both
  /// parameters identifiable on any trace of length >= 2.
  bool pseudo_count = false;
};

/// Maximum-likelihood transition counting. Throws InsufficientData when the
/// trace is shorter than 2 or a state never appears as a pair origin (without
/// pseudo-counts); the message names the unidentifiable parameter.
MarkovParams estimate_params(std::span<const ChannelState> trace, EstimateOptions options = {});

}  // namespace specpredict
