#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "specpredict/availability.hpp"
#include "specpredict/markov.hpp"
#include "specpredict/propagation.hpp"

namespace specpredict {

/// Transmitter-side geometry shared by every user link.
struct PrimarySite {
  double h_tx_m = 30.0;
  double freq_mhz = 1000.0;
  double time_pct = 50.0;
};

/// Static secondary-user location relative to the primary.
struct UserSite {
  std::string id;
  double distance_km = 1.0;
  double h_rx_m = 1.5;
  ClutterEnvironment clutter_env = ClutterEnvironment::Open;
  double loc_pct = 50.0;
};

struct MonteCarloMode {
  std::uint64_t seed = 0;
  std::size_t n_replicas = 1;
};

struct AnalyticMode {};

using PredictionMode = std::variant<MonteCarloMode, AnalyticMode>;

struct Scenario {
  MarkovParams markov{0.0, 1.0};
  RadioParams radio;
  PrimarySite primary;
  std::vector<UserSite> users;
  PropagationModel model;
  std::size_t n_steps = 1;
  PredictionMode mode = MonteCarloMode{};
  /// X_0; nullopt draws it from the stationary distribution.
  std::optional<ChannelState> initial;
};

LinkGeometry link_geometry(const PrimarySite& primary, const UserSite& user);

/// Throws InvalidArgument on structural problems (no users, duplicate ids,
/// n_steps or n_replicas of 0) and on invalid user geometry.
void validate(const Scenario& scenario);

/// Loss evaluator used by precompute_losses; replaceable for instrumentation.
using LossEvaluator = std::function<PathLossResult(const PropagationModel&, const LinkGeometry&)>;

/// One total_loss evaluation per user, in user order. Errors are rethrown with
/// the user id prepended and the original code kept.
std::vector<PathLossResult> precompute_losses(const Scenario& scenario,
                                              const LossEvaluator& evaluate = total_loss);

/// Receives Monte Carlo timelines as they are produced. For a given
/// (replica, user) the chunks arrive in increasing step order; calls are
/// serialized and ordered by (batch, chunk, replica, user).
class TimelineSink {
 public:
  virtual ~TimelineSink() = default;
  /// `first_step` is 1-based.
  virtual void write(std::size_t replica, std::size_t user_index, std::size_t first_step,
                     std::span<const AvailabilityState> states) = 0;
};

/// Working-set size, in cells, of one streaming block.
inline constexpr std::size_t kStreamBlockCells = std::size_t{1} << 22;

struct RunOptions {
  /// 0 selects std::thread::hardware_concurrency().
  unsigned workers = 0;
  /// Upper bound on availability cells held in memory at once.
  std::size_t max_cells_in_memory = 100'000'000;
  /// Keep every timeline in the report. Requires R * N * M <= max_cells_in_memory.
  bool keep_timelines = true;
};

struct RunSummary {
  /// Fraction of Free cells (Monte Carlo, pooled over replicas) or expected
  /// free fraction 1 - mean occupancy probability (analytic).
  double availability_fraction = 0.0;
  /// Longest runs over all replicas; Monte Carlo only.
  std::optional<std::size_t> longest_free_run;
  std::optional<std::size_t> longest_occupied_run;
};

struct UserPrediction {
  std::string user_id;
  PathLossResult loss;
  double p_rx_dbm = 0.0;
  RangeClass range = RangeClass::OutOfRange;
  RunSummary summary;
  /// Monte Carlo: timelines[r] holds Y_1..Y_N of replica r (when kept).
  std::vector<std::vector<AvailabilityState>> timelines;
  /// Analytic: occupancy probability for steps 1..N.
  std::vector<double> occupancy_probs;
};

struct RunStats {
  std::uint64_t loss_evaluations = 0;
  std::uint64_t threshold_comparisons = 0;
};

struct PredictionReport {
  PredictionMode mode;
  std::size_t n_steps = 0;
  std::vector<UserPrediction> users;
  /// Monte Carlo: X_1..X_N of every replica (when timelines are kept).
  std::vector<std::vector<ChannelState>> primary_paths;
  RunStats stats;
  double wall_time_s = 0.0;

  std::size_t n_replicas() const noexcept;
};

PredictionReport predict_monte_carlo(const Scenario& scenario, const RunOptions& options = {},
                                     TimelineSink* sink = nullptr);

PredictionReport predict_analytic(const Scenario& scenario);

/// Dispatches on scenario.mode.
PredictionReport predict(const Scenario& scenario, const RunOptions& options = {},
                         TimelineSink* sink = nullptr);

/// Per user, per step: share of replicas in which the step is Occupied.
/// Needs a Monte Carlo report with timelines kept.
std::vector<std::vector<double>> ensemble_availability(const PredictionReport& report);

/// Accumulates availability statistics over streamed chunks of one timeline.
class RunTracker {
 public:
  void push(std::span<const AvailabilityState> states) noexcept;

  std::uint64_t free_count() const noexcept { return free_; }
  std::uint64_t total() const noexcept { return total_; }
  std::size_t longest_free() const noexcept { return longest_[0]; }
  std::size_t longest_occupied() const noexcept { return longest_[1]; }

 private:
  std::uint64_t free_ = 0;
  std::uint64_t total_ = 0;
  AvailabilityState current_ = AvailabilityState::Free;
  std::size_t run_ = 0;
  std::size_t longest_[2] = {0, 0};
};

/// Runs fn(i) for i in [0, n) over `workers` threads with a static contiguous
/// partition. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

unsigned resolve_workers(unsigned requested) noexcept;

}  // namespace specpredict
