#include "specpredict/predictor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "specpredict/error.hpp"

namespace specpredict {

LinkGeometry link_geometry(const PrimarySite& primary, const UserSite& user) {
  LinkGeometry g;
  g.distance_km = user.distance_km;
  g.h_tx_m = primary.h_tx_m;
  g.h_rx_m = user.h_rx_m;
  g.freq_mhz = primary.freq_mhz;
  g.time_pct = primary.time_pct;
  g.clutter_env = user.clutter_env;
  g.loc_pct = user.loc_pct;
  return g;
}

void validate(const Scenario& scenario) {
  if (scenario.users.empty()) throw Error(Errc::InvalidArgument, "scenario has no users");
  if (scenario.n_steps == 0) throw Error(Errc::InvalidArgument, "n_steps must be >= 1");
  if (const auto* mc = std::get_if<MonteCarloMode>(&scenario.mode); mc && mc->n_replicas == 0) {
    throw Error(Errc::InvalidArgument, "n_replicas must be >= 1");
  }
  std::set<std::string_view> ids;
  for (const auto& user : scenario.users) {
    if (user.id.empty()) throw Error(Errc::InvalidArgument, "user id must not be empty");
    if (!ids.insert(user.id).second) {
      throw Error(Errc::InvalidArgument, "duplicate user id '" + user.id + "'");
    }
    try {
      validate(link_geometry(scenario.primary, user));
    } catch (const Error& e) {
      throw Error(e.code(), "user '" + user.id + "': " + e.what());
    }
  }
}

std::vector<PathLossResult> precompute_losses(const Scenario& scenario,
                                              const LossEvaluator& evaluate) {
  std::vector<PathLossResult> losses;
  losses.reserve(scenario.users.size());
  for (const auto& user : scenario.users) {
    try {
      losses.push_back(evaluate(scenario.model, link_geometry(scenario.primary, user)));
    } catch (const Error& e) {
      throw Error(e.code(), "user '" + user.id + "': " + e.what());
    }
  }
  return losses;
}

std::size_t PredictionReport::n_replicas() const noexcept {
  if (const auto* mc = std::get_if<MonteCarloMode>(&mode)) return mc->n_replicas;
  return 0;
}

void RunTracker::push(std::span<const AvailabilityState> states) noexcept {
  // Branch-free so cost does not depend on how predictable the timeline is.
  std::uint64_t free = 0;
  std::size_t run = run_;
  std::size_t longest_free = longest_[0];
  std::size_t longest_occupied = longest_[1];
  auto current = static_cast<std::size_t>(current_);
  for (const AvailabilityState s : states) {
    const auto occupied = static_cast<std::size_t>(s);
    free += occupied ^ 1u;
    run = occupied == current ? run + 1 : 1;
    current = occupied;
    longest_free = std::max(longest_free, occupied ? 0 : run);
    longest_occupied = std::max(longest_occupied, occupied ? run : 0);
  }
  run_ = run;
  current_ = static_cast<AvailabilityState>(current);
  longest_[0] = longest_free;
  longest_[1] = longest_occupied;
  free_ += free;
  total_ += states.size();
}

unsigned resolve_workers(unsigned requested) noexcept {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(resolve_workers(workers), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      const std::size_t begin = n * w / threads;
      const std::size_t end = n * (w + 1) / threads;
      pool.emplace_back([&, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

PredictionReport start_report(const Scenario& scenario, RunStats& stats) {
  validate(scenario);
  const auto losses = precompute_losses(scenario, [&](const PropagationModel& m, const LinkGeometry& g) {
    ++stats.loss_evaluations;
    return total_loss(m, g);
  });
  PredictionReport report;
  report.mode = scenario.mode;
  report.n_steps = scenario.n_steps;
  report.users.resize(scenario.users.size());
  for (std::size_t u = 0; u < scenario.users.size(); ++u) {
    auto& out = report.users[u];
    out.user_id = scenario.users[u].id;
    out.loss = losses[u];
    out.p_rx_dbm = received_power(scenario.radio, losses[u]);
    out.range = classify_range(scenario.radio, losses[u]);
  }
  return report;
}

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    return std::numeric_limits<std::size_t>::max();
  }
  return a * b;
}

}  // namespace

PredictionReport predict_monte_carlo(const Scenario& scenario, const RunOptions& options,
                                     TimelineSink* sink) {
  const auto start = Clock::now();
  const auto* mc = std::get_if<MonteCarloMode>(&scenario.mode);
  if (!mc) throw Error(Errc::InvalidArgument, "predict_monte_carlo needs MonteCarlo mode");

  RunStats stats;
  PredictionReport report = start_report(scenario, stats);

  std::optional<StateDistribution> x0_dist;
  if (!scenario.initial) x0_dist = stationary_distribution(scenario.markov);

  const std::size_t n_steps = scenario.n_steps;
  const std::size_t n_users = scenario.users.size();
  const std::size_t n_replicas = mc->n_replicas;
  const std::size_t cap = std::max<std::size_t>(options.max_cells_in_memory, 1);
  const std::size_t cells_per_replica = saturating_mul(n_steps, n_users);
  const bool keep = options.keep_timelines;
  const unsigned workers = resolve_workers(options.workers);

  if (keep && saturating_mul(cells_per_replica, n_replicas) > cap) {
    throw Error(Errc::InvalidArgument,
                "run has " + std::to_string(n_replicas) + " x " + std::to_string(cells_per_replica) +
                    " cells, above the in-memory cap of " + std::to_string(cap) +
                    "; stream through a TimelineSink instead");
  }

  const std::size_t block = std::min(cap, kStreamBlockCells);
  const std::size_t batch =
      keep ? n_replicas : std::clamp<std::size_t>(block / cells_per_replica, 1, n_replicas);
  const std::size_t chunk =
      (keep || cells_per_replica <= block) ? n_steps : std::max<std::size_t>(block / n_users, 1);

  std::vector<bool> in_range(n_users);
  std::vector<double> p_rx(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    in_range[u] = report.users[u].range == RangeClass::InRange;
    p_rx[u] = report.users[u].p_rx_dbm;
  }
  const double p_th = scenario.radio.p_th_dbm;

  std::vector<std::vector<ChannelState>> batch_paths;
  std::vector<AvailabilityState> buffer;
  if (keep) {
    report.primary_paths.assign(n_replicas, std::vector<ChannelState>(n_steps));
    for (auto& user : report.users) {
      user.timelines.assign(n_replicas, std::vector<AvailabilityState>(n_steps));
    }
  } else {
    batch_paths.assign(batch, std::vector<ChannelState>(n_steps));
    buffer.resize(batch * n_users * chunk);
  }

  std::vector<std::uint64_t> free_cells(n_users, 0);
  std::vector<std::size_t> longest_free(n_users, 0);
  std::vector<std::size_t> longest_occupied(n_users, 0);
  std::atomic<std::uint64_t> comparisons{0};

  for (std::size_t b0 = 0; b0 < n_replicas; b0 += batch) {
    const std::size_t nb = std::min(batch, n_replicas - b0);
    auto path_of = [&](std::size_t i) -> std::vector<ChannelState>& {
      return keep ? report.primary_paths[b0 + i] : batch_paths[i];
    };

    parallel_for(nb, workers, [&](std::size_t i) {
      Rng rng(derive_seed(mc->seed, b0 + i));
      const ChannelState x0 = scenario.initial ? *scenario.initial : draw_state(*x0_dist, rng);
      sample_path_into(scenario.markov, x0, path_of(i), rng);
    });

    std::vector<RunTracker> trackers(nb * n_users);
    for (std::size_t s0 = 0; s0 < n_steps; s0 += chunk) {
      const std::size_t len = std::min(chunk, n_steps - s0);
      auto cells_of = [&](std::size_t i, std::size_t u) -> std::span<AvailabilityState> {
        if (keep) return std::span(report.users[u].timelines[b0 + i]).subspan(s0, len);
        return std::span(buffer).subspan((i * n_users + u) * chunk, len);
      };

      parallel_for(nb * n_users, workers, [&](std::size_t task) {
        const std::size_t i = task / n_users;
        const std::size_t u = task % n_users;
        const auto out = cells_of(i, u);
        if (in_range[u]) {
          const auto path = std::span(path_of(i)).subspan(s0, len);
          for (std::size_t k = 0; k < len; ++k) out[k] = channel_state(path[k], p_rx[u], p_th);
          comparisons.fetch_add(len, std::memory_order_relaxed);
        } else {
          std::fill(out.begin(), out.end(), AvailabilityState::Free);
        }
        trackers[task].push(out);
      });

      if (sink) {
        for (std::size_t i = 0; i < nb; ++i) {
          for (std::size_t u = 0; u < n_users; ++u) sink->write(b0 + i, u, s0 + 1, cells_of(i, u));
        }
      }
    }

    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t u = 0; u < n_users; ++u) {
        const auto& t = trackers[i * n_users + u];
        free_cells[u] += t.free_count();
        longest_free[u] = std::max(longest_free[u], t.longest_free());
        longest_occupied[u] = std::max(longest_occupied[u], t.longest_occupied());
      }
    }
  }

  const double total_cells = static_cast<double>(n_steps) * static_cast<double>(n_replicas);
  for (std::size_t u = 0; u < n_users; ++u) {
    auto& summary = report.users[u].summary;
    summary.availability_fraction = static_cast<double>(free_cells[u]) / total_cells;
    summary.longest_free_run = longest_free[u];
    summary.longest_occupied_run = longest_occupied[u];
  }
  stats.threshold_comparisons = comparisons.load();
  report.stats = stats;
  report.wall_time_s = seconds_since(start);
  return report;
}

PredictionReport predict_analytic(const Scenario& scenario) {
  const auto start = Clock::now();
  if (!std::holds_alternative<AnalyticMode>(scenario.mode)) {
    throw Error(Errc::InvalidArgument, "predict_analytic needs Analytic mode");
  }
  RunStats stats;
  PredictionReport report = start_report(scenario, stats);

  const StateDistribution initial = scenario.initial
                                        ? StateDistribution::certain(*scenario.initial)
                                        : stationary_distribution(scenario.markov);
  const std::vector<double> active =
      active_probability_trajectory(initial, scenario.markov, scenario.n_steps);
  const double mean_active =
      std::accumulate(active.begin(), active.end(), 0.0) / static_cast<double>(active.size());

  for (auto& user : report.users) {
    if (user.range == RangeClass::InRange) {
      user.occupancy_probs = active;
      user.summary.availability_fraction = 1.0 - mean_active;
    } else {
      user.occupancy_probs.assign(scenario.n_steps, 0.0);
      user.summary.availability_fraction = 1.0;
    }
  }
  report.stats = stats;
  report.wall_time_s = seconds_since(start);
  return report;
}

PredictionReport predict(const Scenario& scenario, const RunOptions& options, TimelineSink* sink) {
  if (std::holds_alternative<AnalyticMode>(scenario.mode)) return predict_analytic(scenario);
  return predict_monte_carlo(scenario, options, sink);
}

std::vector<std::vector<double>> ensemble_availability(const PredictionReport& report) {
  const std::size_t replicas = report.n_replicas();
  if (replicas == 0) {
    throw Error(Errc::InvalidArgument, "ensemble_availability needs a Monte Carlo report");
  }
  std::vector<std::vector<double>> freq;
  freq.reserve(report.users.size());
  for (const auto& user : report.users) {
    if (user.timelines.size() != replicas) {
      throw Error(Errc::InvalidArgument, "report for user '" + user.user_id + "' has no kept timelines");
    }
    std::vector<std::uint64_t> counts(report.n_steps, 0);
    for (const auto& timeline : user.timelines) {
      for (std::size_t n = 0; n < report.n_steps; ++n) {
        counts[n] += timeline[n] == AvailabilityState::Occupied;
      }
    }
    auto& f = freq.emplace_back(report.n_steps);
    for (std::size_t n = 0; n < report.n_steps; ++n) {
      f[n] = static_cast<double>(counts[n]) / static_cast<double>(replicas);
    }
  }
  return freq;
}

}  // namespace specpredict
