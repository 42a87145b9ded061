#include "specpredict/markov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "specpredict/error.hpp"

namespace specpredict {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

MarkovParams::MarkovParams(double lambda, double mu) : lambda_(lambda), mu_(mu) {
  if (!is_probability(lambda)) {
    throw Error(Errc::InvalidArgument,
                "lambda must be a probability in [0, 1], got " + std::to_string(lambda));
  }
  if (!is_probability(mu)) {
    throw Error(Errc::InvalidArgument,
                "mu must be a probability in [0, 1], got " + std::to_string(mu));
  }
}

StateDistribution::StateDistribution(double p_idle, double p_active)
    : p_idle_(p_idle), p_active_(p_active) {
  if (!is_probability(p_idle) || !is_probability(p_active) ||
      std::abs(p_idle + p_active - 1.0) > 1e-12) {
    throw Error(Errc::InvalidArgument, "state distribution must be two probabilities summing to 1");
  }
}

StateDistribution StateDistribution::certain(ChannelState state) noexcept {
  return state == ChannelState::Idle ? StateDistribution(1.0, 0.0) : StateDistribution(0.0, 1.0);
}

StateDistribution stationary_distribution(const MarkovParams& params) {
  if (params.degenerate()) {
    throw Error(Errc::DegenerateChain,
                "lambda + mu = 0: the frozen chain has no unique stationary distribution");
  }
  const double total = params.lambda() + params.mu();
  return {params.mu() / total, params.lambda() / total};
}

ChannelState draw_state(const StateDistribution& dist, Rng& rng) {
  return rng.uniform() < dist.p_active() ? ChannelState::Active : ChannelState::Idle;
}

void sample_path_into(const MarkovParams& params, ChannelState initial,
                      std::span<ChannelState> out, Rng& rng) {
  ChannelState x = initial;
  for (auto& slot : out) {
    x = step(x, params, rng);
    slot = x;
  }
}

std::vector<ChannelState> sample_path(const MarkovParams& params, ChannelState initial,
                                      std::size_t n_steps, Rng& rng) {
  if (n_steps == 0) {
    throw Error(Errc::InvalidArgument, "sample_path needs n_steps >= 1");
  }
  std::vector<ChannelState> path(n_steps);
  sample_path_into(params, initial, path, rng);
  return path;
}

std::vector<ChannelState> sample_path(const MarkovParams& params,
                                      const StateDistribution& initial, std::size_t n_steps,
                                      Rng& rng) {
  if (n_steps == 0) {
    throw Error(Errc::InvalidArgument, "sample_path needs n_steps >= 1");
  }
  const ChannelState x0 = draw_state(initial, rng);
  return sample_path(params, x0, n_steps, rng);
}

namespace {

// Returns the next Pr{Active}; Pr{Idle} is its complement.
double next_active(double p_idle, double p_active, const MarkovParams& params) {
  const double p = p_idle * params.lambda() + p_active * (1.0 - params.mu());
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

StateDistribution evolve_distribution(const StateDistribution& initial,
                                      const MarkovParams& params, std::size_t n_steps) {
  if (n_steps == 0) return initial;
  double p_idle = initial.p_idle();
  double p_active = initial.p_active();
  for (std::size_t n = 0; n < n_steps; ++n) {
    p_active = next_active(p_idle, p_active, params);
    p_idle = 1.0 - p_active;
  }
  return {p_idle, p_active};
}

std::vector<double> active_probability_trajectory(const StateDistribution& initial,
                                                  const MarkovParams& params,
                                                  std::size_t n_steps) {
  std::vector<double> out(n_steps);
  double p_idle = initial.p_idle();
  double p_active = initial.p_active();
  for (auto& slot : out) {
    p_active = next_active(p_idle, p_active, params);
    p_idle = 1.0 - p_active;
    slot = p_active;
  }
  return out;
}

TransitionCounts count_transitions(std::span<const ChannelState> trace) {
  TransitionCounts counts;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const bool from_active = trace[i - 1] == ChannelState::Active;
    const bool to_active = trace[i] == ChannelState::Active;
    if (from_active) {
      ++(to_active ? counts.active_to_active : counts.active_to_idle);
    } else {
      ++(to_active ? counts.idle_to_active : counts.idle_to_idle);
    }
  }
  return counts;
}

MarkovParams estimate_params(std::span<const ChannelState> trace, EstimateOptions options) {
  if (trace.size() < 2) {
    throw Error(Errc::InsufficientData, "trace needs at least 2 observations");
  }
  const TransitionCounts c = count_transitions(trace);
  if (options.pseudo_count) {
    return {(static_cast<double>(c.idle_to_active) + 1.0) / (static_cast<double>(c.from_idle()) + 2.0),
            (static_cast<double>(c.active_to_idle) + 1.0) /
                (static_cast<double>(c.from_active()) + 2.0)};
  }
  if (c.from_idle() == 0) {
    throw Error(Errc::InsufficientData, "lambda unidentifiable: no transition starts in the idle state");
  }
  if (c.from_active() == 0) {
    throw Error(Errc::InsufficientData, "mu unidentifiable: no transition starts in the active state");
  }
  return {static_cast<double>(c.idle_to_active) / static_cast<double>(c.from_idle()),
          static_cast<double>(c.active_to_idle) / static_cast<double>(c.from_active())};
}

}  // namespace specpredict
