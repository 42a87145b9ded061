// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "cli_helpers.hpp"
#include "oracles.hpp"
#include "specpredict/error.hpp"
#include "specpredict/predictor.hpp"

using namespace specpredict;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Scenario free_space_scenario(double lambda, double mu, std::size_t n_steps) {
  Scenario s;
  s.markov = MarkovParams(lambda, mu);
  s.radio = {30.0, 0.0, 0.0, -90.0};
  s.primary = {10.0, 1000.0, 50.0};
  s.n_steps = n_steps;
  return s;
}

UserSite site(std::string id, double d_km, double h_rx = 10.0) {
  UserSite u;
  u.id = std::move(id);
  u.distance_km = d_km;
  u.h_rx_m = h_rx;
  return u;
}

double in_unit_box(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// 1. Stationary reproduction.
Outcome stationary_reproduction() {
  const auto start = Clock::now();
  Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double lambda = in_unit_box(rng, 0.05, 0.95);
    const double mu = in_unit_box(rng, 0.05, 0.95);
    Scenario s = free_space_scenario(lambda, mu, 1'000'000);
    s.mode = MonteCarloMode{derive_seed(2002, trial), 1};
    s.users = {site("u", 1.0)};
    const auto report = predict_monte_carlo(s);
    if (report.users[0].range != RangeClass::InRange) return {false, "test user not in range"};
    const double idle = report.users[0].summary.availability_fraction;
    worst = std::max(worst, std::abs(idle - mu / (lambda + mu)));
  }
  const double t = elapsed_s(start);
  return {worst <= 0.01 && t < 5.0,
          fmt::format("max |idle - pi_0| = {:.5f} (<= 0.01), {:.2f} s (< 5 s)", worst, t)};
}

// 2. Monte Carlo ensemble vs analytic probabilities.
Outcome mc_analytic_consistency() {
  const auto start = Clock::now();
  Rng rng(3003);
  const std::size_t replicas = 100'000;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Scenario s = free_space_scenario(in_unit_box(rng, 0.05, 0.95), in_unit_box(rng, 0.05, 0.95), 20);
    const double which = rng.uniform();
    if (which < 1.0 / 3.0) {
      s.initial = ChannelState::Idle;
    } else if (which < 2.0 / 3.0) {
      s.initial = ChannelState::Active;
    }
    s.users = {site("a", in_unit_box(rng, 0.1, 20.0)), site("b", in_unit_box(rng, 0.1, 60.0))};

    s.mode = MonteCarloMode{derive_seed(4004, trial), replicas};
    const auto ensemble = ensemble_availability(predict_monte_carlo(s));
    s.mode = AnalyticMode{};
    const auto analytic = predict_analytic(s);

    for (std::size_t u = 0; u < s.users.size(); ++u) {
      for (std::size_t n : {1u, 5u, 20u}) {
        const double p = analytic.users[u].occupancy_probs[n - 1];
        const double f = ensemble[u][n - 1];
        const double bound = 4.0 * oracle::binomial_se(p, replicas);
        const double diff = std::abs(f - p);
        if (diff > bound) {
          return {false, fmt::format("scenario {} user {} step {}: |{} - {}| > {}", trial, u, n, f, p, bound)};
        }
        if (bound > 0) worst_ratio = std::max(worst_ratio, diff / bound * 4.0);
      }
    }
  }
  const double t = elapsed_s(start);
  return {t < 30.0, fmt::format("max deviation {:.2f} SE (<= 4), {:.2f} s (< 30 s)", worst_ratio, t)};
}

// 3. Geometric convergence from idle.
Outcome convergence_rate() {
  const MarkovParams params(0.2, 0.3);
  const auto traj = active_probability_trajectory(StateDistribution(1.0, 0.0), params, 40);
  double worst_oracle = 0.0;
  for (std::size_t n = 1; n <= 40; ++n) {
    const double p = evolve_distribution(StateDistribution(1.0, 0.0), params, n).p_active();
    const double exact = oracle::evolve_by_matrix_power(1.0, 0.0, 0.2, 0.3, n)(1);
    worst_oracle = std::max({worst_oracle, std::abs(p - exact), std::abs(traj[n - 1] - exact)});
    if (std::abs(p - 0.4) > 0.4 * std::pow(0.5, double(n)) + 1e-12) {
      return {false, fmt::format("n = {}: |{} - 0.4| exceeds 0.4 * 0.5^n", n, p)};
    }
  }
  return {worst_oracle <= 1e-12,
          fmt::format("bound holds for n <= 40; max |iterated - matrix power| = {:.1e}", worst_oracle)};
}

// 4. Exclusion range against Friis inversion.
Outcome exclusion_range() {
  const PropagationModel model;
  LinkGeometry g;
  g.freq_mhz = 1000.0;
  g.h_tx_m = 10.0;
  g.h_rx_m = 10.0;
  const auto result = interference_range(model, {30.0, 0.0, 0.0, -90.0}, g, 0.001, 1000.0);
  const auto* d = std::get_if<RangeDistance>(&result);
  if (!d) return {false, "no crossing found"};
  const double oracle_km = oracle::friis_distance_km(120.0, 1000.0);
  return {std::abs(d->km - oracle_km) <= 0.01,
          fmt::format("range {:.4f} km vs Friis inversion 10^((120-92.45)/20) = {:.4f} km (+-0.01)", d->km,
                      oracle_km)};
}

// 5. Desk-scale throughput and O(N x M) scaling.
Outcome scaling() {
  const auto time_run = [](std::size_t n_steps, std::size_t n_users, bool keep, int reps) {
    Scenario s = free_space_scenario(0.2, 0.3, n_steps);
    s.mode = MonteCarloMode{5005, 1};
    for (std::size_t u = 0; u < n_users; ++u) {
      s.users.push_back(site("u" + std::to_string(u), 0.5 + 20.0 * double(u) / double(n_users)));
    }
    RunOptions options;
    options.keep_timelines = keep;
    double best = 1e300;
    for (int rep = 0; rep < reps; ++rep) {
      const auto start = Clock::now();
      const auto report = predict_monte_carlo(s, options);
      best = std::min(best, elapsed_s(start));
      if (report.stats.loss_evaluations != n_users) return -1.0;
    }
    return best;
  };
  const std::size_t n = 10'000;
  const std::size_t m = 1'000;
  const double desk = time_run(n, m, true, 3);
  // Ratios are timed on the streaming path.
  const double base = time_run(n, m, false, 11);
  const double twice_n = time_run(2 * n, m, false, 11);
  const double twice_m = time_run(n, 2 * m, false, 11);
  if (desk < 0 || base < 0 || twice_n < 0 || twice_m < 0) {
    return {false, "loss precomputation count mismatch"};
  }
  const bool ok = desk <= 5.0 && twice_n <= 2.5 * base && twice_m <= 2.5 * base;
  return {ok, fmt::format("(N,M) {:.3f} s with timelines kept (<= 5 s); streaming (N,M) {:.3f} s, "
                          "(2N,M) x{:.2f}, (N,2M) x{:.2f} (<= 2.5)",
                          desk, base, twice_n / base, twice_m / base)};
}

// 6. Byte-identical CLI output across runs and worker counts.
Outcome determinism() {
  const auto dir = oracle::scratch_dir("acceptance-determinism");
  auto doc = clitest::demo_scenario();
  doc["run"]["n_steps"] = 20000;
  doc["run"]["n_replicas"] = 3;
  clitest::spit(dir / "s.json", doc.dump());
  const auto scenario = (dir / "s.json").string();
  const unsigned max_workers = std::max(8u, std::thread::hardware_concurrency());

  const auto bundle = [&](const std::string& name, unsigned workers) {
    const auto r = clitest::run({"predict", "--scenario", scenario, "--out", (dir / name).string(),
                                 "--workers", std::to_string(workers)});
    auto files = r.status == 0 ? clitest::tree(dir / name) : decltype(clitest::tree(dir)){};
    std::erase_if(files, [](const auto& f) { return f.first == "summary.json"; });
    return files;
  };
  const auto first = bundle("run1", 1);
  const auto second = bundle("run2", 1);
  const auto parallel = bundle("run3", max_workers);
  fs::remove_all(dir);
  const bool ok = !first.empty() && first == second && first == parallel;
  return {ok, fmt::format("{} timeline files identical across 2 runs and workers 1 vs {}", first.size(),
                          max_workers)};
}

// 7. Parameter recovery from traces.
Outcome estimation() {
  const MarkovParams truth(0.2, 0.3);
  std::string detail;
  bool ok = true;
  for (auto [length, tol] : {std::pair<std::size_t, double>{1'000'000, 0.005}, {10'000, 0.05}}) {
    Rng rng(derive_seed(7007, length));
    const auto trace = sample_path(truth, stationary_distribution(truth), length, rng);
    const auto est = estimate_params(trace);
    const double err = std::max(std::abs(est.lambda() - 0.2), std::abs(est.mu() - 0.3));
    ok = ok && err <= tol;
    detail += fmt::format("n={}: lambda={:.4f} mu={:.4f} (tol {}) ", length, est.lambda(), est.mu(), tol);
  }
  return {ok, detail};
}

// 8. In-range users replay the primary path; out-of-range users stay free.
Outcome availability_identity() {
  Rng rng(8008);
  std::size_t in_count = 0;
  std::size_t out_count = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Scenario s = free_space_scenario(rng.uniform(), rng.uniform(), 50 + std::size_t(rng.uniform() * 450));
    s.radio = {in_unit_box(rng, 10.0, 50.0), in_unit_box(rng, 0.0, 10.0), in_unit_box(rng, 0.0, 5.0),
               in_unit_box(rng, -110.0, -70.0)};
    s.primary = {in_unit_box(rng, 1.0, 200.0), in_unit_box(rng, 100.0, 6000.0), 50.0};
    const double which = rng.uniform();
    if (which < 0.5 || s.markov.degenerate()) {
      s.initial = which < 0.25 ? ChannelState::Idle : ChannelState::Active;
    }
    const std::uint64_t seed = derive_seed(9009, trial);
    s.mode = MonteCarloMode{seed, 1};
    const std::size_t users = 1 + std::size_t(rng.uniform() * 8);
    std::vector<bool> expect_in;
    for (std::size_t u = 0; u < users; ++u) {
      auto user = site("u" + std::to_string(u), in_unit_box(rng, 0.05, 100.0), in_unit_box(rng, 1.0, 30.0));
      const double slant = std::hypot(user.distance_km, (s.primary.h_tx_m - user.h_rx_m) / 1000.0);
      const double p_rx = s.radio.p_tx_dbm + s.radio.g_t_dbi + s.radio.g_r_dbi -
                          oracle::friis_db(slant, s.primary.freq_mhz);
      if (std::abs(p_rx - s.radio.p_th_dbm) < 1e-9) continue;
      expect_in.push_back(p_rx >= s.radio.p_th_dbm);
      s.users.push_back(std::move(user));
    }
    if (s.users.empty()) continue;

    const auto report = predict_monte_carlo(s, {.workers = 1});

    Rng replay(derive_seed(seed, 0));
    const ChannelState x0 =
        s.initial ? *s.initial : draw_state(stationary_distribution(s.markov), replay);
    const auto path = sample_path(s.markov, x0, s.n_steps, replay);

    for (std::size_t u = 0; u < s.users.size(); ++u) {
      const auto& timeline = report.users[u].timelines[0];
      const bool in = report.users[u].range == RangeClass::InRange;
      if (in != expect_in[u]) return {false, fmt::format("scenario {} user {}: range class mismatch", trial, u)};
      for (std::size_t n = 0; n < s.n_steps; ++n) {
        const bool occupied = timeline[n] == AvailabilityState::Occupied;
        const bool expected = in && path[n] == ChannelState::Active;
        if (occupied != expected) {
          return {false, fmt::format("scenario {} user {} step {}: identity violated", trial, u, n + 1)};
        }
      }
      (in ? in_count : out_count) += 1;
    }
  }
  return {in_count > 0 && out_count > 0,
          fmt::format("1000 scenarios: {} in-range timelines == X_n, {} out-of-range all free", in_count,
                      out_count)};
}

// 9. Propagation property suites.
Outcome propagation_invariants() {
  Rng rng(9999);
  const int n = 10'000;
  auto basic_table = std::make_shared<LossTable>(std::vector{0.01, 1.0, 10.0, 100.0, 1000.0},
                                                 std::vector{60.0, 95.0, 120.0, 150.0, 190.0});
  auto clutter_table = std::make_shared<LossTable>(std::vector{0.01, 1000.0}, std::vector{5.0, 25.0});

  const auto random_geometry = [&] {
    LinkGeometry g;
    g.distance_km = in_unit_box(rng, 0.01, 999.0);
    g.h_tx_m = in_unit_box(rng, 1.0, 1000.0);
    g.h_rx_m = in_unit_box(rng, 1.0, 100.0);
    g.freq_mhz = in_unit_box(rng, 500.0, 15500.0);
    g.time_pct = in_unit_box(rng, 0.5, 99.5);
    g.clutter_env = rng.uniform() < 0.5 ? ClutterEnvironment::Urban : ClutterEnvironment::Suburban;
    g.loc_pct = in_unit_box(rng, 0.5, 99.5);
    return g;
  };

  int failures[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < n; ++i) {
    // Additivity over every model pair.
    PropagationModel model;
    model.basic = static_cast<BasicModel>(i % 3);
    model.clutter = static_cast<ClutterModel>((i / 3) % 3);
    model.basic_table = basic_table;
    model.clutter_table = clutter_table;
    const auto g = random_geometry();
    const auto r = total_loss(model, g);
    if (r.l_total_db != r.l_basic_db + r.l_clutter_db || r.l_basic_db != basic_loss(model, g) ||
        r.l_clutter_db != clutter_loss(model, g) || r.l_basic_db < 0 || r.l_clutter_db < 0) {
      ++failures[0];
    }
  }
  for (int i = 0; i < n; ++i) {
    // Strict monotonicity in distance (free space, smooth earth) and frequency (free space).
    PropagationModel fs_model;
    PropagationModel se_model;
    se_model.basic = BasicModel::SmoothEarth528Like;
    const auto g = random_geometry();
    auto farther = g;
    farther.distance_km = std::min(1000.0, g.distance_km * (1.0 + in_unit_box(rng, 1e-6, 1.0)));
    auto higher = g;
    higher.freq_mhz = g.freq_mhz * (1.0 + in_unit_box(rng, 1e-6, 1.0));
    if (!(basic_loss(fs_model, farther) > basic_loss(fs_model, g)) ||
        !(basic_loss(se_model, farther) > basic_loss(se_model, g)) ||
        !(basic_loss(fs_model, higher) > basic_loss(fs_model, g))) {
      ++failures[1];
    }
  }
  for (int i = 0; i < n; ++i) {
    // Line-of-sight reduction of smooth earth to Friis at median time.
    PropagationModel se_model;
    se_model.basic = BasicModel::SmoothEarth528Like;
    auto g = random_geometry();
    g.time_pct = 50.0;
    g.distance_km = in_unit_box(rng, 0.01, 0.5 * radio_horizon_km(g));
    const double slant = std::hypot(g.distance_km, (g.h_tx_m - g.h_rx_m) / 1000.0);
    if (std::abs(basic_loss(se_model, g) - oracle::friis_db(slant, g.freq_mhz)) > 0.01) ++failures[2];
  }
  for (int i = 0; i < n; ++i) {
    // Clutter percentile monotonicity; smooth-earth loss non-increasing in time_pct.
    PropagationModel model;
    model.basic = BasicModel::SmoothEarth528Like;
    model.clutter = ClutterModel::StatisticalClutter;
    const auto g = random_geometry();
    auto more = g;
    more.loc_pct = in_unit_box(rng, g.loc_pct, 99.9);
    if (clutter_loss(model, more) < clutter_loss(model, g)) ++failures[3];
    auto later = g;
    later.time_pct = in_unit_box(rng, g.time_pct, 99.9);
    if (basic_loss(model, later) > basic_loss(model, g)) ++failures[4];
  }
  const int total = failures[0] + failures[1] + failures[2] + failures[3] + failures[4];
  return {total == 0,
          fmt::format("failures over {} inputs each: additivity {}, monotonicity {}, LOS reduction {}, "
                      "clutter percentile {}, time percentile {}",
                      n, failures[0], failures[1], failures[2], failures[3], failures[4])};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 stationary reproduction", stationary_reproduction},
      {"AC2 Monte Carlo / analytic consistency", mc_analytic_consistency},
      {"AC3 convergence rate", convergence_rate},
      {"AC4 exclusion-range oracle", exclusion_range},
      {"AC5 desk-scale throughput and O(NxM) scaling", scaling},
      {"AC6 determinism", determinism},
      {"AC7 estimation consistency", estimation},
      {"AC8 availability identity", availability_identity},
      {"AC9 propagation invariants", propagation_invariants},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome{false, ""};
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += !outcome.pass;
    std::printf("[%s] %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
