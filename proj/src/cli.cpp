#include "specpredict/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "specpredict/error.hpp"
#include "specpredict/markov.hpp"
#include "specpredict/predictor.hpp"
#include "specpredict/scenario_io.hpp"

namespace specpredict::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static const auto instance = [] {
    auto l = spdlog::stderr_color_mt("specpredict");
    l->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("SPECPREDICT_LOG")) {
      l->set_level(spdlog::level::from_str(env));
    }
    return l;
  }();
  return instance;
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw Error(Errc::Io, "cannot write " + path.string());
}

/// Output directory populated through a staging area; nothing appears in the
/// target until commit().
class StagedOutput {
 public:
  explicit StagedOutput(fs::path target) : target_(std::move(target)) {
    fs::create_directories(target_);
    staging_ = target_ / ".staging-predict";
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;

  ~StagedOutput() {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }

  const fs::path& staging() const noexcept { return staging_; }

  void commit() {
    std::vector<fs::path> entries;
    for (const auto& entry : fs::directory_iterator(staging_)) entries.push_back(entry.path());
    for (const auto& from : entries) {
      const fs::path to = target_ / from.filename();
      fs::remove_all(to);
      fs::rename(from, to);
    }
  }

 private:
  fs::path target_;
  fs::path staging_;
};

fs::path timeline_path(const fs::path& root, const std::string& user, std::size_t replica,
                       std::size_t n_replicas) {
  if (n_replicas <= 1) return root / "timelines" / (user + ".csv");
  return root / "timelines" / user / fmt::format("replica_{}.csv", replica);
}

/// Writes Monte Carlo chunks as `step,state` CSV and tallies ensemble counts.
class CsvTimelineSink final : public TimelineSink {
 public:
  CsvTimelineSink(fs::path root, const Scenario& scenario, std::size_t n_replicas)
      : root_(std::move(root)), n_replicas_(n_replicas) {
    for (const auto& u : scenario.users) {
      ids_.push_back(u.id);
      if (n_replicas_ > 1) fs::create_directories(root_ / "timelines" / u.id);
    }
    fs::create_directories(root_ / "timelines");
    if (n_replicas_ > 1) counts_.assign(ids_.size(), std::vector<std::uint64_t>(scenario.n_steps, 0));
  }

  void write(std::size_t replica, std::size_t user_index, std::size_t first_step,
             std::span<const AvailabilityState> states) override {
    buffer_.clear();
    if (first_step == 1) buffer_.append("step,state\n");
    auto it = std::back_inserter(buffer_);
    for (std::size_t k = 0; k < states.size(); ++k) {
      const bool occupied = states[k] == AvailabilityState::Occupied;
      fmt::format_to(it, "{},{}\n", first_step + k, occupied ? 1 : 0);
      if (!counts_.empty() && occupied) ++counts_[user_index][first_step - 1 + k];
    }
    const auto path = timeline_path(root_, ids_[user_index], replica, n_replicas_);
    std::ofstream f(path, std::ios::binary | (first_step == 1 ? std::ios::trunc : std::ios::app));
    f.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!f) throw Error(Errc::Io, "cannot write " + path.string());
  }

  void write_ensemble() const {
    if (counts_.empty()) return;
    fs::create_directories(root_ / "ensemble");
    for (std::size_t u = 0; u < ids_.size(); ++u) {
      std::string text = "step,occupancy_freq\n";
      for (std::size_t n = 0; n < counts_[u].size(); ++n) {
        const double freq = static_cast<double>(counts_[u][n]) / static_cast<double>(n_replicas_);
        text += fmt::format("{},{}\n", n + 1, format_probability(freq));
      }
      write_file(root_ / "ensemble" / (ids_[u] + ".csv"), text);
    }
  }

 private:
  fs::path root_;
  std::size_t n_replicas_;
  std::vector<std::string> ids_;
  std::vector<std::vector<std::uint64_t>> counts_;
  std::string buffer_;
};

void write_analytic_timelines(const fs::path& root, const PredictionReport& report) {
  fs::create_directories(root / "timelines");
  for (const auto& user : report.users) {
    std::string text = "step,occupancy_prob\n";
    for (std::size_t n = 0; n < user.occupancy_probs.size(); ++n) {
      text += fmt::format("{},{}\n", n + 1, format_probability(user.occupancy_probs[n]));
    }
    write_file(root / "timelines" / (user.user_id + ".csv"), text);
  }
}

json summary_json(const ScenarioFile& file, const RunOverrides& overrides,
                  const PredictionReport& report, unsigned workers) {
  const Scenario& s = file.scenario;
  json run = {{"n_steps", s.n_steps},
              {"basic_model", to_string(s.model.basic)},
              {"clutter_model", to_string(s.model.clutter)},
              {"overrides", overrides_to_json(overrides)}};
  if (const auto* mc = std::get_if<MonteCarloMode>(&s.mode)) {
    run["mode"] = "monte_carlo";
    run["seed"] = mc->seed;
    run["n_replicas"] = mc->n_replicas;
  } else {
    run["mode"] = "analytic";
  }

  const std::size_t replicas = report.n_replicas();
  json users = json::array();
  for (const auto& u : report.users) {
    json entry = {{"id", u.user_id},
                  {"range", u.range == RangeClass::InRange ? "in_range" : "out_of_range"},
                  {"l_basic_db", u.loss.l_basic_db},
                  {"l_clutter_db", u.loss.l_clutter_db},
                  {"l_total_db", u.loss.l_total_db},
                  {"p_rx_dbm", u.p_rx_dbm},
                  {"availability_fraction", u.summary.availability_fraction}};
    if (u.summary.longest_free_run) entry["longest_free_run"] = *u.summary.longest_free_run;
    if (u.summary.longest_occupied_run) {
      entry["longest_occupied_run"] = *u.summary.longest_occupied_run;
    }
    entry["timeline"] = replicas > 1 ? "timelines/" + u.user_id + "/"
                                     : "timelines/" + u.user_id + ".csv";
    if (replicas > 1) entry["ensemble"] = "ensemble/" + u.user_id + ".csv";
    users.push_back(std::move(entry));
  }

  return {{"scenario", scenario_to_json(file)},
          {"run", std::move(run)},
          {"users", std::move(users)},
          {"stats",
           {{"loss_evaluations", report.stats.loss_evaluations},
            {"threshold_comparisons", report.stats.threshold_comparisons}}},
          {"execution", {{"wall_time_s", report.wall_time_s}, {"workers", workers}}}};
}

struct PredictArgs {
  std::string scenario;
  std::string out_dir;
  RunOverrides overrides;
  unsigned workers = 0;
  std::size_t max_cells = RunOptions{}.max_cells_in_memory;
};

int cmd_predict(const PredictArgs& args, std::ostream& out) {
  ScenarioFile file = load_scenario(args.scenario);
  apply_overrides(file, args.overrides);
  const Scenario& scenario = file.scenario;
  validate(scenario);

  RunOptions options;
  options.workers = resolve_workers(args.workers);
  options.max_cells_in_memory = args.max_cells;
  options.keep_timelines = false;
  logger()->info("predict: {} users, {} steps, {} workers", scenario.users.size(), scenario.n_steps,
                 options.workers);

  StagedOutput output(args.out_dir);
  PredictionReport report;
  if (const auto* mc = std::get_if<MonteCarloMode>(&scenario.mode)) {
    CsvTimelineSink sink(output.staging(), scenario, mc->n_replicas);
    report = predict_monte_carlo(scenario, options, &sink);
    sink.write_ensemble();
  } else {
    report = predict_analytic(scenario);
    write_analytic_timelines(output.staging(), report);
  }
  write_file(output.staging() / "summary.json",
             summary_json(file, args.overrides, report, options.workers).dump(2) + "\n");
  output.commit();

  for (const auto& u : report.users) {
    out << fmt::format("{} {} availability={:.6f}\n", u.user_id,
                       u.range == RangeClass::InRange ? "in_range" : "out_of_range",
                       u.summary.availability_fraction);
  }
  logger()->info("predict finished in {:.3f} s", report.wall_time_s);
  return kExitOk;
}

int cmd_stationary(double lambda, double mu, std::ostream& out) {
  const auto pi = stationary_distribution(MarkovParams(lambda, mu));
  out << fmt::format("pi_idle={:.6f}, pi_active={:.6f}\n", pi.p_idle(), pi.p_active());
  return kExitOk;
}

struct RangeArgs {
  std::string scenario;
  double h_rx_m = 1.5;
  std::string clutter_env = "open";
  double loc_pct = 50.0;
  std::optional<double> d_min_km;
  std::optional<double> d_max_km;
};

int cmd_range(const RangeArgs& args, std::ostream& out) {
  const ScenarioFile file = load_scenario(args.scenario, /*require_users=*/false);
  const Scenario& s = file.scenario;

  UserSite site;
  site.h_rx_m = args.h_rx_m;
  site.loc_pct = args.loc_pct;
  if (args.clutter_env == "open") {
    site.clutter_env = ClutterEnvironment::Open;
  } else if (args.clutter_env == "suburban") {
    site.clutter_env = ClutterEnvironment::Suburban;
  } else if (args.clutter_env == "urban") {
    site.clutter_env = ClutterEnvironment::Urban;
  } else {
    throw ValidationError("--clutter-env", "expected open, suburban or urban");
  }
  if (!(site.h_rx_m >= 1.0)) throw ValidationError("--h-rx", "must be >= 1 m");
  if (!(site.loc_pct > 0.0 && site.loc_pct < 100.0)) {
    throw ValidationError("--loc-pct", "must be in (0, 100)");
  }

  double d_min = 1e-3;
  double d_max = s.model.basic == BasicModel::SmoothEarth528Like ? kSmoothEarthMaxDistanceKm : 1e4;
  for (const auto* table : {s.model.basic_table.get(), s.model.clutter_table.get()}) {
    if (table) {
      d_min = std::max(d_min, table->min_distance_km());
      d_max = std::min(d_max, table->max_distance_km());
    }
  }
  if (args.d_min_km) d_min = *args.d_min_km;
  if (args.d_max_km) d_max = *args.d_max_km;

  const RangeResult result =
      interference_range(s.model, s.radio, link_geometry(s.primary, site), d_min, d_max);
  if (const auto* d = std::get_if<RangeDistance>(&result)) {
    out << fmt::format("{:.3f} km\n", d->km);
  } else {
    out << (std::get<NoCrossing>(result) == NoCrossing::AlwaysIn ? "ALWAYS_IN\n" : "ALWAYS_OUT\n");
  }
  return kExitOk;
}

OccupancyTrace read_trace(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open trace " + path.string());
  OccupancyTrace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      std::string_view token(line.data() + pos, end - pos);
      while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
      while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
      if (token == "0") {
        trace.push_back(ChannelState::Idle);
      } else if (token == "1") {
        trace.push_back(ChannelState::Active);
      } else if (!token.empty() || end < line.size()) {
        throw ParseError(line_no, "expected 0 or 1, got '" + std::string(token) + "'");
      }
      pos = end + 1;
    }
  }
  return trace;
}

int cmd_estimate(const std::string& trace_path, bool pseudo_count, std::ostream& out) {
  const OccupancyTrace trace = read_trace(trace_path);
  const MarkovParams params = estimate_params(trace, {.pseudo_count = pseudo_count});
  const TransitionCounts c = count_transitions(trace);
  out << fmt::format("lambda={:.6f}, mu={:.6f}\n", params.lambda(), params.mu());
  out << fmt::format("transitions: 0->0={} 0->1={} 1->0={} 1->1={} (n={})\n", c.idle_to_idle,
                     c.idle_to_active, c.active_to_idle, c.active_to_active, trace.size());
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectrum availability prediction from a two-state primary activity model"};
  app.require_subcommand(1);

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "Predict availability timelines for a scenario");
  p->add_option("--scenario", predict.scenario, "Scenario JSON file")->required();
  p->add_option("--out", predict.out_dir, "Output directory")->required();
  p->add_option("--seed", predict.overrides.seed, "Override run.seed");
  p->add_option("--n-steps", predict.overrides.n_steps, "Override run.n_steps");
  p->add_option("--mode", predict.overrides.mode, "Override run.mode (monte_carlo|analytic)");
  p->add_option("--replicas", predict.overrides.n_replicas, "Override run.n_replicas");
  p->add_option("--workers", predict.workers, "Worker threads (default: all cores)");
  p->add_option("--max-cells", predict.max_cells, "Cells held in memory before streaming in chunks");

  double lambda = 0.0;
  double mu = 0.0;
  auto* st = app.add_subcommand("stationary", "Print the stationary distribution");
  st->add_option("lambda", lambda, "Pr{idle -> active}")->required();
  st->add_option("mu", mu, "Pr{active -> idle}")->required();

  RangeArgs range;
  auto* r = app.add_subcommand("range", "Distance at which the primary stops interfering");
  r->add_option("--scenario", range.scenario, "Scenario JSON file (users optional)")->required();
  r->add_option("--h-rx", range.h_rx_m, "Receiver height, m");
  r->add_option("--clutter-env", range.clutter_env, "open|suburban|urban");
  r->add_option("--loc-pct", range.loc_pct, "Clutter location percentage");
  r->add_option("--d-min", range.d_min_km, "Bracket start, km");
  r->add_option("--d-max", range.d_max_km, "Bracket end, km");

  std::string trace_path;
  bool pseudo_count = false;
  auto* e = app.add_subcommand("estimate", "Estimate lambda and mu from a 0/1 trace");
  e->add_option("trace", trace_path, "Trace file, one state per line or comma separated")->required();
  e->add_flag("--pseudo-count", pseudo_count, "Add-one smoothing of the transition counts");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitValidation;
  }

  try {
    if (*p) return cmd_predict(predict, out);
    if (*st) return cmd_stationary(lambda, mu, out);
    if (*r) return cmd_range(range, out);
    if (*e) return cmd_estimate(trace_path, pseudo_count, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return ex.code() == Errc::Io ? kExitRuntime : kExitValidation;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace specpredict::cli
