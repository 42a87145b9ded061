#include "specpredict/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string_view>

#include <fmt/format.h>

#include "specpredict/error.hpp"

namespace specpredict {

using nlohmann::json;

namespace {

std::string join(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

/// Cursor over one JSON object that remembers its path and which keys were read.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError(path_.empty() ? "$" : path_, "expected an object");
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    const std::set<std::string_view> allowed(keys);
    for (const auto& [key, _] : node_.items()) {
      if (!allowed.contains(key)) throw ValidationError(join(path_, key), "unknown key");
    }
  }

  bool has(std::string_view key) const { return node_.contains(std::string(key)); }
  std::string path(std::string_view key) const { return join(path_, key); }
  const json& at(std::string_view key) const {
    if (!has(key)) throw ValidationError(path(key), "missing required key");
    return node_.at(std::string(key));
  }

  double number(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ValidationError(path(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(path(key), "must be finite");
    return d;
  }

  double number_or(std::string_view key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t unsigned_integer(std::string_view key) const {
    const json& v = at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ValidationError(path(key), "must be non-negative");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ValidationError(path(key), "expected an integer");
  }

  std::string string(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ValidationError(path(key), "expected a string");
    return v.get<std::string>();
  }

  std::string string_or(std::string_view key, std::string fallback) const {
    return has(key) ? string(key) : fallback;
  }

 private:
  const json& node_;
  std::string path_;
};

void check(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ValidationError(path, message);
}

BasicModel parse_basic_model(const std::string& s, const std::string& path) {
  if (s == "free_space") return BasicModel::FreeSpace;
  if (s == "smooth_earth") return BasicModel::SmoothEarth528Like;
  if (s == "table") return BasicModel::Table;
  throw ValidationError(path, "expected one of free_space, smooth_earth, table; got '" + s + "'");
}

ClutterModel parse_clutter_model(const std::string& s, const std::string& path) {
  if (s == "none") return ClutterModel::None;
  if (s == "statistical") return ClutterModel::StatisticalClutter;
  if (s == "table") return ClutterModel::Table;
  throw ValidationError(path, "expected one of none, statistical, table; got '" + s + "'");
}

ClutterEnvironment parse_environment(const std::string& s, const std::string& path) {
  if (s == "open") return ClutterEnvironment::Open;
  if (s == "suburban") return ClutterEnvironment::Suburban;
  if (s == "urban") return ClutterEnvironment::Urban;
  throw ValidationError(path, "expected one of open, suburban, urban; got '" + s + "'");
}

PredictionMode parse_mode(const std::string& s, const std::string& path) {
  if (s == "monte_carlo") return MonteCarloMode{};
  if (s == "analytic") return AnalyticMode{};
  throw ValidationError(path, "expected monte_carlo or analytic; got '" + s + "'");
}

std::optional<ChannelState> parse_initial(const std::string& s, const std::string& path) {
  if (s == "stationary") return std::nullopt;
  if (s == "idle") return ChannelState::Idle;
  if (s == "active") return ChannelState::Active;
  throw ValidationError(path, "expected stationary, idle or active; got '" + s + "'");
}

bool valid_user_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::shared_ptr<const LossTable> read_table(const std::filesystem::path& file, const std::string& path) {
  try {
    return std::make_shared<const LossTable>(load_loss_table(file));
  } catch (const Error& e) {
    throw ValidationError(path, e.what());
  }
}

void parse_markov(const ObjectReader& r, Scenario& s) {
  r.allow_only({"lambda", "mu"});
  const double lambda = r.number("lambda");
  const double mu = r.number("mu");
  check(lambda >= 0.0 && lambda <= 1.0, r.path("lambda"), "must be a probability in [0, 1]");
  check(mu >= 0.0 && mu <= 1.0, r.path("mu"), "must be a probability in [0, 1]");
  s.markov = MarkovParams(lambda, mu);
}

void parse_radio(const ObjectReader& r, Scenario& s) {
  r.allow_only({"p_tx_dbm", "g_t_dbi", "g_r_dbi", "p_th_dbm"});
  s.radio.p_tx_dbm = r.number("p_tx_dbm");
  s.radio.g_t_dbi = r.number_or("g_t_dbi", 0.0);
  s.radio.g_r_dbi = r.number_or("g_r_dbi", 0.0);
  s.radio.p_th_dbm = r.number("p_th_dbm");
}

void parse_primary(const ObjectReader& r, Scenario& s) {
  r.allow_only({"h_tx_m", "freq_mhz", "time_pct"});
  s.primary.h_tx_m = r.number("h_tx_m");
  s.primary.freq_mhz = r.number("freq_mhz");
  s.primary.time_pct = r.number_or("time_pct", 50.0);
  check(s.primary.h_tx_m >= 1.0, r.path("h_tx_m"), "must be >= 1 m");
  check(s.primary.freq_mhz > 0.0, r.path("freq_mhz"), "must be > 0");
  check(s.primary.time_pct > 0.0 && s.primary.time_pct < 100.0, r.path("time_pct"),
        "must be in (0, 100)");
}

void parse_propagation(const ObjectReader& r, ScenarioFile& f, const ParseOptions& options) {
  r.allow_only({"basic_model", "clutter_model", "parameters", "basic_table", "clutter_table"});
  auto& model = f.scenario.model;
  model.basic = parse_basic_model(r.string_or("basic_model", "free_space"), r.path("basic_model"));
  model.clutter = parse_clutter_model(r.string_or("clutter_model", "none"), r.path("clutter_model"));

  if (r.has("parameters")) {
    const ObjectReader p(r.at("parameters"), r.path("parameters"));
    p.allow_only({"beyond_horizon_db_per_km", "time_sigma_db", "urban_median_db",
                  "suburban_median_db", "urban_sigma_db", "suburban_sigma_db"});
    auto& se = model.smooth_earth;
    auto& sc = model.statistical_clutter;
    se.beyond_horizon_db_per_km = p.number_or("beyond_horizon_db_per_km", se.beyond_horizon_db_per_km);
    se.time_sigma_db = p.number_or("time_sigma_db", se.time_sigma_db);
    sc.urban_median_db = p.number_or("urban_median_db", sc.urban_median_db);
    sc.suburban_median_db = p.number_or("suburban_median_db", sc.suburban_median_db);
    sc.urban_sigma_db = p.number_or("urban_sigma_db", sc.urban_sigma_db);
    sc.suburban_sigma_db = p.number_or("suburban_sigma_db", sc.suburban_sigma_db);
    for (const char* key : {"beyond_horizon_db_per_km", "time_sigma_db", "urban_median_db",
                            "suburban_median_db", "urban_sigma_db", "suburban_sigma_db"}) {
      if (p.has(key)) check(p.number(key) >= 0.0, p.path(key), "must be >= 0");
    }
  }

  const auto table_path = [&](const char* key, bool wanted) -> std::optional<std::filesystem::path> {
    if (!wanted) {
      check(!r.has(key), r.path(key), "only allowed when the matching model is 'table'");
      return std::nullopt;
    }
    std::filesystem::path p = r.string(key);
    if (p.is_relative()) p = options.base_dir / p;
    return p.lexically_normal();
  };
  f.basic_table_path = table_path("basic_table", model.basic == BasicModel::Table);
  f.clutter_table_path = table_path("clutter_table", model.clutter == ClutterModel::Table);
  if (f.basic_table_path) model.basic_table = read_table(*f.basic_table_path, r.path("basic_table"));
  if (f.clutter_table_path) {
    model.clutter_table = read_table(*f.clutter_table_path, r.path("clutter_table"));
  }

  const double freq = f.scenario.primary.freq_mhz;
  if (model.basic == BasicModel::SmoothEarth528Like) {
    check(freq >= kSmoothEarthMinFreqMhz && freq <= kSmoothEarthMaxFreqMhz, "primary.freq_mhz",
          "smooth_earth model needs 125-15500 MHz");
  }
  if (model.clutter == ClutterModel::StatisticalClutter) {
    check(freq >= kClutterMinFreqMhz && freq <= kClutterMaxFreqMhz, "primary.freq_mhz",
          "statistical clutter needs 500-67000 MHz");
  }
}

void parse_users(const json& node, const std::string& path, ScenarioFile& f) {
  if (!node.is_array()) throw ValidationError(path, "expected an array");
  if (node.empty()) throw ValidationError(path, "needs at least one user");
  std::set<std::string> ids;
  const auto& model = f.scenario.model;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string upath = path + "[" + std::to_string(i) + "]";
    const ObjectReader r(node[i], upath);
    if (r.has("trajectory")) {
      throw ValidationError(r.path("trajectory"), "mobile users are not supported; geometry must be static");
    }
    r.allow_only({"id", "distance_km", "h_rx_m", "clutter_env", "loc_pct"});
    UserSite u;
    u.id = r.string("id");
    check(valid_user_id(u.id), r.path("id"), "must be non-empty and use only [A-Za-z0-9_.-]");
    check(ids.insert(u.id).second, r.path("id"), "duplicate user id '" + u.id + "'");
    u.distance_km = r.number("distance_km");
    u.h_rx_m = r.number_or("h_rx_m", 1.5);
    u.clutter_env = parse_environment(r.string_or("clutter_env", "open"), r.path("clutter_env"));
    u.loc_pct = r.number_or("loc_pct", 50.0);
    check(u.distance_km > 0.0, r.path("distance_km"), "must be > 0");
    check(u.h_rx_m >= 1.0, r.path("h_rx_m"), "must be >= 1 m");
    check(u.loc_pct > 0.0 && u.loc_pct < 100.0, r.path("loc_pct"), "must be in (0, 100)");

    if (model.basic == BasicModel::SmoothEarth528Like) {
      check(u.distance_km <= kSmoothEarthMaxDistanceKm, r.path("distance_km"),
            "smooth_earth model valid up to 1000 km");
    }
    for (const auto* table : {model.basic_table.get(), model.clutter_table.get()}) {
      if (table) {
        check(u.distance_km >= table->min_distance_km() && u.distance_km <= table->max_distance_km(),
              r.path("distance_km"), "outside the loss table's distance span");
      }
    }
    if (model.clutter == ClutterModel::StatisticalClutter) {
      check(u.clutter_env != ClutterEnvironment::Open, r.path("clutter_env"),
            "statistical clutter has no open-environment class");
    }
    f.scenario.users.push_back(std::move(u));
  }
}

void parse_run(const ObjectReader& r, Scenario& s) {
  r.allow_only({"n_steps", "mode", "seed", "n_replicas", "initial"});
  s.n_steps = r.unsigned_integer("n_steps");
  check(s.n_steps >= 1, r.path("n_steps"), "must be >= 1");
  s.mode = parse_mode(r.string_or("mode", "monte_carlo"), r.path("mode"));
  const std::uint64_t seed = r.has("seed") ? r.unsigned_integer("seed") : 0;
  const std::uint64_t replicas = r.has("n_replicas") ? r.unsigned_integer("n_replicas") : 1;
  check(replicas >= 1, r.path("n_replicas"), "must be >= 1");
  if (auto* mc = std::get_if<MonteCarloMode>(&s.mode)) {
    mc->seed = seed;
    mc->n_replicas = replicas;
  }
  s.initial = parse_initial(r.string_or("initial", "stationary"), r.path("initial"));
  if (!s.initial && s.markov.degenerate()) {
    throw ValidationError(r.path("initial"),
                          "stationary start needs lambda + mu > 0 (the chain is frozen)");
  }
}

std::string initial_name(const std::optional<ChannelState>& initial) {
  if (!initial) return "stationary";
  return *initial == ChannelState::Idle ? "idle" : "active";
}

}  // namespace

ScenarioFile parse_scenario(const json& doc, const ParseOptions& options) {
  const ObjectReader root(doc, "");
  root.allow_only({"markov", "radio", "primary", "propagation", "users", "run"});
  ScenarioFile f;
  parse_markov(ObjectReader(root.at("markov"), "markov"), f.scenario);
  parse_radio(ObjectReader(root.at("radio"), "radio"), f.scenario);
  parse_primary(ObjectReader(root.at("primary"), "primary"), f.scenario);
  if (root.has("propagation")) {
    parse_propagation(ObjectReader(root.at("propagation"), "propagation"), f, options);
  }
  if (options.require_users || root.has("users")) parse_users(root.at("users"), "users", f);
  if (options.require_users || root.has("run")) {
    parse_run(ObjectReader(root.at("run"), "run"), f.scenario);
  }
  return f;
}

ScenarioFile load_scenario(const std::filesystem::path& path, bool require_users) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
  ParseOptions options;
  options.base_dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  options.require_users = require_users;
  return parse_scenario(doc, options);
}

json scenario_to_json(const ScenarioFile& file) {
  const Scenario& s = file.scenario;
  json doc;
  doc["markov"] = {{"lambda", s.markov.lambda()}, {"mu", s.markov.mu()}};
  doc["radio"] = {{"p_tx_dbm", s.radio.p_tx_dbm},
                  {"g_t_dbi", s.radio.g_t_dbi},
                  {"g_r_dbi", s.radio.g_r_dbi},
                  {"p_th_dbm", s.radio.p_th_dbm}};
  doc["primary"] = {{"h_tx_m", s.primary.h_tx_m},
                    {"freq_mhz", s.primary.freq_mhz},
                    {"time_pct", s.primary.time_pct}};
  const auto& se = s.model.smooth_earth;
  const auto& sc = s.model.statistical_clutter;
  json prop = {{"basic_model", to_string(s.model.basic)},
               {"clutter_model", to_string(s.model.clutter)},
               {"parameters",
                {{"beyond_horizon_db_per_km", se.beyond_horizon_db_per_km},
                 {"time_sigma_db", se.time_sigma_db},
                 {"urban_median_db", sc.urban_median_db},
                 {"suburban_median_db", sc.suburban_median_db},
                 {"urban_sigma_db", sc.urban_sigma_db},
                 {"suburban_sigma_db", sc.suburban_sigma_db}}}};
  if (file.basic_table_path) prop["basic_table"] = file.basic_table_path->string();
  if (file.clutter_table_path) prop["clutter_table"] = file.clutter_table_path->string();
  doc["propagation"] = std::move(prop);

  json users = json::array();
  for (const auto& u : s.users) {
    users.push_back({{"id", u.id},
                     {"distance_km", u.distance_km},
                     {"h_rx_m", u.h_rx_m},
                     {"clutter_env", to_string(u.clutter_env)},
                     {"loc_pct", u.loc_pct}});
  }
  doc["users"] = std::move(users);

  json run = {{"n_steps", s.n_steps}, {"initial", initial_name(s.initial)}};
  if (const auto* mc = std::get_if<MonteCarloMode>(&s.mode)) {
    run["mode"] = "monte_carlo";
    run["seed"] = mc->seed;
    run["n_replicas"] = mc->n_replicas;
  } else {
    run["mode"] = "analytic";
  }
  doc["run"] = std::move(run);
  return doc;
}

void apply_overrides(ScenarioFile& file, const RunOverrides& overrides) {
  Scenario& s = file.scenario;
  if (overrides.mode) {
    const auto* old_mc = std::get_if<MonteCarloMode>(&s.mode);
    const MonteCarloMode previous = old_mc ? *old_mc : MonteCarloMode{};
    s.mode = parse_mode(*overrides.mode, "--mode");
    if (auto* mc = std::get_if<MonteCarloMode>(&s.mode)) *mc = previous;
  }
  if (overrides.n_steps) {
    check(*overrides.n_steps >= 1, "--n-steps", "must be >= 1");
    s.n_steps = *overrides.n_steps;
  }
  if (auto* mc = std::get_if<MonteCarloMode>(&s.mode)) {
    if (overrides.seed) mc->seed = *overrides.seed;
    if (overrides.n_replicas) {
      check(*overrides.n_replicas >= 1, "--replicas", "must be >= 1");
      mc->n_replicas = *overrides.n_replicas;
    }
  }
}

json overrides_to_json(const RunOverrides& overrides) {
  json out = json::object();
  if (overrides.seed) out["seed"] = *overrides.seed;
  if (overrides.n_steps) out["n_steps"] = *overrides.n_steps;
  if (overrides.mode) out["mode"] = *overrides.mode;
  if (overrides.n_replicas) out["n_replicas"] = *overrides.n_replicas;
  return out;
}

std::string format_probability(double p) {
  std::string s = fmt::format("{}", p);
  if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
  return s;
}

}  // namespace specpredict
