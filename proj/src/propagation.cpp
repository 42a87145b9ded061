#include "specpredict/propagation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "specpredict/error.hpp"

namespace specpredict {

namespace {

std::string fmt_num(double v) { return std::to_string(v); }

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::InvalidArgument, what);
}

}  // namespace

void validate(const LinkGeometry& g) {
  require(std::isfinite(g.distance_km) && g.distance_km > 0.0, "distance_km must be > 0");
  require(std::isfinite(g.h_tx_m) && g.h_tx_m >= 1.0, "h_tx_m must be >= 1 m");
  require(std::isfinite(g.h_rx_m) && g.h_rx_m >= 1.0, "h_rx_m must be >= 1 m");
  require(std::isfinite(g.freq_mhz) && g.freq_mhz > 0.0, "freq_mhz must be > 0");
  require(g.time_pct > 0.0 && g.time_pct < 100.0, "time_pct must be in (0, 100)");
  require(g.loc_pct > 0.0 && g.loc_pct < 100.0, "loc_pct must be in (0, 100)");
}

// ---------------------------------------------------------------------------
// Loss tables

LossTable::LossTable(std::vector<double> distances_km, std::vector<double> losses_db)
    : distances_(std::move(distances_km)), losses_(std::move(losses_db)) {
  if (distances_.size() != losses_.size()) {
    throw Error(Errc::InvalidArgument, "loss table columns differ in length");
  }
  if (distances_.size() < 2) {
    throw Error(Errc::InvalidArgument, "loss table needs at least 2 rows");
  }
  for (std::size_t i = 0; i < distances_.size(); ++i) {
    if (!std::isfinite(distances_[i]) || !std::isfinite(losses_[i])) {
      throw Error(Errc::InvalidArgument, "loss table row " + std::to_string(i + 1) + " is not finite");
    }
    if (i > 0 && !(distances_[i] > distances_[i - 1])) {
      throw Error(Errc::NonMonotoneDistances,
                  "loss table distances must strictly increase (row " + std::to_string(i + 1) +
                      ": " + fmt_num(distances_[i]) + " after " + fmt_num(distances_[i - 1]) + ")");
    }
  }
}

double LossTable::interpolate(double distance_km) const {
  if (!(distance_km >= min_distance_km() && distance_km <= max_distance_km())) {
    throw Error(Errc::DistanceOutOfRange,
                "distance " + fmt_num(distance_km) + " km outside table span [" +
                    fmt_num(min_distance_km()) + ", " + fmt_num(max_distance_km()) + "]");
  }
  const auto upper = std::upper_bound(distances_.begin(), distances_.end(), distance_km);
  if (upper == distances_.end()) return losses_.back();
  const auto hi = static_cast<std::size_t>(upper - distances_.begin());
  const std::size_t lo = hi - 1;
  const double t = (distance_km - distances_[lo]) / (distances_[hi] - distances_[lo]);
  return losses_[lo] + t * (losses_[hi] - losses_[lo]);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view text, std::size_t line, const char* name) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(line, std::string("invalid ") + name + " '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(line, std::string(name) + " is not finite");
  }
  return value;
}

}  // namespace

LossTable parse_loss_table(std::istream& in) {
  std::vector<double> distances;
  std::vector<double> losses;
  std::string raw;
  std::size_t line = 0;
  bool seen_content = false;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (line == 1 && text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    text = trim(text);
    if (text.empty()) continue;
    if (!seen_content) {
      seen_content = true;
      if (text == "distance_km,loss_db") continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError(line, "expected two comma-separated fields");
    }
    const double d = parse_field(text.substr(0, comma), line, "distance_km");
    const double l = parse_field(text.substr(comma + 1), line, "loss_db");
    if (!distances.empty() && !(d > distances.back())) {
      throw Error(Errc::NonMonotoneDistances,
                  "line " + std::to_string(line) + ": distance " + fmt_num(d) +
                      " does not exceed previous " + fmt_num(distances.back()));
    }
    distances.push_back(d);
    losses.push_back(l);
  }
  if (distances.empty()) throw ParseError(line, "no data rows");
  if (distances.size() < 2) throw ParseError(line, "loss table needs at least 2 data rows");
  return LossTable(std::move(distances), std::move(losses));
}

LossTable load_loss_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open loss table " + path.string());
  try {
    return parse_loss_table(in);
  } catch (const ParseError& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Models

std::string_view to_string(BasicModel m) noexcept {
  switch (m) {
    case BasicModel::FreeSpace: return "free_space";
    case BasicModel::SmoothEarth528Like: return "smooth_earth";
    case BasicModel::Table: return "table";
  }
  return "?";
}

std::string_view to_string(ClutterModel m) noexcept {
  switch (m) {
    case ClutterModel::None: return "none";
    case ClutterModel::StatisticalClutter: return "statistical";
    case ClutterModel::Table: return "table";
  }
  return "?";
}

std::string_view to_string(ClutterEnvironment e) noexcept {
  switch (e) {
    case ClutterEnvironment::Open: return "open";
    case ClutterEnvironment::Suburban: return "suburban";
    case ClutterEnvironment::Urban: return "urban";
  }
  return "?";
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(Errc::InvalidArgument, "normal quantile needs p in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double slant_distance_km(const LinkGeometry& g) {
  const double dh_km = (g.h_tx_m - g.h_rx_m) / 1000.0;
  return std::hypot(g.distance_km, dh_km);
}

double free_space_loss(const LinkGeometry& g) {
  if (!(g.distance_km > 0.0) || !(g.freq_mhz > 0.0)) {
    throw Error(Errc::InvalidArgument, "free-space loss needs distance_km > 0 and freq_mhz > 0");
  }
  return 20.0 * std::log10(slant_distance_km(g)) + 20.0 * std::log10(g.freq_mhz) + 32.45;
}

double radio_horizon_km(const LinkGeometry& g) {
  return 4.12 * (std::sqrt(g.h_tx_m) + std::sqrt(g.h_rx_m));
}

namespace {

void require_table(const std::shared_ptr<const LossTable>& table, const char* which) {
  if (!table) {
    throw Error(Errc::InvalidArgument, std::string(which) + " model is Table but no table is loaded");
  }
}

// Free space inside the horizon, linear excess attenuation beyond it, minus a
// time-variability credit sigma_t * z(q). Never below free space.
double smooth_earth_loss(const SmoothEarthParams& p, const LinkGeometry& g) {
  if (g.freq_mhz < kSmoothEarthMinFreqMhz || g.freq_mhz > kSmoothEarthMaxFreqMhz) {
    throw Error(Errc::FrequencyOutOfRange,
                "smooth_earth model valid for 125-15500 MHz, got " + fmt_num(g.freq_mhz));
  }
  if (g.distance_km > kSmoothEarthMaxDistanceKm) {
    throw Error(Errc::DistanceOutOfRange,
                "smooth_earth model valid up to 1000 km, got " + fmt_num(g.distance_km));
  }
  const double fsl = free_space_loss(g);
  const double beyond = std::max(0.0, g.distance_km - radio_horizon_km(g));
  const double time_credit = p.time_sigma_db * normal_quantile(g.time_pct / 100.0);
  return fsl + std::max(0.0, p.beyond_horizon_db_per_km * beyond - time_credit);
}

double statistical_clutter_loss(const StatisticalClutterParams& p, const LinkGeometry& g) {
  if (g.freq_mhz < kClutterMinFreqMhz || g.freq_mhz > kClutterMaxFreqMhz) {
    throw Error(Errc::FrequencyOutOfRange,
                "statistical clutter valid for 500-67000 MHz, got " + fmt_num(g.freq_mhz));
  }
  double median = 0.0;
  double sigma = 0.0;
  switch (g.clutter_env) {
    case ClutterEnvironment::Urban:
      median = p.urban_median_db;
      sigma = p.urban_sigma_db;
      break;
    case ClutterEnvironment::Suburban:
      median = p.suburban_median_db;
      sigma = p.suburban_sigma_db;
      break;
    case ClutterEnvironment::Open:
      throw Error(Errc::EnvironmentUnsupported, "statistical clutter has no open-environment class");
  }
  return std::max(0.0, median + sigma * normal_quantile(g.loc_pct / 100.0));
}

}  // namespace

double basic_loss(const PropagationModel& model, const LinkGeometry& g) {
  validate(g);
  switch (model.basic) {
    case BasicModel::FreeSpace:
      return free_space_loss(g);
    case BasicModel::SmoothEarth528Like:
      return smooth_earth_loss(model.smooth_earth, g);
    case BasicModel::Table:
      require_table(model.basic_table, "basic");
      return model.basic_table->interpolate(g.distance_km);
  }
  throw Error(Errc::InvalidArgument, "unknown basic model");
}

double clutter_loss(const PropagationModel& model, const LinkGeometry& g) {
  validate(g);
  switch (model.clutter) {
    case ClutterModel::None:
      return 0.0;
    case ClutterModel::StatisticalClutter:
      return statistical_clutter_loss(model.statistical_clutter, g);
    case ClutterModel::Table:
      require_table(model.clutter_table, "clutter");
      return model.clutter_table->interpolate(g.distance_km);
  }
  throw Error(Errc::InvalidArgument, "unknown clutter model");
}

PathLossResult total_loss(const PropagationModel& model, const LinkGeometry& g) {
  PathLossResult r;
  r.l_basic_db = basic_loss(model, g);
  r.l_clutter_db = clutter_loss(model, g);
  r.l_total_db = r.l_basic_db + r.l_clutter_db;
  return r;
}

}  // namespace specpredict
