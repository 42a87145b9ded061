#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

namespace specpredict {

enum class ClutterEnvironment { Open, Suburban, Urban };

/// Primary -> secondary link description.
struct LinkGeometry {
  double distance_km = 1.0;  ///< ground separation, > 0
  double h_tx_m = 10.0;      ///< >= 1
  double h_rx_m = 10.0;      ///< >= 1
  double freq_mhz = 1000.0;
  double time_pct = 50.0;    ///< in (0, 100)
  ClutterEnvironment clutter_env = ClutterEnvironment::Open;
  double loc_pct = 50.0;     ///< in (0, 100)
};

/// Throws InvalidArgument when a range invariant of `g` does not hold.
void validate(const LinkGeometry& g);

struct PathLossResult {
  double l_basic_db = 0.0;
  double l_clutter_db = 0.0;
  double l_total_db = 0.0;

  friend bool operator==(const PathLossResult&, const PathLossResult&) = default;
};

/// Distance -> loss samples at one fixed frequency / height / percentage setting.
class LossTable {
 public:
  /// Throws NonMonotoneDistances unless distances strictly increase, and
  /// InvalidArgument for fewer than 2 rows or non-finite values.
  LossTable(std::vector<double> distances_km, std::vector<double> losses_db);

  const std::vector<double>& distances_km() const noexcept { return distances_; }
  const std::vector<double>& losses_db() const noexcept { return losses_; }
  std::size_t size() const noexcept { return distances_.size(); }
  double min_distance_km() const noexcept { return distances_.front(); }
  double max_distance_km() const noexcept { return distances_.back(); }

  /// Linear interpolation; DistanceOutOfRange outside [min, max].
  double interpolate(double distance_km) const;

 private:
  std::vector<double> distances_;
  std::vector<double> losses_;
};

/// Parses the `distance_km,loss_db` CSV format. Throws ParseError with the
/// offending line number, or NonMonotoneDistances.
LossTable parse_loss_table(std::istream& in);
LossTable load_loss_table(const std::filesystem::path& path);

enum class BasicModel { FreeSpace, SmoothEarth528Like, Table };
enum class ClutterModel { None, StatisticalClutter, Table };

struct SmoothEarthParams {
  double beyond_horizon_db_per_km = 0.5;
  double time_sigma_db = 3.0;
};

struct StatisticalClutterParams {
  double urban_median_db = 20.0;
  double suburban_median_db = 12.0;
  double urban_sigma_db = 6.0;
  double suburban_sigma_db = 6.0;
};

/// Selected basic + clutter models and their parameters. Table variants need
/// the corresponding table pointer set.
struct PropagationModel {
  BasicModel basic = BasicModel::FreeSpace;
  ClutterModel clutter = ClutterModel::None;
  std::shared_ptr<const LossTable> basic_table;
  std::shared_ptr<const LossTable> clutter_table;
  SmoothEarthParams smooth_earth;
  StatisticalClutterParams statistical_clutter;
};

std::string_view to_string(BasicModel m) noexcept;
std::string_view to_string(ClutterModel m) noexcept;
std::string_view to_string(ClutterEnvironment e) noexcept;

// Validity windows of the built-in models.
inline constexpr double kSmoothEarthMinFreqMhz = 125.0;
inline constexpr double kSmoothEarthMaxFreqMhz = 15500.0;
inline constexpr double kSmoothEarthMaxDistanceKm = 1000.0;
inline constexpr double kClutterMinFreqMhz = 500.0;
inline constexpr double kClutterMaxFreqMhz = 67000.0;

/// Standard normal quantile z(p), p in (0, 1).
double normal_quantile(double p);

/// Straight-line distance between the antennas, km.
double slant_distance_km(const LinkGeometry& g);

/// Friis: 20 log10(d_km) + 20 log10(f_MHz) + 32.45 over the slant distance.
double free_space_loss(const LinkGeometry& g);

/// Smooth-earth radio horizon 4.12 (sqrt(h_tx) + sqrt(h_rx)) km, heights in m.
double radio_horizon_km(const LinkGeometry& g);

double basic_loss(const PropagationModel& model, const LinkGeometry& g);
double clutter_loss(const PropagationModel& model, const LinkGeometry& g);

/// L_total = L_basic + L_clutter.
PathLossResult total_loss(const PropagationModel& model, const LinkGeometry& g);

}  // namespace specpredict
