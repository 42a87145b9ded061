#include "specpredict/availability.hpp"

#include <string>

#include "specpredict/error.hpp"

namespace specpredict {

RangeResult interference_range(const PropagationModel& model, const RadioParams& radio,
                               const LinkGeometry& geometry_template, double d_min_km,
                               double d_max_km) {
  if (!(d_min_km > 0.0) || !(d_min_km < d_max_km)) {
    throw Error(Errc::InvalidBracket, "need 0 < d_min < d_max, got [" + std::to_string(d_min_km) +
                                          ", " + std::to_string(d_max_km) + "]");
  }
  LinkGeometry g = geometry_template;
  const auto in_range = [&](double d) {
    g.distance_km = d;
    return classify_range(radio, total_loss(model, g)) == RangeClass::InRange;
  };

  if (!in_range(d_min_km)) return NoCrossing::AlwaysOut;
  if (in_range(d_max_km)) return NoCrossing::AlwaysIn;

  double lo = d_min_km;  // in range
  double hi = d_max_km;  // out of range
  while (hi - lo > kRangeToleranceKm) {
    const double mid = 0.5 * (lo + hi);
    (in_range(mid) ? lo : hi) = mid;
  }
  return RangeDistance{0.5 * (lo + hi)};
}

}  // namespace specpredict
