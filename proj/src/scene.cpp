#include "fmcw/scene.hpp"

#include <cmath>

#include "fmcw/errors.hpp"

namespace fmcw {

void Reflector::validate() const {
  if (!(range_m > 0.0)) throw ScenarioError("reflector '" + name + "': range must be positive");
  if (!(std::abs(azimuth_rad) < kPi / 2))
    throw ScenarioError("reflector '" + name + "': azimuth must be inside (-90, 90) degrees");
  if (!(reflectivity >= 0.0)) throw ScenarioError("reflector '" + name + "': negative reflectivity");
}

void AttackerPlacement::validate() const {
  if (!(distance_m > 0.0)) throw ConfigError("attacker distance must be positive");
  if (tx_offsets.empty()) throw ConfigError("attacker needs at least one TX antenna");
  for (const auto& o : tx_offsets) {
    if (std::hypot(o.along_m, o.lateral_m) > 0.1 * distance_m)
      throw ConfigError("TX antenna offset exceeds 10% of the attacker distance");
  }
}

void RxArray::validate() const {
  if (n_rx == 0) throw ConfigError("receive array needs at least one antenna");
  if (!(spacing_m > 0.0)) throw ConfigError("receive antenna spacing must be positive");
}

double reflection_delay(const Reflector& r, double t) {
  const double d = r.range_at(t);
  if (!(d > 0.0))
    throw ScenarioError("reflector '" + r.name + "' has non-positive range at t=" + std::to_string(t));
  return 2.0 * d / kSpeedOfLight;
}

double reflection_amplitude(const Reflector& r, double t) {
  const double d = r.range_at(t);
  if (!(d > 0.0))
    throw ScenarioError("reflector '" + r.name + "' has non-positive range at t=" + std::to_string(t));
  return r.reflectivity / (d * d);
}

AttackerPath attacker_path(const AttackerPlacement& placement, std::size_t antenna_index) {
  if (antenna_index >= placement.tx_offsets.size())
    throw ConfigError("attacker TX antenna index " + std::to_string(antenna_index) + " out of range");
  const TxOffset& o = placement.tx_offsets[antenna_index];
  const double ca = std::cos(placement.azimuth_rad);
  const double sa = std::sin(placement.azimuth_rad);
  // Unit line of sight u = (ca, sa), lateral w = (-sa, ca).
  const double along = placement.distance_m - o.along_m;
  const double x = along * ca - o.lateral_m * sa;
  const double y = along * sa + o.lateral_m * ca;
  AttackerPath p;
  p.distance_m = o.lateral_m == 0.0 ? along : std::hypot(x, y);
  p.delay_s = p.distance_m / kSpeedOfLight;
  p.amplitude_scale = 1.0 / p.distance_m;
  p.azimuth_rad = std::atan2(y, x);
  return p;
}

double rx_phase_shift(double azimuth_rad, std::size_t antenna, double spacing_m, double wavelength_m) {
  return kTwoPi * static_cast<double>(antenna) * spacing_m * std::sin(azimuth_rad) / wavelength_m;
}

}  // namespace fmcw
