#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fmcw/constants.hpp"

namespace fmcw {

/// Point scatterer moving radially at constant speed. The victim sits at the
/// origin looking along +x; azimuth is measured from +x towards +y.
struct Reflector {
  std::string name;
  double range_m = 1.0;          ///< radial distance at t = 0
  double radial_velocity = 0.0;  ///< m/s, positive = receding
  double azimuth_rad = 0.0;
  double reflectivity = 1.0;     ///< linear amplitude factor

  void validate() const;
  double range_at(double t) const { return range_m + radial_velocity * t; }
};

struct TxOffset {
  double along_m = 0.0;    ///< l_x, towards the victim along the line of sight
  double lateral_m = 0.0;  ///< l_y, perpendicular to the line of sight
};

/// Where the attacker sits relative to the victim, plus the layout of its
/// transmit antennas around its reference antenna.
struct AttackerPlacement {
  double distance_m = 4.0;
  double azimuth_rad = 0.0;
  std::vector<TxOffset> tx_offsets{TxOffset{}};

  void validate() const;
};

/// Uniform linear receive array.
struct RxArray {
  std::size_t n_rx = 16;
  double spacing_m = 0.0;

  void validate() const;
};

/// Round-trip delay of a reflector at time t, s.
double reflection_delay(const Reflector& r, double t);

/// Received amplitude reflectivity / d^2 (power falls with d^4).
double reflection_amplitude(const Reflector& r, double t);

struct AttackerPath {
  double delay_s = 0.0;         ///< one-way propagation delay
  double amplitude_scale = 0.0; ///< 1 / d_eff
  double distance_m = 0.0;      ///< d_eff
  double azimuth_rad = 0.0;     ///< arrival direction at the victim
};

/// One-way path from TX antenna `antenna_index` of the attacker to the victim.
AttackerPath attacker_path(const AttackerPlacement& placement, std::size_t antenna_index);

/// Phase lead of receive antenna m over antenna 0 for a plane wave from theta.
double rx_phase_shift(double azimuth_rad, std::size_t antenna, double spacing_m, double wavelength_m);

}  // namespace fmcw
