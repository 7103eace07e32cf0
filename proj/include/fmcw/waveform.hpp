#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Core>

#include "fmcw/constants.hpp"
#include "fmcw/errors.hpp"

namespace fmcw {

/// Slope of a linear chirp, Hz/s.
double derive_slope(double bandwidth_hz, double ramp_s);

/// Range resolution c0 / (2 b), m.
double range_resolution(double bandwidth_hz);

/// Saw-tooth chirp: ramps from f_start over `bandwidth` in `ramp` seconds while
/// the ADC takes `n_samples` samples.
class ChirpConfig {
 public:
  ChirpConfig() = default;
  ChirpConfig(double f_start_hz, double bandwidth_hz, double ramp_s, std::size_t n_samples);

  double f_start() const { return f_start_; }
  double bandwidth() const { return bandwidth_; }
  double ramp() const { return ramp_; }
  double slope() const { return slope_; }
  std::size_t n_samples() const { return n_samples_; }
  double f_adc() const { return f_adc_; }
  /// Carrier wavelength at the chirp start frequency.
  double wavelength() const { return kSpeedOfLight / f_start_; }

 private:
  double f_start_ = 77e9;
  double bandwidth_ = 1e9;
  double ramp_ = 512e-6;
  double slope_ = 1e9 / 512e-6;
  std::size_t n_samples_ = 2048;
  double f_adc_ = 2048 / 512e-6;
};

/// N chirps spread uniformly over one frame; each chirp owns a slot of
/// chirp_period() seconds and ramps during the first ramp seconds of it.
class FrameConfig {
 public:
  FrameConfig() = default;
  FrameConfig(std::size_t n_chirps, double frame_s);

  std::size_t n_chirps() const { return n_chirps_; }
  double frame_duration() const { return frame_s_; }
  double chirp_period() const { return frame_s_ / static_cast<double>(n_chirps_); }

  /// Throws ConfigError when the ramp does not fit in the chirp slot.
  void check_fits(const ChirpConfig& chirp) const;

 private:
  std::size_t n_chirps_ = 50;
  double frame_s_ = 0.2;
};

enum class WindowKind { rectangular, hann };

struct WindowSpec {
  WindowKind kind = WindowKind::hann;
  std::size_t length = 1;
};

WindowKind parse_window_kind(const std::string& name);
std::string to_string(WindowKind kind);

/// Symmetric Hann window, w[i] = 0.5 (1 - cos(2 pi i / (n - 1))).
template <typename Scalar = double>
Eigen::Array<Scalar, Eigen::Dynamic, 1> hann_window(std::size_t n) {
  if (n == 0) throw ConfigError("hann_window: length must be at least 1");
  Eigen::Array<Scalar, Eigen::Dynamic, 1> w(static_cast<Eigen::Index>(n));
  if (n == 1) {
    w(0) = Scalar(1);
    return w;
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    // Evaluate the mirrored index so the window is exactly symmetric.
    const std::size_t j = std::min(i, n - 1 - i);
    w(static_cast<Eigen::Index>(i)) =
        static_cast<Scalar>(0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(j) / denom)));
  }
  return w;
}

template <typename Scalar = double>
Eigen::Array<Scalar, Eigen::Dynamic, 1> make_window(const WindowSpec& spec) {
  if (spec.length == 0) throw ConfigError("window length must be at least 1");
  if (spec.kind == WindowKind::rectangular)
    return Eigen::Array<Scalar, Eigen::Dynamic, 1>::Ones(static_cast<Eigen::Index>(spec.length));
  return hann_window<Scalar>(spec.length);
}

/// Physical labels of the range-FFT and (shifted) Doppler-FFT bins.
struct BinAxes {
  double range_bin_m = 0.0;        ///< metres per range bin
  std::size_t n_range = 0;
  double velocity_bin_mps = 0.0;   ///< m/s per Doppler bin
  std::size_t n_velocity = 0;
  std::size_t zero_velocity_bin = 0;  ///< index of 0 m/s after the shift

  double range_at(double bin) const { return bin * range_bin_m; }
  double velocity_at(double bin) const {
    return (bin - static_cast<double>(zero_velocity_bin)) * velocity_bin_mps;
  }
  double max_range() const { return static_cast<double>(n_range) * range_bin_m; }
};

BinAxes bin_axes(const ChirpConfig& chirp, const FrameConfig& frame, double wavelength_m);

}  // namespace fmcw
