#include "fmcw/waveform.hpp"

#include <cmath>

namespace fmcw {

double derive_slope(double bandwidth_hz, double ramp_s) {
  if (!(bandwidth_hz > 0.0) || !(ramp_s > 0.0))
    throw ConfigError("derive_slope: bandwidth and ramp duration must be positive");
  return bandwidth_hz / ramp_s;
}

double range_resolution(double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw ConfigError("range_resolution: bandwidth must be positive");
  return kSpeedOfLight / (2.0 * bandwidth_hz);
}

ChirpConfig::ChirpConfig(double f_start_hz, double bandwidth_hz, double ramp_s,
                         std::size_t n_samples)
    : f_start_(f_start_hz), bandwidth_(bandwidth_hz), ramp_(ramp_s), n_samples_(n_samples) {
  if (!(f_start_hz > 0.0)) throw ConfigError("chirp start frequency must be positive");
  if (n_samples == 0) throw ConfigError("chirp needs at least one ADC sample");
  slope_ = derive_slope(bandwidth_hz, ramp_s);
  f_adc_ = static_cast<double>(n_samples) / ramp_s;
}

FrameConfig::FrameConfig(std::size_t n_chirps, double frame_s) : n_chirps_(n_chirps), frame_s_(frame_s) {
  if (n_chirps == 0) throw ConfigError("frame needs at least one chirp");
  if (!(frame_s > 0.0)) throw ConfigError("frame duration must be positive");
}

void FrameConfig::check_fits(const ChirpConfig& chirp) const {
  if (chirp_period() < chirp.ramp())
    throw ConfigError("chirp period " + std::to_string(chirp_period()) +
                      " s is shorter than the ramp " + std::to_string(chirp.ramp()) + " s");
}

WindowKind parse_window_kind(const std::string& name) {
  if (name == "hann") return WindowKind::hann;
  if (name == "rectangular" || name == "rect") return WindowKind::rectangular;
  throw ConfigError("unknown window kind '" + name + "'");
}

std::string to_string(WindowKind kind) {
  return kind == WindowKind::hann ? "hann" : "rectangular";
}

BinAxes bin_axes(const ChirpConfig& chirp, const FrameConfig& frame, double wavelength_m) {
  if (!(wavelength_m > 0.0)) throw ConfigError("bin_axes: wavelength must be positive");
  BinAxes axes;
  axes.n_range = chirp.n_samples();
  axes.range_bin_m = kSpeedOfLight * chirp.f_adc() /
                     (2.0 * chirp.slope() * static_cast<double>(chirp.n_samples()));
  axes.n_velocity = frame.n_chirps();
  axes.velocity_bin_mps =
      wavelength_m / (2.0 * static_cast<double>(frame.n_chirps()) * frame.chirp_period());
  axes.zero_velocity_bin = frame.n_chirps() / 2;
  return axes;
}

}  // namespace fmcw
