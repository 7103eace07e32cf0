#include "fmcw/receiver.hpp"

#include <cmath>
#include <numeric>

namespace fmcw {

void ReceiverConfig::validate() const {
  frame.check_fits(chirp);
  rx.validate();
  if (if_cutoff_hz < 0.0) throw ConfigError("IF cutoff must be non-negative");
}

double estimate_velocity(double phase_step_rad, double wavelength_m, double chirp_period_s) {
  return wavelength_m * phase_step_rad / (4.0 * kPi * chirp_period_s);
}

namespace {

double wrap_pi(double a) {
  a = std::remainder(a, kTwoPi);  // (-pi, pi]
  if (a <= -kPi) a += kTwoPi;
  return a;
}

}  // namespace

double estimate_aoa(std::span<const double> phases, double spacing_m, double wavelength_m) {
  if (phases.size() < 2) throw ConfigError("estimate_aoa needs at least two antennas");
  double step = 0.0;
  if (phases.size() == 2) {
    step = wrap_pi(phases[1] - phases[0]);
  } else {
    // Unwrap, then fit phase = a + step * m by least squares.
    std::vector<double> un(phases.size());
    un[0] = phases[0];
    for (std::size_t m = 1; m < phases.size(); ++m) un[m] = un[m - 1] + wrap_pi(phases[m] - phases[m - 1]);
    const double n = static_cast<double>(un.size());
    const double mean_m = (n - 1.0) / 2.0;
    const double mean_p = std::accumulate(un.begin(), un.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t m = 0; m < un.size(); ++m) {
      const double dx = static_cast<double>(m) - mean_m;
      sxy += dx * (un[m] - mean_p);
      sxx += dx * dx;
    }
    step = sxy / sxx;
  }
  double arg = wavelength_m * step / (kTwoPi * spacing_m);
  if (std::abs(arg) > 1.0) {
    if (std::abs(arg) - 1.0 > 1e-12)
      throw AmbiguousAngleError("estimate_aoa: |lambda dphi / (2 pi l)| = " + std::to_string(std::abs(arg)) +
                                " exceeds 1");
    arg = std::copysign(1.0, arg);
  }
  return std::asin(arg);
}

double range_from_beat(double beat_hz, double slope_hz_per_s) {
  return kSpeedOfLight * beat_hz / (2.0 * slope_hz_per_s);
}

std::vector<double> angle_spectrum(std::span<const std::complex<double>> snapshot, std::size_t n_fft) {
  if (n_fft < snapshot.size()) throw ConfigError("angle FFT shorter than the receive array");
  std::vector<std::complex<double>> in(n_fft), spec(n_fft);
  std::copy(snapshot.begin(), snapshot.end(), in.begin());
  Eigen::FFT<double> fft;
  fft.fwd(spec, in);
  std::vector<double> p(n_fft);
  const std::size_t half = n_fft / 2;
  for (std::size_t k = 0; k < n_fft; ++k) p[k] = std::norm(spec[(k + n_fft - half) % n_fft]);
  return p;
}

double angle_of_bin(double bin, std::size_t n_fft, double spacing_m, double wavelength_m) {
  const double psi = (bin - static_cast<double>(n_fft / 2)) / static_cast<double>(n_fft);
  const double s = wavelength_m * psi / spacing_m;
  if (std::abs(s) > 1.0) return std::nan("");
  return std::asin(s);
}

}  // namespace fmcw
