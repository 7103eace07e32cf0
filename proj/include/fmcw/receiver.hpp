#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "fmcw/constants.hpp"
#include "fmcw/errors.hpp"
#include "fmcw/scene.hpp"
#include "fmcw/waveform.hpp"

namespace fmcw {

/// Everything the victim's receive chain needs to know about itself.
struct ReceiverConfig {
  ChirpConfig chirp;
  FrameConfig frame;
  RxArray rx;
  /// Analog IF low-pass cutoff. Zero means the Nyquist limit f_adc / 2.
  double if_cutoff_hz = 0.0;

  double beat_limit() const {
    const double nyquist = chirp.f_adc() / 2.0;
    return if_cutoff_hz > 0.0 ? std::min(if_cutoff_hz, nyquist) : nyquist;
  }
  void validate() const;
};

enum class EmitterKind { reflection, attacker };

/// One chirp arriving at receive antenna 0, already on the victim timeline.
struct EmissionEvent {
  EmitterKind kind = EmitterKind::reflection;
  int source = 0;             ///< reflector index or attacker TX index
  TimePoint start = 0;        ///< arrival time at the victim, s
  double f_start = 0.0;       ///< Hz
  double slope = 0.0;         ///< Hz/s
  double duration = 0.0;      ///< s
  double amplitude = 0.0;     ///< linear
  double phase = 0.0;         ///< initial phase at `start`, rad
  double azimuth = 0.0;       ///< arrival direction, rad
};

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Complex IF samples. Row chirp * n_rx + rx holds one fast-time record.
template <typename Scalar = double>
struct IfDataCube {
  std::size_t n_chirps = 0;
  std::size_t n_rx = 0;
  std::size_t n_samples = 0;
  ComplexMatrix<Scalar> samples;

  IfDataCube() = default;
  IfDataCube(std::size_t chirps, std::size_t rx, std::size_t n)
      : n_chirps(chirps), n_rx(rx), n_samples(n),
        samples(ComplexMatrix<Scalar>::Zero(static_cast<Eigen::Index>(chirps * rx),
                                            static_cast<Eigen::Index>(n))) {}

  auto record(std::size_t chirp, std::size_t rx) {
    return samples.row(static_cast<Eigen::Index>(chirp * n_rx + rx));
  }
  auto record(std::size_t chirp, std::size_t rx) const {
    return samples.row(static_cast<Eigen::Index>(chirp * n_rx + rx));
  }
  /// The n_rx x n_samples block of one chirp.
  auto chirp_block(std::size_t chirp) {
    return samples.middleRows(static_cast<Eigen::Index>(chirp * n_rx), static_cast<Eigen::Index>(n_rx));
  }
  bool all_finite() const { return samples.allFinite(); }
};

/// Range spectra share the cube layout: [chirp][rx][range bin].
template <typename Scalar = double>
using RangeProfiles = IfDataCube<Scalar>;

/// Doppler-processed spectra, one n_range x n_velocity matrix per receive
/// antenna. Column v is the FFT-shifted Doppler bin, so n_velocity / 2 is 0 m/s.
template <typename Scalar = double>
struct RangeDopplerMap {
  using Plane = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

  std::size_t n_range = 0;
  std::size_t n_velocity = 0;
  std::vector<Plane> per_rx;

  std::size_t n_rx() const { return per_rx.size(); }
  std::complex<Scalar> at(std::size_t range, std::size_t velocity, std::size_t rx) const {
    return per_rx[rx](static_cast<Eigen::Index>(range), static_cast<Eigen::Index>(velocity));
  }

  /// Square-law power averaged over receive antennas (non-coherent integration).
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> power() const {
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> p =
        Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(static_cast<Eigen::Index>(n_range),
                                                                   static_cast<Eigen::Index>(n_velocity));
    for (const auto& plane : per_rx) p += plane.array().abs2();
    if (!per_rx.empty()) p /= static_cast<Scalar>(per_rx.size());
    return p;
  }

  /// Samples across the receive array at one cell.
  std::vector<std::complex<Scalar>> snapshot(std::size_t range, std::size_t velocity) const {
    std::vector<std::complex<Scalar>> x(per_rx.size());
    for (std::size_t m = 0; m < per_rx.size(); ++m) x[m] = at(range, velocity, m);
    return x;
  }
};

namespace detail {

inline double frac_cycles(double c) { return c - std::floor(c); }

}  // namespace detail

/// Dechirps every event against victim chirp `chirp` starting at `chirp_start`
/// and returns the n_rx x n_samples IF block.
///
/// The IF phase is phi_victim(t) - phi_event(t), both quadratic chirp phases.
/// It is expanded around the chirp-relative arrival offset d so that no
/// absolute carrier phase (~1e8 rad) is ever formed.
/// A sample is dropped when |beat| exceeds the IF bandwidth or when the event's
/// instantaneous frequency lies outside the victim's swept band [f_s, f_s + b].
template <typename Scalar = double>
ComplexMatrix<Scalar> synthesize_if(const ReceiverConfig& rc, TimePoint chirp_start,
                                    std::span<const EmissionEvent> events) {
  const ChirpConfig& ch = rc.chirp;
  const std::size_t n = ch.n_samples();
  const std::size_t n_rx = rc.rx.n_rx;
  ComplexMatrix<Scalar> out = ComplexMatrix<Scalar>::Zero(static_cast<Eigen::Index>(n_rx),
                                                          static_cast<Eigen::Index>(n));
  const double fs = ch.f_start();
  const double slope = ch.slope();
  const double band = ch.bandwidth();
  const double limit = rc.beat_limit();
  const double dt = 1.0 / ch.f_adc();
  const double lambda = ch.wavelength();

  std::vector<std::complex<double>> base(n);
  std::vector<std::complex<double>> steer(n_rx);
  for (const EmissionEvent& ev : events) {
    if (ev.amplitude == 0.0) continue;
    const double d = static_cast<double>(ev.start - chirp_start);
    if (d >= ch.ramp() || d + ev.duration <= 0.0) continue;

    const double df0 = ev.f_start - fs;                // event start frequency relative to f_s
    const double lin = -df0 + ev.slope * d;            // Hz, linear phase coefficient
    const double quad = 0.5 * (slope - ev.slope);      // Hz/s
    const double cst = detail::frac_cycles(static_cast<double>(
        static_cast<long double>(ev.f_start) * static_cast<long double>(d) -
        0.5L * ev.slope * static_cast<long double>(d) * d));

    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) * dt;
      base[i] = {0.0, 0.0};
      if (u < d || u >= d + ev.duration) continue;
      const double beat = lin + 2.0 * quad * u;
      if (std::abs(beat) > limit) continue;
      const double f_rel = df0 + ev.slope * (u - d);  // event frequency minus f_s
      if (f_rel < 0.0 || f_rel > band) continue;
      const double cycles = detail::frac_cycles(lin * u + quad * u * u) + cst;
      const double theta = kTwoPi * cycles - ev.phase;
      base[i] = std::polar(ev.amplitude, theta);
      any = true;
    }
    if (!any) continue;
    for (std::size_t m = 0; m < n_rx; ++m)
      steer[m] = std::polar(1.0, rx_phase_shift(ev.azimuth, m, rc.rx.spacing_m, lambda));
    for (std::size_t m = 0; m < n_rx; ++m) {
      auto row = out.row(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < n; ++i) {
        if (base[i] == std::complex<double>{}) continue;
        const std::complex<double> v = base[i] * steer[m];
        row(static_cast<Eigen::Index>(i)) += std::complex<Scalar>(static_cast<Scalar>(v.real()),
                                                                  static_cast<Scalar>(v.imag()));
      }
    }
  }
  return out;
}

/// Windowed DFT along fast time for every chirp and receive antenna.
template <typename Scalar>
RangeProfiles<Scalar> range_fft(const IfDataCube<Scalar>& cube, const WindowSpec& window) {
  if (window.length != cube.n_samples)
    throw ConfigError("range window length " + std::to_string(window.length) + " != samples per chirp " +
                      std::to_string(cube.n_samples));
  const auto w = make_window<Scalar>(window);
  RangeProfiles<Scalar> out(cube.n_chirps, cube.n_rx, cube.n_samples);
  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> in(cube.n_samples), spec(cube.n_samples);
  for (Eigen::Index r = 0; r < cube.samples.rows(); ++r) {
    for (std::size_t i = 0; i < cube.n_samples; ++i)
      in[i] = cube.samples(r, static_cast<Eigen::Index>(i)) * w(static_cast<Eigen::Index>(i));
    fft.fwd(spec, in);
    for (std::size_t i = 0; i < cube.n_samples; ++i) out.samples(r, static_cast<Eigen::Index>(i)) = spec[i];
  }
  return out;
}

/// Slow-time DFT per range bin and antenna, shifted so zero velocity sits at
/// column n_chirps / 2.
template <typename Scalar>
RangeDopplerMap<Scalar> doppler_fft(const RangeProfiles<Scalar>& profiles, const WindowSpec& window) {
  const std::size_t nc = profiles.n_chirps;
  if (nc == 0) throw ConfigError("doppler_fft needs at least one chirp");
  if (window.length != nc)
    throw ConfigError("Doppler window length " + std::to_string(window.length) + " != chirps per frame " +
                      std::to_string(nc));
  const auto w = make_window<Scalar>(window);
  RangeDopplerMap<Scalar> map;
  map.n_range = profiles.n_samples;
  map.n_velocity = nc;
  map.per_rx.assign(profiles.n_rx, typename RangeDopplerMap<Scalar>::Plane(
                                       static_cast<Eigen::Index>(profiles.n_samples),
                                       static_cast<Eigen::Index>(nc)));
  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> in(nc), spec(nc);
  const std::size_t half = nc / 2;
  for (std::size_t m = 0; m < profiles.n_rx; ++m) {
    auto& plane = map.per_rx[m];
    for (std::size_t r = 0; r < profiles.n_samples; ++r) {
      for (std::size_t c = 0; c < nc; ++c)
        in[c] = profiles.record(c, m)(static_cast<Eigen::Index>(r)) * w(static_cast<Eigen::Index>(c));
      fft.fwd(spec, in);
      for (std::size_t k = 0; k < nc; ++k)
        plane(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = spec[(k + nc - half) % nc];
    }
  }
  return map;
}

/// v = lambda * dphi / (4 pi T_c).
double estimate_velocity(double phase_step_rad, double wavelength_m, double chirp_period_s);

/// theta = arcsin(lambda dphi / (2 pi l)). With more than two antennas dphi is
/// the least-squares slope of the unwrapped phase against antenna index.
double estimate_aoa(std::span<const double> phases, double spacing_m, double wavelength_m);

/// d = c0 s / (2 S).
double range_from_beat(double beat_hz, double slope_hz_per_s);

/// Zero-padded DFT across the array, shifted so bin n_fft / 2 is broadside.
/// Returns |X|^2 per angle bin.
std::vector<double> angle_spectrum(std::span<const std::complex<double>> snapshot, std::size_t n_fft);

/// Azimuth of shifted angle bin k (may be fractional); NaN outside visible space.
double angle_of_bin(double bin, std::size_t n_fft, double spacing_m, double wavelength_m);

}  // namespace fmcw
