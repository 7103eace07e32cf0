// Randomised properties. Each case draws its inputs from a seeded generator so
// failures are reproducible; the seed and trial index appear in the failure.
#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>
#include <vector>

#include "fmcw/detection.hpp"
#include "fmcw/engine.hpp"
#include "fmcw/io.hpp"
#include "fmcw/receiver.hpp"
#include "oracles.hpp"

using namespace fmcw;

namespace {

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }
  bool coin() { return index(0, 1) == 1; }

  /// Heavy-tailed positive cells: exponential clutter with occasional spikes.
  std::vector<double> cells(std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = e(rng) * (index(0, 19) == 0 ? real(10, 1e4) : 1.0);
    return x;
  }

  CfarConfig cfar() {
    CfarConfig c;
    c.algorithm = coin() ? CfarAlgorithm::ca : CfarAlgorithm::os;
    c.nc = 2 * index(1, 24);
    c.guard = index(1, 3);
    c.k = c.algorithm == CfarAlgorithm::os ? index(1, c.nc) : 0;
    if (coin()) c.sc = real(0.5, 30.0);
    else c.pfa = std::pow(10.0, -real(0.5, 7.0));
    return c;
  }

  EmissionEvent event(const ReceiverConfig& rc) {
    EmissionEvent e;
    e.kind = coin() ? EmitterKind::reflection : EmitterKind::attacker;
    e.start = static_cast<TimePoint>(real(-2e-7, 1e-6));
    e.f_start = rc.chirp.f_start() + real(-2e5, 2e5);
    e.slope = rc.chirp.slope() * (1.0 + real(-1e-6, 1e-6));
    e.duration = rc.chirp.ramp();
    e.amplitude = real(0.01, 3.0);
    e.phase = real(-kPi, kPi);
    e.azimuth = real(-1.0, 1.0);
    return e;
  }
};

constexpr int kTrials = 40;

ReceiverConfig small_receiver() {
  ReceiverConfig rc;
  rc.chirp = ChirpConfig(77e9, 1e9, 64e-6, 256);
  rc.frame = FrameConfig(4, 4e-4);
  rc.rx.n_rx = 4;
  rc.rx.spacing_m = rc.chirp.wavelength() / 2;
  return rc;
}

}  // namespace

TEST_CASE("property: CFAR thresholds equal the brute-force sort") {
  Gen g(101);
  for (int t = 0; t < kTrials; ++t) {
    CAPTURE(t);
    const CfarConfig c = g.cfar();
    const auto x = g.cells(g.index(c.nc + 2 * c.guard + 1, 300));
    const Eigen::ArrayXd got = cfar_threshold(Eigen::Map<const Eigen::ArrayXd>(x.data(), static_cast<Eigen::Index>(x.size())), c);
    const auto want = oracle::cfar_threshold(x, c.nc, c.guard, c.scale(),
                                             c.algorithm == CfarAlgorithm::ca ? 0 : c.order());
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::isnan(want[i])) {
        CHECK(std::isnan(got(static_cast<Eigen::Index>(i))));
      } else {
        CHECK(std::abs(got(static_cast<Eigen::Index>(i)) - want[i]) <= 1e-12 * std::max(1.0, want[i]));
      }
    }
  }
}

TEST_CASE("property: a lower false-alarm target never flags more cells") {
  Gen g(202);
  for (int t = 0; t < kTrials; ++t) {
    CAPTURE(t);
    CfarConfig lo = g.cfar();
    lo.sc.reset();
    CfarConfig hi = lo;
    lo.pfa = std::pow(10.0, -g.real(3.0, 8.0));
    hi.pfa = lo.pfa * g.real(1.5, 100.0);
    CHECK(lo.scale() > hi.scale());
    const auto x = g.cells(200);
    const Eigen::Map<const Eigen::ArrayXd> m(x.data(), 200);
    const auto fl = cfar_detect(m, lo), fh = cfar_detect(m, hi);
    for (Eigen::Index i = 0; i < 200; ++i) CHECK((!fl(i) || fh(i)));
  }
}

TEST_CASE("property: OS false-alarm probability falls as the scale grows") {
  Gen g(303);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t nc = 2 * g.index(1, 40), k = g.index(1, nc);
    const double a = g.real(0.0, 50.0), b = a + g.real(1e-3, 10.0);
    CAPTURE(nc);
    CAPTURE(k);
    CHECK(os_pfa(nc, k, b) < os_pfa(nc, k, a));
    CHECK(os_pfa(nc, k, a) <= 1.0);
    CHECK(os_pfa(nc, k, 0.0) == doctest::Approx(1.0));
    const double p = std::pow(10.0, -g.real(1.0, 7.0));
    CHECK(os_pfa(nc, k, os_solve_scale(nc, k, p)) == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("property: Hann windows are symmetric and bounded") {
  Gen g(404);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t n = g.index(2, 4096);
    const auto w = hann_window<double>(n);
    REQUIRE(static_cast<std::size_t>(w.size()) == n);
    CHECK(w(0) == doctest::Approx(0.0));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(w(static_cast<Eigen::Index>(i)) >= 0.0);
      CHECK(w(static_cast<Eigen::Index>(i)) <= 1.0);
    }
    for (std::size_t i = 0; i < n; ++i)
      CHECK(w(static_cast<Eigen::Index>(i)) == w(static_cast<Eigen::Index>(n - 1 - i)));
  }
}

TEST_CASE("property: IF synthesis is linear in its events") {
  Gen g(505);
  const ReceiverConfig rc = small_receiver();
  for (int t = 0; t < 15; ++t) {
    CAPTURE(t);
    std::vector<EmissionEvent> evs;
    for (std::size_t i = g.index(1, 5); i > 0; --i) evs.push_back(g.event(rc));
    const TimePoint tn = static_cast<TimePoint>(g.real(0.0, 0.2));
    for (auto& e : evs) e.start += tn;
    const auto all = synthesize_if<double>(rc, tn, evs);
    ComplexMatrix<double> sum = ComplexMatrix<double>::Zero(all.rows(), all.cols());
    for (const auto& e : evs) sum += synthesize_if<double>(rc, tn, std::span<const EmissionEvent>(&e, 1));
    CHECK((all - sum).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, all.cwiseAbs().maxCoeff()));

    const double a = g.real(0.1, 10.0);
    EmissionEvent e = evs[0];
    const auto one = synthesize_if<double>(rc, tn, std::span<const EmissionEvent>(&e, 1));
    e.amplitude *= a;
    const auto scaled = synthesize_if<double>(rc, tn, std::span<const EmissionEvent>(&e, 1));
    CHECK((scaled - one * a).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, scaled.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("property: IF samples agree with the absolute-phase oracle") {
  Gen g(606);
  const ReceiverConfig rc = small_receiver();
  for (int t = 0; t < 15; ++t) {
    CAPTURE(t);
    EmissionEvent e = g.event(rc);
    e.f_start = rc.chirp.f_start();
    e.slope = rc.chirp.slope();
    e.start = static_cast<TimePoint>(g.real(0.0, 1e-7));  // beat below f_adc / 2
    const TimePoint tn = static_cast<TimePoint>(g.real(0.0, 0.01));
    e.start += tn;
    const auto block = synthesize_if<double>(rc, tn, std::span<const EmissionEvent>(&e, 1));
    for (std::size_t i = 0; i < rc.chirp.n_samples(); i += 17) {
      const long double u = static_cast<long double>(i) / static_cast<long double>(rc.chirp.f_adc());
      if (tn + u < e.start) continue;
      const auto want = oracle::if_sample(tn, e.f_start, e.slope, e.start, e.f_start, e.slope, e.phase, e.amplitude, u);
      CHECK(std::abs(block(0, static_cast<Eigen::Index>(i)) - want) < 1e-6 * e.amplitude);
    }
  }
}

TEST_CASE("property: RDMX roundtrips any shape bit for bit") {
  Gen g(707);
  for (int t = 0; t < kTrials; ++t) {
    RdmxArray a;
    a.kind = g.coin() ? RdmxKind::complex_pair : RdmxKind::real64;
    for (std::size_t r = g.index(1, 4); r > 0; --r) a.dims.push_back(static_cast<std::uint32_t>(g.index(0, 6)));
    a.values.resize(a.elements() * (a.kind == RdmxKind::complex_pair ? 2 : 1));
    for (auto& v : a.values) v = std::bit_cast<double>(g.rng());
    const RdmxArray b = decode_rdmx(encode_rdmx(a));
    CHECK(b.kind == a.kind);
    CHECK(b.dims == a.dims);
    REQUIRE(b.values.size() == a.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i)
      CHECK(std::bit_cast<std::uint64_t>(b.values[i]) == std::bit_cast<std::uint64_t>(a.values[i]));
  }
}

TEST_CASE("property: victim chirp starts advance by a constant drifted period") {
  Gen g(808);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t n = g.index(2, 256);
    const double frame = g.real(0.001, 1.0) * static_cast<double>(n);
    const double drift = g.real(-100.0, 100.0);
    const auto ts = victim_timeline(FrameConfig(n, frame), drift);
    REQUIRE(ts.size() == n);
    const double step = frame / static_cast<double>(n) * (1.0 + drift * 1e-6);
    for (std::size_t i = 1; i < n; ++i) {
      CHECK(ts[i] > ts[i - 1]);
      CHECK(static_cast<double>(ts[i] - ts[i - 1]) == doctest::Approx(step).epsilon(1e-12));
    }
  }
}
