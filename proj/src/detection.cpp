#include "fmcw/detection.hpp"

#include <cmath>
#include <thread>

namespace fmcw {

std::string to_string(CfarAlgorithm a) { return a == CfarAlgorithm::ca ? "ca" : "os"; }

CfarAlgorithm parse_cfar_algorithm(const std::string& s) {
  if (s == "ca" || s == "CA") return CfarAlgorithm::ca;
  if (s == "os" || s == "OS") return CfarAlgorithm::os;
  throw ConfigError("unknown CFAR algorithm '" + s + "'");
}

double ca_scale(std::size_t nc, double pfa) {
  if (nc == 0) throw ConfigError("ca_scale: nc must be positive");
  if (!(pfa > 0.0 && pfa < 1.0)) throw ConfigError("ca_scale: P_FA must lie in (0, 1)");
  const double n = static_cast<double>(nc);
  return n * (std::pow(pfa, -1.0 / n) - 1.0);
}

double os_pfa(std::size_t nc, std::size_t k, double sc) {
  if (k < 1 || k > nc) throw ConfigError("os_pfa: order k must satisfy 1 <= k <= nc");
  if (!(sc >= 0.0)) throw ConfigError("os_pfa: scale must be non-negative");
  double p = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double m = static_cast<double>(nc - i);
    p *= m / (m + sc);
  }
  return p;
}

double os_solve_scale(std::size_t nc, std::size_t k, double pfa) {
  if (k < 1 || k > nc) throw ConfigError("os_solve_scale: order k must satisfy 1 <= k <= nc");
  if (!(pfa > 0.0 && pfa < 1.0)) throw ConfigError("os_solve_scale: P_FA must lie in (0, 1)");
  double lo = 0.0, hi = 1.0;
  int grow = 0;
  while (os_pfa(nc, k, hi) > pfa) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 200) throw NumericError("os_solve_scale: could not bracket the scale");
  }
  // os_pfa decreases in sc: pfa(lo) >= target > pfa(hi).
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p = os_pfa(nc, k, mid);
    if (p > pfa) lo = mid; else hi = mid;
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  const double sc = 0.5 * (lo + hi);
  if (std::abs(os_pfa(nc, k, sc) - pfa) > 1e-10)
    throw NumericError("os_solve_scale: bisection did not reach 1e-10");
  return sc;
}

void CfarConfig::validate() const {
  if (nc < 2 || nc % 2 != 0) throw ConfigError("CFAR nc must be even and at least 2");
  if (guard < 1) throw ConfigError("CFAR needs at least one guard cell per side");
  if (sc) {
    if (!(*sc > 0.0)) throw ConfigError("CFAR scale must be positive");
  } else if (!(pfa > 0.0 && pfa < 1.0)) {
    throw ConfigError("CFAR P_FA must lie in (0, 1)");
  }
  if (algorithm == CfarAlgorithm::os) {
    const std::size_t kk = order();
    if (kk < 1 || kk > nc) throw ConfigError("OS-CFAR order must satisfy 1 <= k <= nc");
  }
}

std::size_t CfarConfig::order() const {
  if (k != 0) return k;
  return static_cast<std::size_t>(std::lround(0.75 * static_cast<double>(nc)));
}

double CfarConfig::scale() const {
  if (sc) return *sc;
  return algorithm == CfarAlgorithm::ca ? ca_scale(nc, pfa) : os_solve_scale(nc, order(), pfa);
}

FlagMap cfar_detect_map(const Eigen::ArrayXXd& power, const CfarConfig& cfg, bool along_doppler, unsigned jobs) {
  cfg.validate();
  const Eigen::Index nr = power.rows();
  const Eigen::Index nv = power.cols();
  FlagMap flags = FlagMap::Constant(nr, nv, false);
  CfarConfig resolved = cfg;
  resolved.sc = cfg.scale();  // solve once, not per column

  auto columns = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index v = begin; v < end; ++v) flags.col(v) = cfar_detect(power.col(v), resolved);
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(nv)));
  if (jobs == 1) {
    columns(0, nv);
  } else {
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (nv + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
      const Eigen::Index b = j * chunk, e = std::min<Eigen::Index>(nv, b + chunk);
      if (b < e) pool.emplace_back(columns, b, e);
    }
    for (auto& t : pool) t.join();
  }

  if (along_doppler && nv > static_cast<Eigen::Index>(cfg.nc + 2 * cfg.guard)) {
    for (Eigen::Index r = 0; r < nr; ++r) {
      if (!flags.row(r).any()) continue;
      const auto row_flags = cfar_detect(power.row(r).transpose(), resolved);
      flags.row(r) = flags.row(r) && row_flags.transpose();
    }
  } else if (along_doppler) {
    throw ConfigError("too few Doppler bins for a CFAR along the Doppler axis");
  }
  return flags;
}

namespace {

struct Region {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
};

std::vector<Region> connected_regions(const FlagMap& flags) {
  const Eigen::Index nr = flags.rows(), nv = flags.cols();
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> seen = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(nr, nv, false);
  std::vector<Region> regions;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack;
  // Scan in range-major order so region numbering is deterministic.
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (Eigen::Index v = 0; v < nv; ++v) {
      if (!flags(r, v) || seen(r, v)) continue;
      Region reg;
      stack.assign(1, {r, v});
      seen(r, v) = true;
      while (!stack.empty()) {
        auto [cr, cv] = stack.back();
        stack.pop_back();
        reg.cells.emplace_back(cr, cv);
        for (Eigen::Index dr = -1; dr <= 1; ++dr) {
          for (Eigen::Index dv = -1; dv <= 1; ++dv) {
            const Eigen::Index rr = cr + dr, vv = cv + dv;
            if (rr < 0 || rr >= nr || vv < 0 || vv >= nv) continue;
            if (flags(rr, vv) && !seen(rr, vv)) {
              seen(rr, vv) = true;
              stack.emplace_back(rr, vv);
            }
          }
        }
      }
      regions.push_back(std::move(reg));
    }
  }
  return regions;
}

std::vector<double> angular_peaks(const std::vector<double>& p, double rel_db) {
  const std::size_t n = p.size();
  const double top = *std::max_element(p.begin(), p.end());
  const double floor = top * std::pow(10.0, -rel_db / 10.0);
  std::vector<double> peaks;
  for (std::size_t k = 0; k < n; ++k) {
    const double left = p[(k + n - 1) % n], right = p[(k + 1) % n];
    if (!(p[k] > left && p[k] >= right) || p[k] < floor || p[k] <= 0.0) continue;
    // Parabolic refinement on the dB values.
    const double a = 10 * std::log10(std::max(left, 1e-300));
    const double b = 10 * std::log10(p[k]);
    const double c = 10 * std::log10(std::max(right, 1e-300));
    const double den = a - 2 * b + c;
    double off = den < 0.0 ? 0.5 * (a - c) / den : 0.0;
    off = std::clamp(off, -0.5, 0.5);
    peaks.push_back(static_cast<double>(k) + off);
  }
  return peaks;
}

}  // namespace

std::vector<Detection> group_detections(const RangeDopplerMap<double>& map, const Eigen::ArrayXXd& power,
                                        const FlagMap& flags, const BinAxes& axes, const ReceiverConfig& rc,
                                        CfarAlgorithm algorithm, const GroupingOptions& opts) {
  if (flags.rows() != power.rows() || flags.cols() != power.cols() ||
      power.rows() != static_cast<Eigen::Index>(map.n_range) ||
      power.cols() != static_cast<Eigen::Index>(map.n_velocity))
    throw ConfigError("group_detections: flag map does not match the range-Doppler map");
  const double lambda = rc.chirp.wavelength();
  const double l = rc.rx.spacing_m;

  std::vector<Detection> out;
  for (const Region& reg : connected_regions(flags)) {
    double wsum = 0.0, rsum = 0.0, vsum = 0.0, best = -1.0;
    std::pair<Eigen::Index, Eigen::Index> peak{0, 0};
    for (auto [r, v] : reg.cells) {
      const double w = power(r, v);
      wsum += w;
      rsum += w * static_cast<double>(r);
      vsum += w * static_cast<double>(v);
      if (w > best) {
        best = w;
        peak = {r, v};
      }
    }
    const double rc_bin = wsum > 0.0 ? rsum / wsum : static_cast<double>(peak.first);
    const double vc_bin = wsum > 0.0 ? vsum / wsum : static_cast<double>(peak.second);

    Detection base;
    base.algorithm = algorithm;
    base.range_bin = static_cast<std::size_t>(peak.first);
    base.velocity_bin = static_cast<std::size_t>(peak.second);
    base.range_m = axes.range_at(rc_bin);
    base.velocity_mps = axes.velocity_at(vc_bin);
    base.power_db = 10.0 * std::log10(std::max(best, 1e-300));
    base.cells = reg.cells.size();

    if (map.n_rx() < 2) {
      out.push_back(base);
      continue;
    }
    const auto snap = map.snapshot(base.range_bin, base.velocity_bin);
    const auto spectrum = angle_spectrum(snap, std::max(opts.angle_fft, snap.size()));
    const auto peaks = angular_peaks(spectrum, opts.angle_peak_rel_db);
    if (peaks.size() <= 1) {
      std::vector<double> phases(snap.size());
      for (std::size_t m = 0; m < snap.size(); ++m) phases[m] = std::arg(snap[m]);
      try {
        base.azimuth_rad = estimate_aoa(phases, l, lambda);
      } catch (const AmbiguousAngleError&) {
        base.azimuth_rad = peaks.empty() ? 0.0 : angle_of_bin(peaks[0], spectrum.size(), l, lambda);
      }
      out.push_back(base);
      continue;
    }
    for (double pk : peaks) {
      Detection d = base;
      const double az = angle_of_bin(pk, spectrum.size(), l, lambda);
      if (std::isnan(az)) continue;
      d.azimuth_rad = az;
      out.push_back(d);
    }
  }
  return out;
}

}  // namespace fmcw
