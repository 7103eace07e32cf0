#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fmcw/errors.hpp"
#include "fmcw/receiver.hpp"
#include "fmcw/waveform.hpp"

namespace fmcw {

enum class CfarAlgorithm { ca, os };

std::string to_string(CfarAlgorithm a);
CfarAlgorithm parse_cfar_algorithm(const std::string& s);

/// sc = nc (P_FA^(-1/nc) - 1), the CA-CFAR scale for exponential cells.
double ca_scale(std::size_t nc, double pfa);

/// False-alarm probability of OS-CFAR with order k and scale sc:
/// k C(nc,k) (k-1)! (sc+nc-k)! / (sc+nc)!, evaluated as the telescoped product
/// prod_{i<k} (nc - i) / (nc - i + sc).
double os_pfa(std::size_t nc, std::size_t k, double sc);

/// Bisection for the sc that gives os_pfa(nc, k, sc) == pfa.
double os_solve_scale(std::size_t nc, std::size_t k, double pfa);

/// One CFAR detector. `nc` counts reference cells only (nc/2 per side);
/// `guard` cells on each side of the cell under test are skipped.
struct CfarConfig {
  CfarAlgorithm algorithm = CfarAlgorithm::ca;
  std::size_t nc = 16;
  std::size_t guard = 1;
  double pfa = 1e-6;
  std::optional<double> sc;  ///< explicit scale; otherwise derived from pfa
  std::size_t k = 0;         ///< OS order (1-based); 0 means round(0.75 nc)

  void validate() const;
  std::size_t order() const;
  /// The scale actually applied: explicit sc, or derived from pfa.
  double scale() const;
  /// First index with a full window; lower indices are never flagged.
  std::size_t min_index() const { return nc / 2 + guard; }
};

namespace detail {

template <typename Derived>
double cfar_noise_at(const Eigen::DenseBase<Derived>& cells, Eigen::Index y, const CfarConfig& cfg,
                     std::vector<double>& scratch) {
  const auto half = static_cast<Eigen::Index>(cfg.nc / 2);
  const auto g = static_cast<Eigen::Index>(cfg.guard);
  scratch.clear();
  for (Eigen::Index i = y - g - half; i < y - g; ++i) scratch.push_back(static_cast<double>(cells(i)));
  for (Eigen::Index i = y + g + 1; i <= y + g + half; ++i) scratch.push_back(static_cast<double>(cells(i)));
  if (cfg.algorithm == CfarAlgorithm::ca) {
    double s = 0.0;
    for (double v : scratch) s += v;
    return s / static_cast<double>(scratch.size());
  }
  const auto kth = scratch.begin() + static_cast<std::ptrdiff_t>(cfg.order() - 1);
  std::nth_element(scratch.begin(), kth, scratch.end());
  return *kth;
}

}  // namespace detail

/// Noise estimate ne per cell (NaN where the window does not fit).
template <typename Derived>
Eigen::ArrayXd cfar_noise(const Eigen::DenseBase<Derived>& cells, const CfarConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = cells.size();
  const auto reach = static_cast<Eigen::Index>(cfg.nc / 2 + cfg.guard);
  if (n <= static_cast<Eigen::Index>(cfg.nc + 2 * cfg.guard))
    throw ConfigError("CFAR input of " + std::to_string(n) + " cells is too short for nc=" +
                      std::to_string(cfg.nc) + ", guard=" + std::to_string(cfg.guard));
  Eigen::ArrayXd ne = Eigen::ArrayXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> scratch;
  scratch.reserve(cfg.nc);
  for (Eigen::Index y = reach; y + reach < n; ++y) ne(y) = detail::cfar_noise_at(cells, y, cfg, scratch);
  return ne;
}

/// Adaptive threshold sc * ne per cell (NaN at the edges).
template <typename Derived>
Eigen::ArrayXd cfar_threshold(const Eigen::DenseBase<Derived>& cells, const CfarConfig& cfg) {
  return cfar_noise(cells, cfg) * cfg.scale();
}

/// Flags cells whose square-law power exceeds the adaptive threshold.
template <typename Derived>
Eigen::Array<bool, Eigen::Dynamic, 1> cfar_detect(const Eigen::DenseBase<Derived>& cells, const CfarConfig& cfg) {
  const Eigen::ArrayXd t = cfar_threshold(cells, cfg);
  Eigen::Array<bool, Eigen::Dynamic, 1> flags(cells.size());
  for (Eigen::Index i = 0; i < cells.size(); ++i)
    flags(i) = !std::isnan(t(i)) && static_cast<double>(cells(i)) > t(i);
  return flags;
}

using FlagMap = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Runs CFAR along range for every Doppler column of `power`
/// (n_range x n_velocity). With `along_doppler`, a cell must also pass a CFAR
/// along its range row. Columns are split over `jobs` threads.
FlagMap cfar_detect_map(const Eigen::ArrayXXd& power, const CfarConfig& cfg, bool along_doppler = false,
                        unsigned jobs = 1);

struct Detection {
  CfarAlgorithm algorithm = CfarAlgorithm::ca;
  std::size_t range_bin = 0;     ///< peak cell
  std::size_t velocity_bin = 0;  ///< peak cell (shifted index)
  double range_m = 0.0;          ///< from the power-weighted centroid
  double velocity_mps = 0.0;
  double azimuth_rad = 0.0;
  double power_db = 0.0;         ///< peak square-law power
  std::size_t cells = 0;         ///< flagged cells in the region
};

struct GroupingOptions {
  std::size_t angle_fft = 64;
  /// Angular peaks within this many dB of the strongest become separate objects.
  double angle_peak_rel_db = 8.0;
};

/// Merges 8-connected flagged cells into objects. Each region is examined
/// across the receive array at its peak cell; every angular peak within
/// `angle_peak_rel_db` of the strongest yields its own Detection.
std::vector<Detection> group_detections(const RangeDopplerMap<double>& map, const Eigen::ArrayXXd& power,
                                        const FlagMap& flags, const BinAxes& axes, const ReceiverConfig& rc,
                                        CfarAlgorithm algorithm, const GroupingOptions& opts = {});

}  // namespace fmcw
