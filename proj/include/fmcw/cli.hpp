#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fmcw/detection.hpp"
#include "fmcw/engine.hpp"

namespace fmcw {

struct CommandOutcome {
  int exit_code = 0;  ///< 0 ok, 1 scenario/config, 2 numeric, 3 I/O
  std::vector<std::filesystem::path> artifacts;
  std::string message;
};

/// Maps an exception to the CLI exit code table.
int exit_code_for(const std::exception& e);

struct RunOptions {
  std::uint64_t seed = 0;
  bool no_cube = false;
  unsigned jobs = 1;
};

/// Writes cube.rdmx, map.rdmx, detections.csv and summary.json into `out_dir`.
CommandOutcome cmd_run(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
                       const RunOptions& opts = {});

struct DetectOptions {
  std::string algo = "both";
  std::optional<std::size_t> nc, guard, k;
  std::optional<double> pfa, sc;
  /// Scenario providing radar and processing settings; default: summary.json next to the cube.
  std::optional<std::filesystem::path> scenario;
  std::optional<std::filesystem::path> output;  ///< CSV destination; empty prints to `out`
  unsigned jobs = 1;
};

/// Re-runs windows, FFTs, CFAR and grouping on a stored cube.
CommandOutcome cmd_detect(const std::filesystem::path& cube, const DetectOptions& opts, std::ostream& out);

struct SweepOptions {
  std::string param;
  std::vector<double> values;
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> output;
};

CommandOutcome cmd_sweep(const std::filesystem::path& scenario, const SweepOptions& opts, std::ostream& out);

inline const std::vector<std::string> kFigureIds{"cfar_range", "aoa_heatmap", "range_doppler"};

struct FigdataOptions {
  std::string fig;
  std::optional<std::filesystem::path> output;  ///< default <fig>.csv
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

CommandOutcome cmd_figdata(const std::filesystem::path& scenario, const FigdataOptions& opts);

/// CSV bodies behind cmd_figdata, reusable without touching the filesystem.
std::string figdata_csv(const Scenario& s, const RunResult& r, const std::string& fig);
std::string sweep_csv(const std::vector<SweepRow>& rows);
nlohmann::json summary_json(const nlohmann::json& scenario_doc, std::uint64_t seed, const RunResult& r);

/// Entry point behind the fmcw-spoof executable.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fmcw
