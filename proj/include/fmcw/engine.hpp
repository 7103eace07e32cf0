#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmcw/attacker.hpp"
#include "fmcw/detection.hpp"
#include "fmcw/receiver.hpp"
#include "fmcw/scene.hpp"
#include "fmcw/waveform.hpp"

namespace fmcw {

struct AttackerSpec {
  std::string name;
  AttackerPlacement placement;
  AttackPlan plan;
};

/// Signal processing applied to a cube: windows, both CFAR detectors, grouping.
struct ProcessingConfig {
  WindowKind range_window = WindowKind::hann;
  WindowKind doppler_window = WindowKind::rectangular;
  CfarConfig ca{CfarAlgorithm::ca, 16, 1, 1e-6, std::nullopt, 0};
  CfarConfig os{CfarAlgorithm::os, 16, 1, 1e-6, std::nullopt, 0};
  bool cfar_along_doppler = false;
  GroupingOptions grouping;
};

struct Scenario {
  std::string name;
  ReceiverConfig receiver;
  double victim_drift_ppm = 0.0;
  double noise_sigma = 0.0;  ///< RMS of the complex AWGN per IF sample; 0 = off
  std::vector<Reflector> reflectors;
  std::vector<AttackerSpec> attacks;
  ProcessingConfig processing;
  std::uint64_t seed = 0;  ///< root of all randomness (AWGN, attacker draws)

  void validate() const;
  VictimDescriptor descriptor() const;
};

/// Parses a scenario document; unknown keys are rejected with ScenarioError.
Scenario scenario_from_json(const nlohmann::json& doc, std::uint64_t seed = 0);
nlohmann::json read_json_file(const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path, std::uint64_t seed = 0);

/// Chirp n starts at n T_c (1 + drift_ppm 1e-6).
std::vector<TimePoint> victim_timeline(const FrameConfig& frame, double drift_ppm = 0.0);

enum class ObjectKind { real, ghost, false_alarm };
std::string to_string(ObjectKind k);

/// Where an object is expected to show up on the range-Doppler map.
struct TruthEntry {
  ObjectKind kind = ObjectKind::real;
  std::string name;
  double range_bin = 0.0;     ///< fractional
  double velocity_bin = 0.0;  ///< fractional, shifted index
};

struct AttributedDetection {
  Detection detection;
  ObjectKind kind = ObjectKind::false_alarm;
  std::string source;  ///< truth entry name, empty for false alarms
};

struct Summary {
  double noise_floor_db = 0.0;  ///< mean CA-CFAR noise estimate over evaluated cells
  std::size_t ca_total = 0, os_total = 0;
  std::size_t ca_real = 0, ca_ghost = 0, ca_false = 0;
  std::size_t os_real = 0, os_ghost = 0, os_false = 0;
};

struct Processed {
  BinAxes axes;
  RangeDopplerMap<double> map;
  Eigen::ArrayXXd power;
  std::vector<AttributedDetection> ca;
  std::vector<AttributedDetection> os;
  Summary summary;
};

struct RunResult {
  IfDataCube<double> cube;
  std::vector<GhostPrediction> ghosts;  ///< one per non-noise attack, in scenario order
  std::vector<TruthEntry> truth;
  Processed processed;
};

/// All emission events of one frame: reflections per chirp per reflector,
/// then each attacker's schedule. Sorted by arrival time.
std::vector<EmissionEvent> build_events(const Scenario& s, const std::vector<TimePoint>& timeline,
                                        bool include_reflections = true, bool include_attacks = true);

/// Synthesizes the IF cube (plus AWGN when enabled); chirps are split over `jobs` threads.
IfDataCube<double> synthesize_cube(const Scenario& s, unsigned jobs = 1, bool include_reflections = true,
                                   bool include_attacks = true, bool include_noise = true);

/// Expected map positions of every reflector and every predictable ghost.
std::vector<TruthEntry> expected_objects(const Scenario& s, const BinAxes& axes,
                                         std::vector<GhostPrediction>* ghosts = nullptr);

/// Window, range-FFT, Doppler-FFT, both CFARs, grouping and attribution.
Processed process_cube(const IfDataCube<double>& cube, const ReceiverConfig& receiver,
                       const ProcessingConfig& processing, const std::vector<TruthEntry>& truth,
                       unsigned jobs = 1);

RunResult run(const Scenario& s, unsigned jobs = 1);

/// Worst element-wise relative mismatch of cube(scene + attacks) against
/// cube(scene) + cube(attacks only), normalised by the largest magnitude.
double superposition_error(const Scenario& s, unsigned jobs = 1);

struct SweepRow {
  double value = 0.0;
  Summary summary;
};

/// Sets the numeric field at dotted `path` (e.g. "attacks.0.plan.gain").
void set_json_path(nlohmann::json& doc, const std::string& path, double value);

std::vector<SweepRow> sweep(const nlohmann::json& scenario_doc, const std::string& path,
                            const std::vector<double>& values, unsigned jobs = 1, std::uint64_t seed = 0);

}  // namespace fmcw
