#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fmcw/constants.hpp"
#include "fmcw/receiver.hpp"
#include "fmcw/scene.hpp"

namespace fmcw {

enum class AttackMode { synchronized, freq_offset, non_synchronized, noise };

std::string to_string(AttackMode m);
AttackMode parse_attack_mode(const std::string& s);

/// What an attacker can learn from data sheets: the public chirp and frame
/// parameters, never the victim's chirp start times.
struct VictimDescriptor {
  double f_start = 77e9;
  double bandwidth = 1e9;
  double ramp = 512e-6;
  std::size_t n_chirps = 50;
  double frame_s = 0.2;

  double slope() const { return bandwidth / ramp; }
  double chirp_period() const { return frame_s / static_cast<double>(n_chirps); }
};

/// Privileged view used by the synchronized baselines (and by prediction):
/// the descriptor plus the actual chirp start times on the victim timeline.
struct VictimSchedule {
  VictimDescriptor descriptor;
  std::vector<TimePoint> chirp_starts;
};

struct AttackPlan {
  AttackMode mode = AttackMode::synchronized;
  double tau_a = 0.0;              ///< s, synchronized / freq_offset delay
  double period = 0.0;             ///< s, T_a (non_synchronized; noise: 0 = victim period)
  double gain = 1.0;               ///< linear amplitude multiplier
  double start_freq_offset = 0.0;  ///< Hz added to f_s (non_synchronized, noise)
  double jitter_hz = 0.0;          ///< noise: start frequency spread, +/-
  double time_jitter = 0.0;        ///< noise: arrival spread [0, time_jitter), s
  double drift_ppm = 0.0;          ///< attacker clock rate error
  double start_offset = 0.0;       ///< s, first attacker chirp emission on the victim timeline
  bool random_phase = false;
  std::uint64_t seed = 0;

  /// Frequency step below f_s used by the freq_offset mode, S * tau_a.
  double delta_f_a(const VictimDescriptor& v) const { return v.slope() * tau_a; }
  void validate(const VictimDescriptor& v) const;
};

/// Expected ghost of a (non-noise) plan, computed from schedule arithmetic.
struct GhostPrediction {
  double range_m = 0.0;
  double velocity_mps = 0.0;
  std::vector<double> azimuth_rad;  ///< one per attacker TX antenna
  std::vector<double> delay_s;      ///< effective delay per victim chirp (TX 0), NaN when not visible
  std::size_t visible_chirps = 0;
};

/// One chirp per victim chirp arriving exactly tau_a after its start.
std::vector<EmissionEvent> plan_synchronized(const AttackPlan& plan, const AttackerPlacement& placement,
                                             const VictimSchedule& victim);

/// Chirps arrive with the victim's but start S * tau_a below f_s.
std::vector<EmissionEvent> plan_freq_offset(const AttackPlan& plan, const AttackerPlacement& placement,
                                            const VictimSchedule& victim);

/// Free-running chirp train with period T_a covering the whole frame.
std::vector<EmissionEvent> plan_non_synchronized(const AttackPlan& plan, const AttackerPlacement& placement,
                                                 const VictimDescriptor& victim);

/// One chirp per victim chirp period with jittered start frequency and arrival.
std::vector<EmissionEvent> plan_noise(const AttackPlan& plan, const AttackerPlacement& placement,
                                      const VictimDescriptor& victim);

/// Dispatches on plan.mode. Only the synchronized modes see `victim.chirp_starts`.
std::vector<EmissionEvent> plan_attack(const AttackPlan& plan, const AttackerPlacement& placement,
                                       const VictimSchedule& victim);

GhostPrediction predict_ghosts(const AttackPlan& plan, const AttackerPlacement& placement,
                               const VictimSchedule& victim, const ReceiverConfig& receiver);

}  // namespace fmcw
