#include "fmcw/attacker.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "fmcw/errors.hpp"

namespace fmcw {

std::string to_string(AttackMode m) {
  switch (m) {
    case AttackMode::synchronized: return "synchronized";
    case AttackMode::freq_offset: return "freq_offset";
    case AttackMode::non_synchronized: return "non_synchronized";
    case AttackMode::noise: return "noise";
  }
  return "?";
}

AttackMode parse_attack_mode(const std::string& s) {
  if (s == "synchronized") return AttackMode::synchronized;
  if (s == "freq_offset") return AttackMode::freq_offset;
  if (s == "non_synchronized") return AttackMode::non_synchronized;
  if (s == "noise") return AttackMode::noise;
  throw ConfigError("unknown attack mode '" + s + "'");
}

void AttackPlan::validate(const VictimDescriptor& v) const {
  if (!(gain >= 0.0)) throw PlanError("attack gain must be non-negative");
  if (!(jitter_hz >= 0.0)) throw PlanError("frequency jitter bound must be non-negative");
  if (!(time_jitter >= 0.0)) throw PlanError("time jitter bound must be non-negative");
  switch (mode) {
    case AttackMode::synchronized:
    case AttackMode::freq_offset:
      if (!(tau_a >= 0.0 && tau_a < v.ramp))
        throw PlanError("tau_a must lie in [0, t_c); otherwise the ghost misses the listening window");
      break;
    case AttackMode::non_synchronized:
      if (!(period > 0.0)) throw PlanError("non-synchronized attack needs a positive chirp period T_a");
      break;
    case AttackMode::noise:
      if (period < 0.0) throw PlanError("noise chirp period must be non-negative");
      break;
  }
}

namespace {

/// Uniform [0, 1) from the top 53 bits; identical on every standard library.
double unit_uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

struct TxGeometry {
  AttackerPath ref;
  std::vector<AttackerPath> tx;
};

TxGeometry geometry(const AttackerPlacement& placement) {
  placement.validate();
  TxGeometry g;
  AttackerPlacement reference = placement;
  reference.tx_offsets = {TxOffset{}};
  g.ref = attacker_path(reference, 0);
  for (std::size_t k = 0; k < placement.tx_offsets.size(); ++k) g.tx.push_back(attacker_path(placement, k));
  return g;
}

/// Adds one event per TX antenna for an emission at `emit` (attacker time base).
void emit_chirp(std::vector<EmissionEvent>& out, const TxGeometry& g, const AttackPlan& plan, TimePoint emit,
                double f_start, double slope, double duration, double phase) {
  for (std::size_t k = 0; k < g.tx.size(); ++k) {
    EmissionEvent ev;
    ev.kind = EmitterKind::attacker;
    ev.source = static_cast<int>(k);
    ev.start = emit + static_cast<TimePoint>(g.tx[k].delay_s);
    ev.f_start = f_start;
    ev.slope = slope;
    ev.duration = duration;
    ev.amplitude = plan.gain * g.tx[k].amplitude_scale;
    ev.phase = phase;
    ev.azimuth = g.tx[k].azimuth_rad;
    out.push_back(ev);
  }
}

std::vector<EmissionEvent> plan_aligned(const AttackPlan& plan, const AttackerPlacement& placement,
                                        const VictimSchedule& victim, bool by_frequency) {
  const VictimDescriptor& v = victim.descriptor;
  plan.validate(v);
  const TxGeometry g = geometry(placement);
  std::mt19937_64 rng(plan.seed);
  const long double rate = 1.0L + static_cast<long double>(plan.drift_ppm) * 1e-6L;
  const TimePoint t0 = victim.chirp_starts.empty() ? 0 : victim.chirp_starts.front();
  const double f_start = by_frequency ? v.f_start - plan.delta_f_a(v) : v.f_start;
  const TimePoint lead = by_frequency ? 0 : static_cast<TimePoint>(plan.tau_a);

  std::vector<EmissionEvent> out;
  out.reserve(victim.chirp_starts.size() * g.tx.size());
  for (TimePoint tn : victim.chirp_starts) {
    // Frame-level sync at t0, then the attacker's own clock.
    const TimePoint arrival = t0 + (tn - t0) * rate + lead;
    const TimePoint emit = arrival - static_cast<TimePoint>(g.ref.delay_s);
    const double phase = plan.random_phase ? kTwoPi * unit_uniform(rng) : 0.0;
    emit_chirp(out, g, plan, emit, f_start, v.slope(), v.ramp, phase);
  }
  return out;
}

}  // namespace

std::vector<EmissionEvent> plan_synchronized(const AttackPlan& plan, const AttackerPlacement& placement,
                                             const VictimSchedule& victim) {
  return plan_aligned(plan, placement, victim, false);
}

std::vector<EmissionEvent> plan_freq_offset(const AttackPlan& plan, const AttackerPlacement& placement,
                                            const VictimSchedule& victim) {
  if (plan.delta_f_a(victim.descriptor) > victim.descriptor.bandwidth)
    throw PlanError("frequency offset exceeds the chirp bandwidth");
  return plan_aligned(plan, placement, victim, true);
}

std::vector<EmissionEvent> plan_non_synchronized(const AttackPlan& plan, const AttackerPlacement& placement,
                                                 const VictimDescriptor& victim) {
  plan.validate(victim);
  const TxGeometry g = geometry(placement);
  std::mt19937_64 rng(plan.seed);
  const long double step = static_cast<long double>(plan.period) *
                           (1.0L + static_cast<long double>(plan.drift_ppm) * 1e-6L);
  // Cover every emission that can overlap a listening window in [0, frame).
  const long double first = std::floor((-static_cast<long double>(victim.ramp) - 1e-6L - plan.start_offset) / step);
  const long double last = std::ceil((static_cast<long double>(victim.frame_s) - plan.start_offset) / step);
  if (last - first > 1e7L) throw PlanError("attacker period too short: more than 1e7 chirps per frame");

  std::vector<EmissionEvent> out;
  out.reserve(static_cast<std::size_t>(last - first + 1) * g.tx.size());
  const double f_start = victim.f_start + plan.start_freq_offset;
  for (long long i = static_cast<long long>(first); i <= static_cast<long long>(last); ++i) {
    const TimePoint emit = static_cast<TimePoint>(plan.start_offset) + static_cast<long double>(i) * step;
    const double phase = plan.random_phase ? kTwoPi * unit_uniform(rng) : 0.0;
    emit_chirp(out, g, plan, emit, f_start, victim.slope(), victim.ramp, phase);
  }
  return out;
}

std::vector<EmissionEvent> plan_noise(const AttackPlan& plan, const AttackerPlacement& placement,
                                      const VictimDescriptor& victim) {
  plan.validate(victim);
  const TxGeometry g = geometry(placement);
  std::mt19937_64 rng(plan.seed);
  const double period = plan.period > 0.0 ? plan.period : victim.chirp_period();
  const long double step = static_cast<long double>(period) * (1.0L + static_cast<long double>(plan.drift_ppm) * 1e-6L);

  std::vector<EmissionEvent> out;
  out.reserve(victim.n_chirps * g.tx.size());
  for (std::size_t i = 0; i < victim.n_chirps; ++i) {
    // Draw order is fixed: frequency, time, phase.
    const double df = plan.jitter_hz * (2.0 * unit_uniform(rng) - 1.0);
    const double dt = plan.time_jitter * unit_uniform(rng);
    const double phase = plan.random_phase ? kTwoPi * unit_uniform(rng) : 0.0;
    const TimePoint emit = static_cast<TimePoint>(plan.start_offset) + static_cast<long double>(i) * step +
                           static_cast<TimePoint>(dt);
    emit_chirp(out, g, plan, emit, victim.f_start + plan.start_freq_offset + df, victim.slope(), victim.ramp, phase);
  }
  return out;
}

std::vector<EmissionEvent> plan_attack(const AttackPlan& plan, const AttackerPlacement& placement,
                                       const VictimSchedule& victim) {
  switch (plan.mode) {
    case AttackMode::synchronized: return plan_synchronized(plan, placement, victim);
    case AttackMode::freq_offset: return plan_freq_offset(plan, placement, victim);
    case AttackMode::non_synchronized: return plan_non_synchronized(plan, placement, victim.descriptor);
    case AttackMode::noise: return plan_noise(plan, placement, victim.descriptor);
  }
  throw PlanError("unhandled attack mode");
}

GhostPrediction predict_ghosts(const AttackPlan& plan, const AttackerPlacement& placement,
                               const VictimSchedule& victim, const ReceiverConfig& receiver) {
  if (plan.mode == AttackMode::noise) throw PlanError("noise plans do not create a predictable ghost");
  const auto events = plan_attack(plan, placement, victim);
  const double slope = victim.descriptor.slope();
  const double fs = victim.descriptor.f_start;
  const double limit = receiver.beat_limit();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  GhostPrediction pred;
  pred.delay_s.assign(victim.chirp_starts.size(), nan);
  std::vector<std::pair<double, double>> seen;  // (chirp index, delay)
  for (std::size_t n = 0; n < victim.chirp_starts.size(); ++n) {
    const TimePoint tn = victim.chirp_starts[n];
    // Nearest TX 0 chirp to the start of this listening window.
    const EmissionEvent* best = nullptr;
    long double best_gap = std::numeric_limits<long double>::max();
    for (const auto& ev : events) {
      if (ev.source != 0) continue;
      const long double gap = std::fabs(ev.start - tn);
      if (gap < best_gap) {
        best_gap = gap;
        best = &ev;
      }
    }
    if (!best) continue;
    const double d = static_cast<double>(best->start - tn);
    // Equal slopes: the beat is fixed, so the ghost sits at delay beat / S.
    const double tau = d + (fs - best->f_start) / slope;
    if (std::abs(slope * tau) > limit) continue;
    if (!(d < victim.descriptor.ramp && d + best->duration > 0.0)) continue;
    pred.delay_s[n] = tau;
    seen.emplace_back(static_cast<double>(n), tau);
  }
  pred.visible_chirps = seen.size();
  if (seen.empty()) throw PlanError("ghost is not visible in any victim chirp");
  const double m = static_cast<double>(seen.size());
  double mean_n = 0.0, mean_tau = 0.0;
  for (auto [n, tau] : seen) {
    mean_n += n / m;
    mean_tau += tau / m;
  }
  pred.range_m = kSpeedOfLight * mean_tau / 2.0;
  if (seen.size() >= 2) {
    double sxy = 0.0, sxx = 0.0;
    for (auto [n, tau] : seen) {
      sxy += (n - mean_n) * (tau - mean_tau);
      sxx += (n - mean_n) * (n - mean_n);
    }
    pred.velocity_mps = kSpeedOfLight * (sxy / sxx) / (2.0 * victim.descriptor.chirp_period());
  }
  for (std::size_t k = 0; k < placement.tx_offsets.size(); ++k)
    pred.azimuth_rad.push_back(attacker_path(placement, k).azimuth_rad);
  return pred;
}

}  // namespace fmcw
