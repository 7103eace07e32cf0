#include "fmcw/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "fmcw/errors.hpp"
#include "fmcw/parallel.hpp"

namespace fmcw {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

double unit_uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

/// Reraises a library error with `what` prepended, keeping its type.
template <typename Fn>
auto in_context(const std::string& what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const AmbiguousAngleError& e) {
    throw AmbiguousAngleError(what + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(what + ": " + e.what());
  } catch (const ScenarioError& e) {
    throw ScenarioError(what + ": " + e.what());
  } catch (const PlanError& e) {
    throw PlanError(what + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(what + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(what + ": " + e.what());
  }
}

double deg2rad(double d) { return d * kPi / 180.0; }

/// Typed access to one JSON object; keys never asked for are rejected by done().
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ScenarioError(where_ + ": expected an object");
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  double num(const std::string& key, double def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number()) throw ScenarioError(where_ + "." + key + ": expected a number");
    return v->get<double>();
  }

  std::optional<double> opt_num(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ScenarioError(where_ + "." + key + ": expected a number");
    return v->get<double>();
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) {
    const json* v = find(key);
    if (!v) return def;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number()) {
      const double d = v->get<double>();
      if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw ScenarioError(where_ + "." + key + ": expected a non-negative integer");
  }

  std::string str(const std::string& key, const std::string& def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_string()) throw ScenarioError(where_ + "." + key + ": expected a string");
    return v->get<std::string>();
  }

  bool flag(const std::string& key, bool def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ScenarioError(where_ + "." + key + ": expected true or false");
    return v->get<bool>();
  }

  const json* array(const std::string& key) {
    const json* v = find(key);
    if (v && !v->is_array()) throw ScenarioError(where_ + "." + key + ": expected an array");
    return v;
  }

  const json* object(const std::string& key) {
    const json* v = find(key);
    if (v && !v->is_object()) throw ScenarioError(where_ + "." + key + ": expected an object");
    return v;
  }

  const std::string& where() const { return where_; }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ScenarioError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

CfarConfig parse_cfar(const json* j, CfarAlgorithm algo, const std::string& where) {
  CfarConfig c;
  c.algorithm = algo;
  if (!j) return c;
  Fields f(*j, where);
  c.nc = f.count("nc", c.nc);
  c.guard = f.count("guard", c.guard);
  c.pfa = f.num("pfa", c.pfa);
  c.sc = f.opt_num("sc");
  c.k = f.count("k", 0);
  f.done();
  return c;
}

}  // namespace

std::string to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::real: return "real";
    case ObjectKind::ghost: return "ghost";
    case ObjectKind::false_alarm: return "false_alarm";
  }
  return "?";
}

VictimDescriptor Scenario::descriptor() const {
  VictimDescriptor v;
  v.f_start = receiver.chirp.f_start();
  v.bandwidth = receiver.chirp.bandwidth();
  v.ramp = receiver.chirp.ramp();
  v.n_chirps = receiver.frame.n_chirps();
  v.frame_s = receiver.frame.frame_duration();
  return v;
}

void Scenario::validate() const {
  receiver.validate();
  if (!(noise_sigma >= 0.0)) throw ScenarioError("noise_sigma must be non-negative");
  if (!std::isfinite(victim_drift_ppm)) throw ScenarioError("victim drift must be finite");
  for (const auto& r : reflectors) r.validate();
  const VictimDescriptor v = descriptor();
  for (const auto& a : attacks) {
    in_context("attack '" + a.name + "'", [&] {
      a.placement.validate();
      a.plan.validate(v);
    });
  }
  processing.ca.validate();
  processing.os.validate();
  if (processing.ca.algorithm != CfarAlgorithm::ca || processing.os.algorithm != CfarAlgorithm::os)
    throw ConfigError("processing.ca / processing.os hold the wrong CFAR algorithm");
  if (processing.grouping.angle_fft == 0) throw ConfigError("angle_fft must be positive");
}

Scenario scenario_from_json(const json& doc, std::uint64_t seed) {
  try {
    Scenario s;
    Fields top(doc, "scenario");
    s.name = top.str("name", "");
    s.seed = seed;
    s.noise_sigma = top.num("noise_sigma", 0.0);

    if (const json* r = top.object("radar")) {
      Fields f(*r, "radar");
      const ChirpConfig dc;
      const FrameConfig df;
      ChirpConfig chirp(f.num("f_start_hz", dc.f_start()), f.num("bandwidth_hz", dc.bandwidth()),
                        f.num("ramp_s", dc.ramp()), f.count("n_samples", dc.n_samples()));
      FrameConfig frame(f.count("n_chirps", df.n_chirps()), f.num("frame_s", df.frame_duration()));
      s.receiver.chirp = chirp;
      s.receiver.frame = frame;
      s.receiver.rx.n_rx = f.count("n_rx", 16);
      s.receiver.rx.spacing_m = f.num("rx_spacing_m", chirp.wavelength() / 2.0);
      s.receiver.if_cutoff_hz = f.num("if_cutoff_hz", 0.0);
      s.victim_drift_ppm = f.num("drift_ppm", 0.0);
      f.done();
    } else {
      s.receiver.rx.spacing_m = s.receiver.chirp.wavelength() / 2.0;
    }

    if (const json* arr = top.array("reflectors")) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        Fields f((*arr)[i], "reflectors." + std::to_string(i));
        Reflector r;
        r.name = f.str("name", "R" + std::to_string(i));
        r.range_m = f.num("range_m", r.range_m);
        r.radial_velocity = f.num("velocity_mps", 0.0);
        r.azimuth_rad = deg2rad(f.num("azimuth_deg", 0.0));
        r.reflectivity = f.num("reflectivity", 1.0);
        f.done();
        s.reflectors.push_back(r);
      }
    }

    if (const json* arr = top.array("attacks")) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        const std::string where = "attacks." + std::to_string(i);
        Fields f((*arr)[i], where);
        AttackerSpec a;
        a.name = f.str("name", "A" + std::to_string(i));
        a.placement.distance_m = f.num("distance_m", a.placement.distance_m);
        a.placement.azimuth_rad = deg2rad(f.num("azimuth_deg", 0.0));
        if (const json* tx = f.array("tx_offsets")) {
          a.placement.tx_offsets.clear();
          for (std::size_t k = 0; k < tx->size(); ++k) {
            Fields o((*tx)[k], where + ".tx_offsets." + std::to_string(k));
            a.placement.tx_offsets.push_back(TxOffset{o.num("along_m", 0.0), o.num("lateral_m", 0.0)});
            o.done();
          }
        }
        const json* pj = f.object("plan");
        if (!pj) throw ScenarioError(where + ": missing plan");
        Fields p(*pj, where + ".plan");
        AttackPlan& plan = a.plan;
        plan.mode = parse_attack_mode(p.str("mode", "synchronized"));
        plan.tau_a = p.num("tau_a_s", 0.0);
        plan.period = p.num("period_s", 0.0);
        plan.gain = p.num("gain", 1.0);
        plan.start_freq_offset = p.num("start_freq_offset_hz", 0.0);
        plan.jitter_hz = p.num("jitter_hz", 0.0);
        plan.time_jitter = p.num("time_jitter_s", 0.0);
        plan.drift_ppm = p.num("drift_ppm", 0.0);
        plan.start_offset = p.num("start_offset_s", 0.0);
        plan.random_phase = p.flag("random_phase", false);
        p.done();
        f.done();
        s.attacks.push_back(std::move(a));
      }
    }

    if (const json* pr = top.object("processing")) {
      Fields f(*pr, "processing");
      s.processing.range_window = parse_window_kind(f.str("range_window", "hann"));
      s.processing.doppler_window = parse_window_kind(f.str("doppler_window", "rectangular"));
      s.processing.ca = parse_cfar(f.object("ca"), CfarAlgorithm::ca, "processing.ca");
      s.processing.os = parse_cfar(f.object("os"), CfarAlgorithm::os, "processing.os");
      s.processing.cfar_along_doppler = f.flag("cfar_along_doppler", false);
      s.processing.grouping.angle_fft = f.count("angle_fft", s.processing.grouping.angle_fft);
      s.processing.grouping.angle_peak_rel_db = f.num("angle_peak_rel_db", s.processing.grouping.angle_peak_rel_db);
      f.done();
    }
    top.done();

    // Per-attack randomness is derived from the scenario seed.
    for (std::size_t i = 0; i < s.attacks.size(); ++i) s.attacks[i].plan.seed = stream_seed(s.seed, 1, i);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ScenarioError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path, std::uint64_t seed) {
  return in_context(path.string(), [&] { return scenario_from_json(read_json_file(path), seed); });
}

std::vector<TimePoint> victim_timeline(const FrameConfig& frame, double drift_ppm) {
  std::vector<TimePoint> t(frame.n_chirps());
  const long double step = static_cast<long double>(frame.chirp_period()) *
                           (1.0L + static_cast<long double>(drift_ppm) * 1e-6L);
  for (std::size_t n = 0; n < t.size(); ++n) t[n] = static_cast<long double>(n) * step;
  return t;
}

namespace {

VictimSchedule schedule_of(const Scenario& s, const std::vector<TimePoint>& timeline) {
  return VictimSchedule{s.descriptor(), timeline};
}

}  // namespace

std::vector<EmissionEvent> build_events(const Scenario& s, const std::vector<TimePoint>& timeline,
                                        bool include_reflections, bool include_attacks) {
  std::vector<EmissionEvent> events;
  const ChirpConfig& ch = s.receiver.chirp;
  if (include_reflections) {
    for (std::size_t n = 0; n < timeline.size(); ++n) {
      const double t = static_cast<double>(timeline[n]);
      for (std::size_t r = 0; r < s.reflectors.size(); ++r) {
        const Reflector& ref = s.reflectors[r];
        EmissionEvent ev;
        ev.kind = EmitterKind::reflection;
        ev.source = static_cast<int>(r);
        ev.start = timeline[n] + static_cast<TimePoint>(reflection_delay(ref, t));
        ev.f_start = ch.f_start();
        ev.slope = ch.slope();
        ev.duration = ch.ramp();
        ev.amplitude = reflection_amplitude(ref, t);
        ev.azimuth = ref.azimuth_rad;
        events.push_back(ev);
      }
    }
  }
  if (include_attacks) {
    const VictimSchedule victim = schedule_of(s, timeline);
    for (const auto& a : s.attacks) {
      auto planned = in_context("attack '" + a.name + "'", [&] { return plan_attack(a.plan, a.placement, victim); });
      events.insert(events.end(), planned.begin(), planned.end());
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const EmissionEvent& a, const EmissionEvent& b) { return a.start < b.start; });
  return events;
}

IfDataCube<double> synthesize_cube(const Scenario& s, unsigned jobs, bool include_reflections, bool include_attacks,
                                   bool include_noise) {
  const ReceiverConfig& rc = s.receiver;
  const auto timeline = victim_timeline(rc.frame, s.victim_drift_ppm);
  const auto events = build_events(s, timeline, include_reflections, include_attacks);
  double longest = 0.0;
  for (const auto& ev : events) longest = std::max(longest, ev.duration);

  IfDataCube<double> cube(rc.frame.n_chirps(), rc.rx.n_rx, rc.chirp.n_samples());
  const double sigma = include_noise ? s.noise_sigma : 0.0;
  const long double ramp = rc.chirp.ramp();

  detail::parallel_for(timeline.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      const TimePoint t0 = timeline[n];
      // Only events that can overlap [t0, t0 + ramp) are handed to the mixer.
      auto lo = std::lower_bound(events.begin(), events.end(), t0 - static_cast<TimePoint>(longest),
                                 [](const EmissionEvent& e, TimePoint t) { return e.start <= t; });
      auto hi = std::lower_bound(lo, events.end(), t0 + ramp,
                                 [](const EmissionEvent& e, TimePoint t) { return e.start < t; });
      auto block = cube.chirp_block(n);
      block = synthesize_if<double>(rc, t0, std::span<const EmissionEvent>(&*lo, static_cast<std::size_t>(hi - lo)));
      if (sigma > 0.0) {
        std::mt19937_64 rng(stream_seed(s.seed, 2, n));
        const double per_axis = sigma / std::sqrt(2.0);
        for (Eigen::Index m = 0; m < block.rows(); ++m) {
          for (Eigen::Index i = 0; i < block.cols(); ++i) {
            const double u1 = 1.0 - unit_uniform(rng);
            const double u2 = unit_uniform(rng);
            const double rad = per_axis * std::sqrt(-2.0 * std::log(u1));
            block(m, i) += std::complex<double>(rad * std::cos(kTwoPi * u2), rad * std::sin(kTwoPi * u2));
          }
        }
      }
    }
  });
  return cube;
}

std::vector<TruthEntry> expected_objects(const Scenario& s, const BinAxes& axes,
                                         std::vector<GhostPrediction>* ghosts) {
  const auto timeline = victim_timeline(s.receiver.frame, s.victim_drift_ppm);
  const double n_range = static_cast<double>(axes.n_range);
  const double n_vel = static_cast<double>(axes.n_velocity);
  auto wrap = [](double b, double n) { return b - n * std::floor(b / n); };
  double t_mid = 0.0;
  for (TimePoint t : timeline) t_mid += static_cast<double>(t) / static_cast<double>(timeline.size());

  std::vector<TruthEntry> truth;
  for (const auto& r : s.reflectors) {
    TruthEntry e;
    e.kind = ObjectKind::real;
    e.name = r.name;
    e.range_bin = wrap(r.range_at(t_mid) / axes.range_bin_m, n_range);
    e.velocity_bin = wrap(static_cast<double>(axes.zero_velocity_bin) + r.radial_velocity / axes.velocity_bin_mps, n_vel);
    truth.push_back(e);
  }
  const VictimSchedule victim = schedule_of(s, timeline);
  for (const auto& a : s.attacks) {
    if (a.plan.mode == AttackMode::noise) continue;
    GhostPrediction g;
    try {
      g = predict_ghosts(a.plan, a.placement, victim, s.receiver);
    } catch (const PlanError&) {
      continue;  // never visible: nothing to attribute
    }
    TruthEntry e;
    e.kind = ObjectKind::ghost;
    e.name = a.name;
    e.range_bin = wrap(g.range_m / axes.range_bin_m, n_range);
    e.velocity_bin = wrap(static_cast<double>(axes.zero_velocity_bin) + g.velocity_mps / axes.velocity_bin_mps, n_vel);
    truth.push_back(e);
    if (ghosts) ghosts->push_back(std::move(g));
  }
  return truth;
}

namespace {

std::vector<AttributedDetection> attribute(const std::vector<Detection>& dets, const std::vector<TruthEntry>& truth,
                                           const BinAxes& axes) {
  const long nr = static_cast<long>(axes.n_range), nv = static_cast<long>(axes.n_velocity);
  auto circ = [](long a, long b, long n) {
    const long d = ((a - b) % n + n) % n;
    return std::min(d, n - d);
  };
  std::vector<AttributedDetection> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    AttributedDetection ad{d, ObjectKind::false_alarm, {}};
    long best = 3;
    for (const auto& t : truth) {
      const long tr = std::lround(t.range_bin) % nr;
      const long tv = std::lround(t.velocity_bin) % nv;
      const long dr = circ(static_cast<long>(d.range_bin), tr, nr);
      const long dv = circ(static_cast<long>(d.velocity_bin), tv, nv);
      if (dr > 1 || dv > 1) continue;
      if (dr + dv < best) {
        best = dr + dv;
        ad.kind = t.kind;
        ad.source = t.name;
      }
    }
    out.push_back(std::move(ad));
  }
  return out;
}

void tally(const std::vector<AttributedDetection>& v, std::size_t& total, std::size_t& real, std::size_t& ghost,
           std::size_t& fa) {
  total = v.size();
  real = ghost = fa = 0;
  for (const auto& a : v) {
    if (a.kind == ObjectKind::real) ++real;
    else if (a.kind == ObjectKind::ghost) ++ghost;
    else ++fa;
  }
}

}  // namespace

Processed process_cube(const IfDataCube<double>& cube, const ReceiverConfig& receiver,
                       const ProcessingConfig& processing, const std::vector<TruthEntry>& truth, unsigned jobs) {
  if (cube.n_rx != receiver.rx.n_rx || cube.n_samples != receiver.chirp.n_samples() ||
      cube.n_chirps != receiver.frame.n_chirps())
    throw ConfigError("cube shape does not match the receiver configuration");
  Processed p;
  p.axes = bin_axes(receiver.chirp, receiver.frame, receiver.chirp.wavelength());
  const auto profiles = range_fft(cube, WindowSpec{processing.range_window, cube.n_samples});
  p.map = doppler_fft(profiles, WindowSpec{processing.doppler_window, cube.n_chirps});
  p.power = p.map.power();

  const FlagMap ca_flags = cfar_detect_map(p.power, processing.ca, processing.cfar_along_doppler, jobs);
  const FlagMap os_flags = cfar_detect_map(p.power, processing.os, processing.cfar_along_doppler, jobs);
  const auto ca = group_detections(p.map, p.power, ca_flags, p.axes, receiver, CfarAlgorithm::ca, processing.grouping);
  const auto os = group_detections(p.map, p.power, os_flags, p.axes, receiver, CfarAlgorithm::os, processing.grouping);
  p.ca = attribute(ca, truth, p.axes);
  p.os = attribute(os, truth, p.axes);

  double sum = 0.0;
  std::size_t cells = 0;
  for (Eigen::Index v = 0; v < p.power.cols(); ++v) {
    const Eigen::ArrayXd ne = cfar_noise(p.power.col(v), processing.ca);
    for (Eigen::Index r = 0; r < ne.size(); ++r) {
      if (std::isnan(ne(r))) continue;
      sum += ne(r);
      ++cells;
    }
  }
  Summary& s = p.summary;
  s.noise_floor_db = cells ? 10.0 * std::log10(std::max(sum / static_cast<double>(cells), 1e-300)) : -3000.0;
  tally(p.ca, s.ca_total, s.ca_real, s.ca_ghost, s.ca_false);
  tally(p.os, s.os_total, s.os_real, s.os_ghost, s.os_false);
  return p;
}

RunResult run(const Scenario& s, unsigned jobs) {
  const std::string ctx = s.name.empty() ? std::string("scenario") : "scenario '" + s.name + "'";
  return in_context(ctx, [&] {
    s.validate();
    RunResult r;
    r.cube = synthesize_cube(s, jobs);
    const BinAxes axes = bin_axes(s.receiver.chirp, s.receiver.frame, s.receiver.chirp.wavelength());
    r.truth = expected_objects(s, axes, &r.ghosts);
    r.processed = process_cube(r.cube, s.receiver, s.processing, r.truth, jobs);
    return r;
  });
}

double superposition_error(const Scenario& s, unsigned jobs) {
  const auto both = synthesize_cube(s, jobs, true, true, false);
  const auto scene = synthesize_cube(s, jobs, true, false, false);
  const auto attack = synthesize_cube(s, jobs, false, true, false);
  const double scale = std::max({both.samples.cwiseAbs().maxCoeff(), scene.samples.cwiseAbs().maxCoeff(),
                                 attack.samples.cwiseAbs().maxCoeff()});
  if (scale == 0.0) return 0.0;
  return (both.samples - scene.samples - attack.samples).cwiseAbs().maxCoeff() / scale;
}

void set_json_path(json& doc, const std::string& path, double value) {
  if (path.empty()) throw ConfigError("empty parameter path");
  json* node = &doc;
  std::stringstream ss(path);
  std::string tok;
  while (std::getline(ss, tok, '.')) {
    if (node->is_object()) {
      auto it = node->find(tok);
      if (it == node->end()) throw ConfigError("parameter path '" + path + "': no field '" + tok + "'");
      node = &*it;
    } else if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("parameter path '" + path + "': '" + tok + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("parameter path '" + path + "': index " + tok + " out of range");
      node = &(*node)[idx];
    } else {
      throw ConfigError("parameter path '" + path + "': '" + tok + "' goes below a scalar");
    }
  }
  if (!node->is_number()) throw ConfigError("parameter path '" + path + "' does not address a numeric field");
  if (node->is_number_integer() && value == std::floor(value) && std::abs(value) < 9e15)
    *node = static_cast<std::int64_t>(value);
  else
    *node = value;
}

std::vector<SweepRow> sweep(const json& scenario_doc, const std::string& path, const std::vector<double>& values,
                            unsigned jobs, std::uint64_t seed) {
  std::vector<Scenario> scenarios;
  for (double v : values) {
    json doc = scenario_doc;
    set_json_path(doc, path, v);
    scenarios.push_back(in_context(path + "=" + std::to_string(v), [&] { return scenario_from_json(doc, seed); }));
  }
  std::vector<SweepRow> rows(values.size());
  detail::parallel_for(values.size(), jobs, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      rows[i].value = values[i];
      rows[i].summary = run(scenarios[i], 1).processed.summary;
    }
  });
  return rows;
}

}  // namespace fmcw
