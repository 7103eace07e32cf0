#include "fmcw/cli.hpp"

#include <cmath>
#include <iostream>
#include <utility>

#include <CLI11.hpp>

#include "fmcw/errors.hpp"
#include "fmcw/io.hpp"

namespace fmcw {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 2;
  return 1;  // scenario, config, plan, malformed input
}

namespace {

/// Stages every file as a temporary, then renames them all. Nothing is left
/// behind if any step fails.
void write_all(const std::vector<std::pair<fs::path, std::string>>& files) {
  std::vector<fs::path> staged, placed;
  std::error_code ec;
  try {
    for (const auto& [path, bytes] : files) {
      fs::path tmp = path;
      tmp += ".tmp";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write '" + tmp.string() + "'");
      staged.push_back(tmp);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      out.flush();
      if (!out) throw IoError("short write on '" + tmp.string() + "'");
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
      fs::rename(staged[i], files[i].first, ec);
      if (ec) throw IoError("cannot move '" + staged[i].string() + "' into place: " + ec.message());
      placed.push_back(files[i].first);
    }
  } catch (...) {
    for (const auto& p : staged) fs::remove(p, ec);
    for (const auto& p : placed) fs::remove(p, ec);
    throw;
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

template <typename Fn>
CommandOutcome guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return CommandOutcome{exit_code_for(e), {}, e.what()};
  } catch (const json::exception& e) {
    return CommandOutcome{1, {}, e.what()};
  } catch (const std::bad_alloc&) {
    return CommandOutcome{2, {}, "out of memory"};
  }
}

std::string db_or_nan(double power) {
  if (std::isnan(power)) return "nan";
  return fmt_fixed(10.0 * std::log10(std::max(power, 1e-300)), 4);
}

json counts(std::size_t total, std::size_t real, std::size_t ghost, std::size_t fa) {
  return json{{"total", total}, {"real", real}, {"ghost", ghost}, {"false_alarm", fa}};
}

}  // namespace

json summary_json(const json& scenario_doc, std::uint64_t seed, const RunResult& r) {
  const Summary& s = r.processed.summary;
  json ghosts = json::array();
  for (const auto& g : r.ghosts) {
    json az = json::array();
    for (double a : g.azimuth_rad) az.push_back(a * 180.0 / kPi);
    ghosts.push_back({{"range_m", g.range_m}, {"velocity_mps", g.velocity_mps}, {"azimuth_deg", az},
                      {"visible_chirps", g.visible_chirps}});
  }
  json truth = json::array();
  for (const auto& t : r.truth)
    truth.push_back({{"name", t.name}, {"kind", to_string(t.kind)}, {"range_bin", t.range_bin},
                     {"velocity_bin", t.velocity_bin}});
  const BinAxes& ax = r.processed.axes;
  return json{{"scenario", scenario_doc},
              {"seed", seed},
              {"axes", {{"range_bin_m", ax.range_bin_m}, {"velocity_bin_mps", ax.velocity_bin_mps},
                        {"n_range", ax.n_range}, {"n_velocity", ax.n_velocity}}},
              {"noise_floor_db", s.noise_floor_db},
              {"ca", counts(s.ca_total, s.ca_real, s.ca_ghost, s.ca_false)},
              {"os", counts(s.os_total, s.os_real, s.os_ghost, s.os_false)},
              {"truth", truth},
              {"ghosts", ghosts}};
}

CommandOutcome cmd_run(const fs::path& scenario, const fs::path& out_dir, const RunOptions& opts) {
  return guarded([&] {
    const json doc = read_json_file(scenario);
    const Scenario s = scenario_from_json(doc, opts.seed);
    const RunResult r = run(s, opts.jobs);

    std::vector<std::pair<fs::path, std::string>> files;
    if (!opts.no_cube) files.emplace_back(out_dir / "cube.rdmx", encode_rdmx(cube_to_rdmx(r.cube)));
    files.emplace_back(out_dir / "map.rdmx", encode_rdmx(map_to_rdmx(r.processed.map)));
    files.emplace_back(out_dir / "detections.csv", detections_csv(r.processed));
    files.emplace_back(out_dir / "summary.json", summary_json(doc, opts.seed, r).dump(2) + "\n");
    ensure_dir(out_dir);
    write_all(files);

    CommandOutcome o;
    for (auto& f : files) o.artifacts.push_back(f.first);
    const Summary& sm = r.processed.summary;
    o.message = "CA " + std::to_string(sm.ca_total) + " detections, OS " + std::to_string(sm.os_total) +
                " detections, noise floor " + fmt_fixed(sm.noise_floor_db, 2) + " dB";
    return o;
  });
}

CommandOutcome cmd_detect(const fs::path& cube_path, const DetectOptions& opts, std::ostream& out) {
  return guarded([&] {
    const bool with_ca = opts.algo == "both" || opts.algo == "ca";
    const bool with_os = opts.algo == "both" || opts.algo == "os";
    if (!with_ca && !with_os) throw ConfigError("--algo must be ca, os or both");

    const IfDataCube<double> cube = cube_from_rdmx(decode_rdmx(read_file(cube_path)));
    Scenario s;
    const fs::path summary = cube_path.parent_path() / "summary.json";
    if (opts.scenario) {
      s = load_scenario(*opts.scenario);
    } else if (fs::exists(summary)) {
      const json doc = read_json_file(summary);
      if (!doc.contains("scenario")) throw ScenarioError("'" + summary.string() + "' holds no scenario");
      s = scenario_from_json(doc.at("scenario"), doc.value("seed", std::uint64_t{0}));
    } else {
      s.receiver.rx.spacing_m = s.receiver.chirp.wavelength() / 2.0;
    }
    for (CfarConfig* c : {&s.processing.ca, &s.processing.os}) {
      if (opts.nc) c->nc = *opts.nc;
      if (opts.guard) c->guard = *opts.guard;
      if (opts.pfa) c->pfa = *opts.pfa;
      if (opts.sc) c->sc = *opts.sc;
    }
    if (opts.k) s.processing.os.k = *opts.k;
    s.validate();

    const BinAxes axes = bin_axes(s.receiver.chirp, s.receiver.frame, s.receiver.chirp.wavelength());
    const auto truth = expected_objects(s, axes);
    const Processed p = process_cube(cube, s.receiver, s.processing, truth, opts.jobs);
    const std::string csv = detections_csv(p, with_ca, with_os);
    CommandOutcome o;
    if (opts.output) {
      write_all({{*opts.output, csv}});
      o.artifacts.push_back(*opts.output);
    } else {
      out << csv;
    }
    return o;
  });
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "value,noise_floor_db,ca_total,ca_real,ca_ghost,ca_false_alarm,os_total,os_real,os_ghost,os_false_alarm\n";
  for (const auto& r : rows) {
    const Summary& s = r.summary;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", r.value);
    out += std::string(buf) + "," + fmt_fixed(s.noise_floor_db, 4);
    for (std::size_t c : {s.ca_total, s.ca_real, s.ca_ghost, s.ca_false, s.os_total, s.os_real, s.os_ghost, s.os_false})
      out += "," + std::to_string(c);
    out += "\n";
  }
  return out;
}

CommandOutcome cmd_sweep(const fs::path& scenario, const SweepOptions& opts, std::ostream& out) {
  return guarded([&] {
    if (opts.values.empty()) throw ConfigError("--values needs at least one value");
    const json doc = read_json_file(scenario);
    const std::string csv = sweep_csv(sweep(doc, opts.param, opts.values, opts.jobs, opts.seed));
    CommandOutcome o;
    if (opts.output) {
      write_all({{*opts.output, csv}});
      o.artifacts.push_back(*opts.output);
    } else {
      out << csv;
    }
    return o;
  });
}

std::string figdata_csv(const Scenario& s, const RunResult& r, const std::string& fig) {
  const Processed& p = r.processed;
  const BinAxes& ax = p.axes;
  const std::size_t rows = ax.n_range / 2;  // positive beats only
  std::string out;

  if (fig == "cfar_range") {
    // The zero-velocity column: every static object of the scene lives there.
    const Eigen::ArrayXd col = p.power.col(static_cast<Eigen::Index>(ax.zero_velocity_bin));
    const Eigen::ArrayXd ca_t = cfar_threshold(col, s.processing.ca);
    const Eigen::ArrayXd os_t = cfar_threshold(col, s.processing.os);
    out = "range_m,power_db,ca_threshold_db,os_threshold_db,ca_flag,os_flag\n";
    for (std::size_t i = 0; i < rows; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const bool ca_flag = !std::isnan(ca_t(k)) && col(k) > ca_t(k);
      const bool os_flag = !std::isnan(os_t(k)) && col(k) > os_t(k);
      out += fmt_fixed(ax.range_at(static_cast<double>(i))) + "," + db_or_nan(col(k)) + "," + db_or_nan(ca_t(k)) +
             "," + db_or_nan(os_t(k)) + "," + (ca_flag ? "1" : "0") + "," + (os_flag ? "1" : "0") + "\n";
    }
    return out;
  }

  if (fig == "aoa_heatmap") {
    const std::size_t n_fft = std::max(s.processing.grouping.angle_fft, s.receiver.rx.n_rx);
    const double l = s.receiver.rx.spacing_m, lambda = s.receiver.chirp.wavelength();
    out = "range_m";
    for (std::size_t k = 0; k < n_fft; ++k) {
      const double a = angle_of_bin(static_cast<double>(k), n_fft, l, lambda);
      out += "," + (std::isnan(a) ? std::string("nan") : fmt_fixed(a * 180.0 / kPi, 4));
    }
    out += "\n";
    for (std::size_t i = 0; i < rows; ++i) {
      Eigen::Index v = 0;
      p.power.row(static_cast<Eigen::Index>(i)).maxCoeff(&v);  // strongest Doppler cell of this range
      const auto spec = angle_spectrum(p.map.snapshot(i, static_cast<std::size_t>(v)), n_fft);
      out += fmt_fixed(ax.range_at(static_cast<double>(i)));
      for (double x : spec) out += "," + db_or_nan(x);
      out += "\n";
    }
    return out;
  }

  if (fig == "range_doppler") {
    out = "range_m";
    for (std::size_t v = 0; v < ax.n_velocity; ++v) out += "," + fmt_fixed(ax.velocity_at(static_cast<double>(v)));
    out += "\n";
    for (std::size_t i = 0; i < rows; ++i) {
      out += fmt_fixed(ax.range_at(static_cast<double>(i)));
      for (std::size_t v = 0; v < ax.n_velocity; ++v)
        out += "," + db_or_nan(p.power(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)));
      out += "\n";
    }
    return out;
  }
  throw ConfigError("unknown figure id '" + fig + "' (expected cfar_range, aoa_heatmap or range_doppler)");
}

CommandOutcome cmd_figdata(const fs::path& scenario, const FigdataOptions& opts) {
  return guarded([&] {
    if (std::find(kFigureIds.begin(), kFigureIds.end(), opts.fig) == kFigureIds.end())
      throw ConfigError("unknown figure id '" + opts.fig + "'");
    const Scenario s = load_scenario(scenario, opts.seed);
    const RunResult r = run(s, opts.jobs);
    const fs::path dest = opts.output ? *opts.output : fs::path(opts.fig + ".csv");
    write_all({{dest, figdata_csv(s, r, opts.fig)}});
    CommandOutcome o;
    o.artifacts.push_back(dest);
    return o;
  });
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"FMCW radar spoofing simulator"};
  app.require_subcommand(1);

  std::string scenario_path, cube_path;
  fs::path out_dir;
  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "simulate one frame and write its artifacts");
  run_cmd->add_option("file", scenario_path, "scenario JSON")->required();
  run_cmd->add_option("-o,--out", out_dir, "output directory")->required();
  run_cmd->add_option("--seed", run_opts.seed, "root seed");
  run_cmd->add_flag("--no-cube", run_opts.no_cube, "skip the IF cube dump");
  run_cmd->add_option("--jobs", run_opts.jobs, "worker threads")->check(CLI::PositiveNumber);

  DetectOptions det;
  std::size_t nc = 0, guard = 0, k = 0;
  double pfa = 0.0, sc = 0.0;
  std::string det_scenario, det_out;
  auto* det_cmd = app.add_subcommand("detect", "re-run CFAR on a stored cube");
  det_cmd->add_option("cube", cube_path, "RDMX cube")->required();
  det_cmd->add_option("--algo", det.algo, "ca, os or both")->check(CLI::IsMember({"ca", "os", "both"}));
  auto* o_nc = det_cmd->add_option("--nc", nc, "reference cells");
  auto* o_guard = det_cmd->add_option("--guard", guard, "guard cells per side");
  auto* o_pfa = det_cmd->add_option("--pfa", pfa, "false-alarm probability");
  auto* o_sc = det_cmd->add_option("--sc", sc, "explicit scale factor");
  auto* o_k = det_cmd->add_option("--k", k, "OS order statistic (1-based)");
  auto* o_scn = det_cmd->add_option("--scenario", det_scenario, "scenario JSON for radar and processing settings");
  auto* o_dout = det_cmd->add_option("-o,--out", det_out, "CSV file (default stdout)");
  det_cmd->add_option("--jobs", det.jobs, "worker threads")->check(CLI::PositiveNumber);

  SweepOptions sw;
  std::string sw_out;
  auto* sw_cmd = app.add_subcommand("sweep", "run one scenario per parameter value");
  sw_cmd->add_option("file", scenario_path, "scenario JSON")->required();
  sw_cmd->add_option("--param", sw.param, "dotted path, e.g. attacks.0.plan.gain")->required();
  sw_cmd->add_option("--values", sw.values, "comma separated values")->required()->delimiter(',');
  sw_cmd->add_option("--jobs", sw.jobs, "concurrent runs")->check(CLI::PositiveNumber);
  sw_cmd->add_option("--seed", sw.seed, "root seed");
  auto* o_swout = sw_cmd->add_option("-o,--out", sw_out, "CSV file (default stdout)");

  FigdataOptions fig;
  std::string fig_out;
  auto* fig_cmd = app.add_subcommand("figdata", "write plot-ready CSV for one figure");
  fig_cmd->add_option("file", scenario_path, "scenario JSON")->required();
  fig_cmd->add_option("--fig", fig.fig, "cfar_range, aoa_heatmap or range_doppler")->required();
  auto* o_fout = fig_cmd->add_option("-o,--out", fig_out, "CSV file (default <fig>.csv)");
  fig_cmd->add_option("--seed", fig.seed, "root seed");
  fig_cmd->add_option("--jobs", fig.jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  CommandOutcome o;
  if (run_cmd->parsed()) {
    o = cmd_run(scenario_path, out_dir, run_opts);
  } else if (det_cmd->parsed()) {
    if (*o_nc) det.nc = nc;
    if (*o_guard) det.guard = guard;
    if (*o_pfa) det.pfa = pfa;
    if (*o_sc) det.sc = sc;
    if (*o_k) det.k = k;
    if (*o_scn) det.scenario = det_scenario;
    if (*o_dout) det.output = det_out;
    o = cmd_detect(cube_path, det, out);
  } else if (sw_cmd->parsed()) {
    if (*o_swout) sw.output = sw_out;
    o = cmd_sweep(scenario_path, sw, out);
  } else if (fig_cmd->parsed()) {
    if (*o_fout) fig.output = fig_out;
    o = cmd_figdata(scenario_path, fig);
  }

  if (o.exit_code != 0) {
    err << "error: " << o.message << "\n";
    return o.exit_code;
  }
  if (!o.message.empty()) err << o.message << "\n";
  for (const auto& a : o.artifacts) err << "wrote " << a.string() << "\n";
  return 0;
}

}  // namespace fmcw
