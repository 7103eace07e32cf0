#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fmcw/cli.hpp"
#include "fmcw/errors.hpp"
#include "fmcw/io.hpp"

using namespace fmcw;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(FMCW_SOURCE_DIR) / "scenarios";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("fmcw_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string c; std::getline(in, c, ',');) out.push_back(c);
  return out;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "fmcw-spoof");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

}  // namespace

TEST_CASE("rdmx roundtrip of a cube") {
  IfDataCube<double> cube(3, 2, 5);
  for (Eigen::Index r = 0; r < cube.samples.rows(); ++r)
    for (Eigen::Index i = 0; i < cube.samples.cols(); ++i) cube.samples(r, i) = {r * 0.5 - i, -1e-300 * (i + 1)};
  const std::string bytes = encode_rdmx(cube_to_rdmx(cube));
  CHECK(bytes.substr(0, 4) == "RDMX");
  CHECK(bytes.size() == 4 + 2 + 2 + 4 + 3 * 4 + 30 * 16);
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  const auto back = cube_from_rdmx(decode_rdmx(bytes));
  CHECK(back.n_chirps == 3);
  CHECK(back.n_rx == 2);
  CHECK(back.n_samples == 5);
  CHECK((back.samples.array() == cube.samples.array()).all());
}

TEST_CASE("corrupt rdmx names the offset") {
  RdmxArray a;
  a.dims = {2, 2};
  a.values = {1, 2, 3, 4};
  const std::string good = encode_rdmx(a);
  auto message = [](const std::string& b) {
    try {
      decode_rdmx(b);
    } catch (const IoError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  std::string b = good;
  b[0] = 'X';
  CHECK(message(b).find("offset 0") != std::string::npos);
  b = good;
  b[4] = 7;
  CHECK(message(b).find("offset 4") != std::string::npos);
  b = good;
  b[6] = 9;
  CHECK(message(b).find("offset 6") != std::string::npos);
  CHECK(message(good.substr(0, 14)).find("offset 12") != std::string::npos);
  CHECK(message(good.substr(0, good.size() - 3)).find("offset 20") != std::string::npos);
  CHECK(message(good + "x").find("offset 20") != std::string::npos);
  CHECK(message("RD") == "RDMX bad magic at offset 0");

  a.values.pop_back();
  CHECK_THROWS_AS(encode_rdmx(a), IoError);
  a.values.push_back(4);
  CHECK_THROWS_AS(cube_from_rdmx(a), IoError);
}

TEST_CASE("fixed formatting") {
  CHECK(fmt_fixed(2.5) == "2.500000");
  CHECK(fmt_fixed(-1e-9) == "0.000000");
  CHECK(fmt_fixed(-0.0, 2) == "0.00");
  CHECK(fmt_fixed(-0.25, 2) == "-0.25");
}

TEST_CASE("run writes four artifacts") {
  TempDir d("run");
  const CommandOutcome o = cmd_run(kScenarios / "baseline.json", d.path / "out");
  REQUIRE(o.exit_code == 0);
  CHECK(o.artifacts.size() == 4);
  for (const char* f : {"cube.rdmx", "map.rdmx", "detections.csv", "summary.json"})
    CHECK(fs::exists(d.path / "out" / f));
  for (const auto& e : fs::directory_iterator(d.path / "out")) CHECK(e.path().extension() != ".tmp");

  const auto summary = read_json_file(d.path / "out" / "summary.json");
  CHECK(summary["scenario"]["name"] == "baseline");
  CHECK(summary["os"]["real"] == 3);
  CHECK(summary["axes"]["n_range"] == 2048);

  const auto csv = lines(read_file(d.path / "out" / "detections.csv"));
  CHECK(csv.at(0) == kDetectionCsvHeader);
  CHECK(csv.size() == 1 + summary["ca"]["total"].get<std::size_t>() + summary["os"]["total"].get<std::size_t>());

  const auto map = decode_rdmx(read_file(d.path / "out" / "map.rdmx"));
  CHECK(map.dims == std::vector<std::uint32_t>{16, 2048, 50});

  const CommandOutcome nc = cmd_run(kScenarios / "baseline.json", d.path / "nocube", RunOptions{0, true, 1});
  CHECK(nc.exit_code == 0);
  CHECK(nc.artifacts.size() == 3);
  CHECK(!fs::exists(d.path / "nocube" / "cube.rdmx"));
}

TEST_CASE("run failures leave nothing behind") {
  TempDir d("runfail");
  spit(d.path / "bad.json", "{\"name\": \"x\", ");
  CommandOutcome o = cmd_run(d.path / "bad.json", d.path / "out");
  CHECK(o.exit_code == 1);
  CHECK(o.artifacts.empty());
  CHECK(!fs::exists(d.path / "out"));

  spit(d.path / "unknown.json", R"({"name": "x", "reflectors": [{"range_m": 2, "colour": 1}]})");
  CHECK(cmd_run(d.path / "unknown.json", d.path / "out").exit_code == 1);

  CHECK(cmd_run(d.path / "missing.json", d.path / "out").exit_code == 3);

  spit(d.path / "blocker", "file");
  o = cmd_run(kScenarios / "baseline.json", d.path / "blocker" / "sub");
  CHECK(o.exit_code == 3);
  CHECK(o.artifacts.empty());

  // a directory squatting on one artifact name makes the final rename fail
  fs::create_directories(d.path / "squat" / "summary.json" / "x");
  o = cmd_run(kScenarios / "baseline.json", d.path / "squat");
  CHECK(o.exit_code == 3);
  for (const char* f : {"cube.rdmx", "map.rdmx", "detections.csv", "cube.rdmx.tmp", "summary.json.tmp"})
    CHECK(!fs::exists(d.path / "squat" / f));
}

TEST_CASE("detect on a stored cube reproduces the run") {
  TempDir d("detect");
  // corner pushed out far enough for an 80-cell window to reach it
  auto doc = read_json_file(kScenarios / "baseline.json");
  set_json_path(doc, "reflectors.1.range_m", 9.0);
  spit(d.path / "far.json", doc.dump());
  REQUIRE(cmd_run(d.path / "far.json", d.path, RunOptions{5, false, 2}).exit_code == 0);
  const std::string run_csv = read_file(d.path / "detections.csv");

  std::ostringstream out;
  CHECK(cmd_detect(d.path / "cube.rdmx", DetectOptions{}, out).exit_code == 0);
  CHECK(out.str() == run_csv);

  DetectOptions os_only;
  os_only.algo = "os";
  os_only.k = 60;
  os_only.nc = 80;
  std::ostringstream o2;
  REQUIRE(cmd_detect(d.path / "cube.rdmx", os_only, o2).exit_code == 0);
  const auto rows = lines(o2.str());
  CHECK(rows.size() > 1);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].rfind("os,", 0) == 0);

  auto count = [&](double pfa) {
    DetectOptions o;
    o.pfa = pfa;
    o.algo = "ca";
    std::ostringstream s;
    REQUIRE(cmd_detect(d.path / "cube.rdmx", o, s).exit_code == 0);
    return lines(s.str()).size() - 1;
  };
  CHECK(count(0.01) <= count(0.39));

  DetectOptions bad;
  bad.k = 17;  // beyond nc
  std::ostringstream o3;
  CHECK(cmd_detect(d.path / "cube.rdmx", bad, o3).exit_code == 1);
  spit(d.path / "junk.rdmx", "RDMX\x02");
  CHECK(cmd_detect(d.path / "junk.rdmx", DetectOptions{}, o3).exit_code == 3);
}

TEST_CASE("figdata cfar_range schema") {
  const Scenario s = load_scenario(kScenarios / "baseline.json");
  const RunResult r = run(s, 2);
  const auto rows = lines(figdata_csv(s, r, "cfar_range"));
  CHECK(rows.at(0) == "range_m,power_db,ca_threshold_db,os_threshold_db,ca_flag,os_flag");
  CHECK(rows.size() == 1 + 1024);
  CHECK(split(rows[1])[2] == "nan");
  const auto corner = split(rows[1 + 17]);
  CHECK(std::stod(corner[0]) == doctest::Approx(2.55).epsilon(0.01));
  CHECK(corner[5] == "1");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(split(rows[i]).size() == 6);
}

TEST_CASE("figdata aoa_heatmap shows the two-transmitter split") {
  const Scenario s = load_scenario(kScenarios / "multi_tx.json");
  const RunResult r = run(s, 2);
  const auto rows = lines(figdata_csv(s, r, "aoa_heatmap"));
  const auto head = split(rows.at(0));
  REQUIRE(head.size() == 65);
  const std::size_t ghost_bin = static_cast<std::size_t>(std::lround(5.0 / r.processed.axes.range_bin_m));
  const auto cells = split(rows.at(1 + ghost_bin));
  std::vector<double> db;
  for (std::size_t i = 1; i < cells.size(); ++i) db.push_back(std::stod(cells[i]));
  const double top = *std::max_element(db.begin(), db.end());
  std::vector<double> peaks;
  for (std::size_t k = 0; k < db.size(); ++k) {
    const double l = db[(k + db.size() - 1) % db.size()], rr = db[(k + 1) % db.size()];
    if (db[k] > l && db[k] >= rr && db[k] > top - 6.0) peaks.push_back(std::stod(head[k + 1]));
  }
  REQUIRE(peaks.size() == 2);
  std::sort(peaks.begin(), peaks.end());
  CHECK(peaks[0] == doctest::Approx(-5.7).epsilon(0.4));
  CHECK(peaks[1] == doctest::Approx(5.7).epsilon(0.4));
}

TEST_CASE("figdata range_doppler of an empty scene is flat") {
  const Scenario s = scenario_from_json(nlohmann::json::object());
  const RunResult r = run(s, 2);
  const auto rows = lines(figdata_csv(s, r, "range_doppler"));
  CHECK(split(rows.at(0)).size() == 51);
  CHECK(rows.size() == 1025);
  const std::string floor = split(rows[1])[1];
  for (std::size_t i = 1; i < rows.size(); i += 97) {
    const auto cells = split(rows[i]);
    for (std::size_t c = 1; c < cells.size(); ++c) CHECK(cells[c] == floor);
  }
  CHECK_THROWS_AS(figdata_csv(s, r, "polar"), ConfigError);
}

TEST_CASE("cli exit codes") {
  TempDir d("cli");
  const std::string base = (kScenarios / "baseline.json").string();
  CHECK(cli({"--help"}) == 0);
  CHECK(cli({}) == 1);
  CHECK(cli({"launch"}) == 1);
  CHECK(cli({"run", base}) == 1);
  CHECK(cli({"run", base, "-o", d.path.string(), "--jobs", "0"}) == 1);
  CHECK(cli({"run", base, "-o", (d.path / "r").string(), "--seed", "3", "--jobs", "2"}) == 0);
  CHECK(fs::exists(d.path / "r" / "summary.json"));
  CHECK(cli({"figdata", base, "--fig", "polar", "-o", (d.path / "p.csv").string()}) == 1);
  CHECK(!fs::exists(d.path / "p.csv"));
  CHECK(cli({"figdata", base, "--fig", "cfar_range", "-o", (d.path / "c.csv").string()}) == 0);
  CHECK(fs::exists(d.path / "c.csv"));

  std::string text;
  CHECK(cli({"detect", (d.path / "r" / "cube.rdmx").string(), "--algo", "os"}, &text) == 0);
  CHECK(text.rfind(kDetectionCsvHeader, 0) == 0);
  CHECK(cli({"detect", (d.path / "r" / "cube.rdmx").string(), "--algo", "go"}) == 1);

  CHECK(cli({"sweep", base, "--param", "reflectors.1.reflectivity", "--values", "0,2"}, &text) == 0);
  const auto rows = lines(text);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].rfind("0,", 0) == 0);
  CHECK(rows[2].rfind("2,", 0) == 0);
  CHECK(cli({"sweep", base, "--param", "radar.colour", "--values", "1"}) == 1);

  spit(d.path / "neg.json", R"({"noise_sigma": -1})");
  CHECK(cli({"run", (d.path / "neg.json").string(), "-o", (d.path / "n").string()}) == 1);
}
