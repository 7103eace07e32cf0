#include "fmcw/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "fmcw/errors.hpp"

namespace fmcw {

namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Cursor {
 public:
  explicit Cursor(const std::string& b) : b_(b) {}

  std::uint64_t take(int bytes, const char* what) {
    if (pos_ + static_cast<std::size_t>(bytes) > b_.size())
      throw IoError("RDMX truncated at offset " + std::to_string(pos_) + " while reading " + what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::size_t pos() const { return pos_; }
  std::size_t left() const { return b_.size() - pos_; }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

std::size_t per_element(RdmxKind k) { return k == RdmxKind::complex_pair ? 2 : 1; }

}  // namespace

std::size_t RdmxArray::elements() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string encode_rdmx(const RdmxArray& a) {
  if (a.values.size() != a.elements() * per_element(a.kind))
    throw IoError("RDMX payload size does not match its dimensions");
  std::string out = "RDMX";
  out.reserve(16 + 4 * a.dims.size() + 8 * a.values.size());
  put_le(out, kRdmxVersion, 2);
  put_le(out, static_cast<std::uint16_t>(a.kind), 2);
  put_le(out, a.dims.size(), 4);
  for (auto d : a.dims) put_le(out, d, 4);
  for (double v : a.values) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

RdmxArray decode_rdmx(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "RDMX") != 0) throw IoError("RDMX bad magic at offset 0");
  Cursor c(bytes);
  c.take(4, "magic");
  const auto version = c.take(2, "version");
  if (version != kRdmxVersion) throw IoError("RDMX unsupported version " + std::to_string(version) + " at offset 4");
  const auto kind = c.take(2, "element kind");
  if (kind > 1) throw IoError("RDMX unknown element kind " + std::to_string(kind) + " at offset 6");
  RdmxArray a;
  a.kind = static_cast<RdmxKind>(kind);
  const auto rank = c.take(4, "rank");
  if (rank == 0 || rank > 16) throw IoError("RDMX implausible rank " + std::to_string(rank) + " at offset 8");
  for (std::uint64_t i = 0; i < rank; ++i) a.dims.push_back(static_cast<std::uint32_t>(c.take(4, "dims")));
  const std::size_t n = a.elements() * per_element(a.kind);
  if (c.left() != n * 8)
    throw IoError("RDMX payload at offset " + std::to_string(c.pos()) + " holds " + std::to_string(c.left()) +
                  " bytes, expected " + std::to_string(n * 8));
  a.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.values[i] = std::bit_cast<double>(c.take(8, "payload"));
  return a;
}

RdmxArray cube_to_rdmx(const IfDataCube<double>& cube) {
  RdmxArray a;
  a.kind = RdmxKind::complex_pair;
  a.dims = {static_cast<std::uint32_t>(cube.n_chirps), static_cast<std::uint32_t>(cube.n_rx),
            static_cast<std::uint32_t>(cube.n_samples)};
  a.values.reserve(cube.n_chirps * cube.n_rx * cube.n_samples * 2);
  // samples is row-major with rows chirp * n_rx + rx, so this walk is already row-major.
  for (Eigen::Index r = 0; r < cube.samples.rows(); ++r) {
    for (Eigen::Index i = 0; i < cube.samples.cols(); ++i) {
      a.values.push_back(cube.samples(r, i).real());
      a.values.push_back(cube.samples(r, i).imag());
    }
  }
  return a;
}

IfDataCube<double> cube_from_rdmx(const RdmxArray& a) {
  if (a.kind != RdmxKind::complex_pair || a.dims.size() != 3)
    throw IoError("RDMX file is not a complex [chirp][rx][sample] cube");
  IfDataCube<double> cube(a.dims[0], a.dims[1], a.dims[2]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < cube.samples.rows(); ++r) {
    for (Eigen::Index i = 0; i < cube.samples.cols(); ++i, k += 2)
      cube.samples(r, i) = {a.values[k], a.values[k + 1]};
  }
  return cube;
}

RdmxArray map_to_rdmx(const RangeDopplerMap<double>& map) {
  RdmxArray a;
  a.kind = RdmxKind::complex_pair;
  a.dims = {static_cast<std::uint32_t>(map.n_rx()), static_cast<std::uint32_t>(map.n_range),
            static_cast<std::uint32_t>(map.n_velocity)};
  a.values.reserve(map.n_rx() * map.n_range * map.n_velocity * 2);
  for (std::size_t m = 0; m < map.n_rx(); ++m) {
    for (std::size_t r = 0; r < map.n_range; ++r) {
      for (std::size_t v = 0; v < map.n_velocity; ++v) {
        const auto x = map.at(r, v, m);
        a.values.push_back(x.real());
        a.values.push_back(x.imag());
      }
    }
  }
  return a;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read error on '" + path.string() + "'");
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("short write on '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
  }
}

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) s.erase(0, s[0] == '-' ? 1 : 0);
  return s;
}

std::string detections_csv(const Processed& p, bool with_ca, bool with_os) {
  std::string out = std::string(kDetectionCsvHeader) + "\n";
  auto rows = [&](const std::vector<AttributedDetection>& v) {
    for (const auto& a : v) {
      const Detection& d = a.detection;
      out += to_string(d.algorithm) + "," + fmt_fixed(d.range_m) + "," + fmt_fixed(d.velocity_mps) + "," +
             fmt_fixed(d.azimuth_rad * 180.0 / kPi, 4) + "," + fmt_fixed(d.power_db, 4) + "," + to_string(a.kind) + "\n";
    }
  };
  if (with_ca) rows(p.ca);
  if (with_os) rows(p.os);
  return out;
}

}  // namespace fmcw
