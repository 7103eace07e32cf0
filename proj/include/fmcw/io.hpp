#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fmcw/engine.hpp"
#include "fmcw/receiver.hpp"

namespace fmcw {

enum class RdmxKind : std::uint16_t { complex_pair = 0, real64 = 1 };

/// In-memory image of an RDMX file. Complex payloads are interleaved re, im.
struct RdmxArray {
  RdmxKind kind = RdmxKind::real64;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::size_t elements() const;
};

inline constexpr std::uint16_t kRdmxVersion = 1;

/// "RDMX", u16 version, u16 kind, u32 rank, u32 dims[rank], then the row-major
/// little-endian float64 payload (two per element for complex).
std::string encode_rdmx(const RdmxArray& a);

/// Throws IoError naming the byte offset where the input stops making sense.
RdmxArray decode_rdmx(const std::string& bytes);

RdmxArray cube_to_rdmx(const IfDataCube<double>& cube);
IfDataCube<double> cube_from_rdmx(const RdmxArray& a);

/// dims = [n_rx, n_range, n_velocity].
RdmxArray map_to_rdmx(const RangeDopplerMap<double>& map);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

/// Fixed-precision decimal so outputs are byte-stable.
std::string fmt_fixed(double v, int digits = 6);

inline constexpr const char* kDetectionCsvHeader = "algo,range_m,velocity_mps,azimuth_deg,power_db,kind";

std::string detections_csv(const Processed& p, bool with_ca = true, bool with_os = true);

}  // namespace fmcw
