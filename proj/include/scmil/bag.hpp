#pragma once
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scmil/error.hpp"
#include "scmil/matrix.hpp"

namespace scmil {

static_assert(std::endian::native == std::endian::little,
              "bag/checkpoint formats assume a little-endian host");

// One patient's bag: n patch feature vectors plus raw slide coordinates.
struct PatchBag {
  std::string patient_id;
  Matrix features;   // n x d
  Matrix positions;  // n x 2, arbitrary units
};

// Per-patient survival label. duration is in years; event 1 means the death
// was observed, 0 means the patient was censored at that time.
struct CohortRecord {
  std::string patient_id;
  double duration = 0.0;
  int event = 0;
  std::string bag_path;
};

// ---- SCMB binary bag format ----
// Offset 0: magic "SCMB" (4 bytes)
// Offset 4: version byte (1)
// Offset 5: n as uint32 LE
// Offset 9: d as uint32 LE
// Offset 13: n*2 float64 LE (positions, row-major)
// then     : n*d float64 LE (features, row-major)

namespace detail {
inline void put_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
inline uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
}  // namespace detail

inline void write_bag(const PatchBag& bag, const std::string& path) {
  if (bag.features.rows() < 1)
    throw ValidationError("write_bag: bag must contain at least one patch");
  if (bag.positions.rows() != bag.features.rows() || bag.positions.cols() != 2)
    throw ShapeError("write_bag: positions are " + bag.positions.shape_str() +
                     " for features " + bag.features.shape_str());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("write_bag: cannot open " + path);
  os.write("SCMB", 4);
  const char version = 1;
  os.write(&version, 1);
  detail::put_u32(os, static_cast<uint32_t>(bag.features.rows()));
  detail::put_u32(os, static_cast<uint32_t>(bag.features.cols()));
  os.write(reinterpret_cast<const char*>(bag.positions.data()),
           static_cast<std::streamsize>(bag.positions.size() * 8));
  os.write(reinterpret_cast<const char*>(bag.features.data()),
           static_cast<std::streamsize>(bag.features.size() * 8));
  if (!os) throw FormatError("write_bag: short write to " + path);
}

inline PatchBag load_bag(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw FormatError("load_bag: cannot open " + path);
  const auto file_size = static_cast<uint64_t>(is.tellg());
  is.seekg(0);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SCMB", 4) != 0)
    throw FormatError("load_bag: bad magic at byte offset 0 in " + path);
  char version = 0;
  is.read(&version, 1);
  if (version != 1)
    throw FormatError("load_bag: unsupported version at byte offset 4 in " + path);
  const uint32_t n = detail::get_u32(is);
  const uint32_t d = detail::get_u32(is);
  if (!is) throw FormatError("load_bag: truncated header at byte offset 5 in " + path);
  if (n < 1 || d < 1)
    throw FormatError("load_bag: header claims n=" + std::to_string(n) +
                      ", d=" + std::to_string(d) + " at byte offset 5 in " + path);
  const uint64_t expected = 13ULL + 8ULL * n * 2 + 8ULL * n * d;
  if (file_size != expected)
    throw FormatError("load_bag: payload is " + std::to_string(file_size) +
                      " bytes but header claims " + std::to_string(expected) +
                      " (mismatch from byte offset " +
                      std::to_string(std::min<uint64_t>(file_size, expected)) +
                      ") in " + path);
  PatchBag bag;
  bag.patient_id = std::filesystem::path(path).stem().string();
  bag.positions = Matrix(static_cast<int>(n), 2);
  bag.features = Matrix(static_cast<int>(n), static_cast<int>(d));
  is.read(reinterpret_cast<char*>(bag.positions.data()),
          static_cast<std::streamsize>(bag.positions.size() * 8));
  is.read(reinterpret_cast<char*>(bag.features.data()),
          static_cast<std::streamsize>(bag.features.size() * 8));
  if (!is) throw FormatError("load_bag: truncated payload in " + path);
  if (!bag.positions.all_finite())
    throw FormatError("load_bag: non-finite position at byte offset 13 onward in " + path);
  if (!bag.features.all_finite())
    throw FormatError("load_bag: non-finite feature at byte offset " +
                      std::to_string(13 + bag.positions.size() * 8) + " onward in " + path);
  return bag;
}

// Map raw coordinates to [0,1]^2 with the per-bag bounding box. A degenerate
// box maps every patch to 0.5 on that axis.
inline Matrix normalize_positions(const Matrix& pos) {
  if (pos.cols() != 2)
    throw ShapeError("normalize_positions: expected n x 2, got " + pos.shape_str());
  Matrix out(pos.rows(), 2);
  for (int axis = 0; axis < 2; ++axis) {
    double lo = pos.at(0, axis), hi = pos.at(0, axis);
    for (int i = 1; i < pos.rows(); ++i) {
      lo = std::fmin(lo, pos.at(i, axis));
      hi = std::fmax(hi, pos.at(i, axis));
    }
    const double span = hi - lo;
    for (int i = 0; i < pos.rows(); ++i)
      out.at(i, axis) = span > 0.0 ? (pos.at(i, axis) - lo) / span : 0.5;
  }
  return out;
}

// ---- manifest: comma-delimited, header patient_id,duration,event,bag_path ----

inline std::vector<CohortRecord> load_manifest(const std::string& path,
                                               bool check_bag_files = true) {
  std::ifstream is(path);
  if (!is) throw FormatError("load_manifest: cannot open " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::string line;
  if (!std::getline(is, line)) throw FormatError("load_manifest: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "patient_id,duration,event,bag_path")
    throw FormatError("load_manifest: bad header '" + line + "' in " + path);
  std::vector<CohortRecord> records;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4)
      throw ValidationError("load_manifest: row " + std::to_string(row) +
                            ": expected 4 fields, got " + std::to_string(fields.size()));
    CohortRecord rec;
    rec.patient_id = fields[0];
    try {
      size_t used = 0;
      rec.duration = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw ValidationError("load_manifest: row " + std::to_string(row) +
                            ": duration '" + fields[1] + "' is not a number");
    }
    if (!(rec.duration > 0.0))
      throw ValidationError("load_manifest: row " + std::to_string(row) +
                            ": duration must be > 0, got " + fields[1]);
    if (fields[2] == "0")
      rec.event = 0;
    else if (fields[2] == "1")
      rec.event = 1;
    else
      throw ValidationError("load_manifest: row " + std::to_string(row) +
                            ": event must be 0 or 1, got '" + fields[2] + "'");
    rec.bag_path = (base / fields[3]).string();
    if (check_bag_files && !std::filesystem::exists(rec.bag_path))
      throw ValidationError("load_manifest: row " + std::to_string(row) +
                            ": bag file not found: " + rec.bag_path);
    records.push_back(std::move(rec));
  }
  return records;
}

inline void write_manifest(const std::vector<CohortRecord>& records,
                           const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("write_manifest: cannot open " + path);
  os << "patient_id,duration,event,bag_path\n";
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  const std::filesystem::path base_abs =
      base.empty() ? std::filesystem::current_path() : std::filesystem::absolute(base);
  for (const auto& r : records) {
    std::string rel = r.bag_path;
    std::error_code ec;
    const auto relp = std::filesystem::relative(
        std::filesystem::absolute(r.bag_path), base_abs, ec);
    if (!ec && !relp.empty()) rel = relp.string();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", r.duration);
    os << r.patient_id << ',' << buf << ',' << r.event << ',' << rel << '\n';
  }
}

}  // namespace scmil
