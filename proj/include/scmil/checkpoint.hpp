#pragma once
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "scmil/error.hpp"
#include "scmil/tape.hpp"

namespace scmil {

// ---- SCMC checkpoint format ----
// Offset 0: magic "SCMC" (4 bytes)
// Offset 4: version byte (1)
// Offset 5: optimizer step count as uint64 LE
// Offset 13: config length as uint32 LE, then that many UTF-8 bytes (JSON)
// then: record count as uint32 LE, and per record:
//   name length uint32 LE, name bytes,
//   rows uint32 LE, cols uint32 LE,
//   rows*cols float64 LE parameter values,
//   rows*cols float64 LE first Adam moment,
//   rows*cols float64 LE second Adam moment.
// Records appear in parameter registration order.

struct CheckpointRecord {
  std::string name;
  Matrix value;
  Matrix m;
  Matrix v;
};

struct Checkpoint {
  std::string config_json;
  uint64_t optimizer_steps = 0;
  std::vector<CheckpointRecord> records;
};

inline void save_checkpoint(const std::string& path, const std::string& config_json,
                            ParamStore& store, uint64_t optimizer_steps) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("save_checkpoint: cannot open " + path);
  os.write("SCMC", 4);
  const char version = 1;
  os.write(&version, 1);
  os.write(reinterpret_cast<const char*>(&optimizer_steps), 8);
  const auto clen = static_cast<uint32_t>(config_json.size());
  os.write(reinterpret_cast<const char*>(&clen), 4);
  os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  const auto params = store.all();
  const auto count = static_cast<uint32_t>(params.size());
  os.write(reinterpret_cast<const char*>(&count), 4);
  for (const Parameter* p : params) {
    const auto nlen = static_cast<uint32_t>(p->name.size());
    os.write(reinterpret_cast<const char*>(&nlen), 4);
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    const auto rows = static_cast<uint32_t>(p->value.rows());
    const auto cols = static_cast<uint32_t>(p->value.cols());
    os.write(reinterpret_cast<const char*>(&rows), 4);
    os.write(reinterpret_cast<const char*>(&cols), 4);
    const auto bytes = static_cast<std::streamsize>(p->value.size() * 8);
    os.write(reinterpret_cast<const char*>(p->value.data()), bytes);
    os.write(reinterpret_cast<const char*>(p->m.data()), bytes);
    os.write(reinterpret_cast<const char*>(p->v.data()), bytes);
  }
  if (!os) throw FormatError("save_checkpoint: short write to " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("read_checkpoint: cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SCMC", 4) != 0)
    throw FormatError("read_checkpoint: bad magic at byte offset 0 in " + path);
  char version = 0;
  is.read(&version, 1);
  if (version != 1)
    throw FormatError("read_checkpoint: unsupported version in " + path);
  Checkpoint ck;
  is.read(reinterpret_cast<char*>(&ck.optimizer_steps), 8);
  uint32_t clen = 0;
  is.read(reinterpret_cast<char*>(&clen), 4);
  ck.config_json.resize(clen);
  is.read(ck.config_json.data(), clen);
  uint32_t count = 0;
  is.read(reinterpret_cast<char*>(&count), 4);
  if (!is) throw FormatError("read_checkpoint: truncated header in " + path);
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointRecord rec;
    uint32_t nlen = 0;
    is.read(reinterpret_cast<char*>(&nlen), 4);
    rec.name.resize(nlen);
    is.read(rec.name.data(), nlen);
    uint32_t rows = 0, cols = 0;
    is.read(reinterpret_cast<char*>(&rows), 4);
    is.read(reinterpret_cast<char*>(&cols), 4);
    if (!is)
      throw FormatError("read_checkpoint: truncated record " + std::to_string(i) +
                        " in " + path);
    rec.value = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    rec.m = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    rec.v = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    const auto bytes = static_cast<std::streamsize>(rec.value.size() * 8);
    is.read(reinterpret_cast<char*>(rec.value.data()), bytes);
    is.read(reinterpret_cast<char*>(rec.m.data()), bytes);
    is.read(reinterpret_cast<char*>(rec.v.data()), bytes);
    if (!is)
      throw FormatError("read_checkpoint: truncated payload of record " +
                        std::to_string(i) + " (" + rec.name + ") in " + path);
    ck.records.push_back(std::move(rec));
  }
  return ck;
}

// Restore parameter values and optimizer moments; names and shapes must
// match the store exactly.
inline void load_into_store(const Checkpoint& ck, ParamStore& store) {
  const auto params = store.all();
  if (params.size() != ck.records.size())
    throw FormatError("checkpoint holds " + std::to_string(ck.records.size()) +
                      " records, model has " + std::to_string(params.size()) +
                      " parameters");
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter* p = params[i];
    const CheckpointRecord& rec = ck.records[i];
    if (p->name != rec.name)
      throw FormatError("checkpoint record '" + rec.name +
                        "' does not match parameter '" + p->name + "'");
    if (!p->value.same_shape(rec.value))
      throw FormatError("checkpoint record '" + rec.name + "' has shape " +
                        rec.value.shape_str() + ", expected " + p->value.shape_str());
    p->value = rec.value;
    p->m = rec.m;
    p->v = rec.v;
  }
}

}  // namespace scmil
