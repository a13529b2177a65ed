// checkpoint.hpp - binary parameter checkpoints
//
// Layout (all integers little-endian):
//   "SEMSINCK"            8-byte magic
//   u32 version           currently 1
//   u64 metadata length, metadata bytes (UTF-8 JSON)
//   u32 parameter count
//   per parameter: u32 name length, name, u32 rank, u64 dims[rank],
//                  f64 values in row-major order

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "semsin/tensor.hpp"

namespace semsin::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string metadata;
  ParameterStore params;
};

void write_checkpoint(std::ostream& out, const std::string& metadata, const ParameterStore& params);
void save_checkpoint(const std::string& path, const std::string& metadata, const ParameterStore& params);

/// Throws OffsetError with codes BadMagic, UnsupportedVersion, TruncatedPayload.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace semsin::nn
