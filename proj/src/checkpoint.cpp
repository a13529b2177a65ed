// checkpoint.cpp

#include "semsin/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "semsin/binary_io.hpp"

namespace semsin::nn {

namespace {
constexpr char kMagic[8] = {'S', 'E', 'M', 'S', 'I', 'N', 'C', 'K'};
}

void write_checkpoint(std::ostream& out, const std::string& metadata, const ParameterStore& params) {
  out.write(kMagic, sizeof kMagic);
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  io::write_le<std::uint64_t>(out, metadata.size());
  out.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params.all()) {
    io::write_string(out, p->name);
    io::write_le<std::uint32_t>(out, 2);
    io::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(p->value.rows()));
    io::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) io::write_le<double>(out, p->value.data()[i]);
  }
}

void save_checkpoint(const std::string& path, const std::string& metadata, const ParameterStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IoError", "cannot write checkpoint '" + path + "'");
  write_checkpoint(out, metadata, params);
  if (!out) throw Error("IoError", "failed writing checkpoint '" + path + "'");
}

Checkpoint read_checkpoint(std::istream& in) {
  io::Reader reader(in, "TruncatedPayload");
  char magic[8];
  reader.read_raw(magic, sizeof magic);
  if (std::string(magic, 8) != std::string(kMagic, 8)) throw OffsetError("BadMagic", "not a semsin checkpoint", 0);
  const auto version = reader.read<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw OffsetError("UnsupportedVersion", "checkpoint version " + std::to_string(version), 8);

  Checkpoint ck;
  const auto meta_len = reader.read<std::uint64_t>();
  if (meta_len > (1ULL << 32)) throw OffsetError("TruncatedPayload", "implausible metadata length", reader.offset());
  ck.metadata.resize(meta_len);
  reader.read_raw(ck.metadata.data(), meta_len);

  const auto count = reader.read<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = reader.read_string(4096);
    const auto rank = reader.read<std::uint32_t>();
    if (rank == 0 || rank > 2) throw OffsetError("UnsupportedRank", "parameter '" + name + "' has rank " +
                                                                        std::to_string(rank), reader.offset());
    std::uint64_t rows = reader.read<std::uint64_t>();
    std::uint64_t cols = rank == 2 ? reader.read<std::uint64_t>() : 1;
    if (rows * cols > (1ULL << 31)) throw OffsetError("TruncatedPayload", "implausible parameter size", reader.offset());
    Parameter& p = ck.params.add(name, rows, cols);
    for (Eigen::Index k = 0; k < p.value.size(); ++k) p.value.data()[k] = reader.read<double>();
  }
  return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace semsin::nn
