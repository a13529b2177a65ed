// binary_io.hpp - little-endian primitives for the checkpoint and CTXEMB formats

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "semsin/error.hpp"

namespace semsin::io {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

/// Reads with byte-offset tracking; `error_code` names the failure on a short read.
class Reader {
 public:
  Reader(std::istream& in, std::string error_code) : in_(in), error_code_(std::move(error_code)) {}

  template <typename T>
  T read() {
    unsigned char bytes[sizeof(T)];
    read_raw(reinterpret_cast<char*>(bytes), sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string read_string(std::size_t limit = 1u << 30) {
    const auto n = read<std::uint32_t>();
    if (n > limit) throw OffsetError(error_code_, "implausible string length", offset_);
    std::string s(n, '\0');
    read_raw(s.data(), n);
    return s;
  }

  void read_raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw OffsetError(error_code_, "unexpected end of data", offset_ + static_cast<std::size_t>(in_.gcount()));
    offset_ += n;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::string error_code_;
  std::size_t offset_ = 0;
};

}  // namespace semsin::io
