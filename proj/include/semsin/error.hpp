// error.hpp - exception hierarchy shared by every semsin module
//
// Each error carries a stable machine-readable code (used by the CLI error
// record) next to the human-readable message.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semsin {

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Error tied to a byte position in some textual or binary input.
class OffsetError : public Error {
 public:
  OffsetError(std::string code, const std::string& message, std::size_t offset)
      : Error(std::move(code), message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace semsin
