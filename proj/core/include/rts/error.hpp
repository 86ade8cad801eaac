#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rts {

enum class ErrorCode {
  InvalidParameter,
  MissingT60,
  InsufficientDecay,
  DimensionMismatch,
  DegenerateSignal,
  Io,
  Format,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` lets callers
// (the CLI in particular) map failures onto structured output.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace rts
