#pragma once

#include <stdexcept>
#include <string>

namespace pinsurf {

enum class ErrorCode {
  InvalidInput,
  DegenerateReference,
  Protocol,
  DegenerateSignal,
  Io,
};

// All library failures are reported through this exception; the C API maps
// the code onto pinsurf_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace pinsurf
