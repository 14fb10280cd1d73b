#pragma once

#include <stdexcept>
#include <string>

namespace tumorsynth {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Geometry,
  Infeasible,
  State,
  NotFound,
  Internal,
};

const char* to_string(ErrorCode code);

// Single exception type thrown across the toolkit. The C API maps `code()`
// onto ts_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace tumorsynth
