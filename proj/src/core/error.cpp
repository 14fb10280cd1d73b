#include "tumorsynth/core/error.hpp"

namespace tumorsynth {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Geometry: return "geometry mismatch";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::State: return "invalid state";
    case ErrorCode::NotFound: return "not found";
    case ErrorCode::Internal: return "internal error";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace tumorsynth
