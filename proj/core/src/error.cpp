#include "ecoval/error.hpp"

namespace ecoval {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kDuplicateId: return "duplicate id";
    case ErrorCode::kUnknownClass: return "unknown class index";
    case ErrorCode::kIo: return "i/o failure";
    case ErrorCode::kMalformed: return "malformed file";
    case ErrorCode::kOracleGuard: return "oracle size guard";
    case ErrorCode::kSingularModel: return "singular model";
    case ErrorCode::kNotFitted: return "not fitted";
  }
  return "unknown error";
}

}  // namespace ecoval
