#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecoval {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kDuplicateId,
  kUnknownClass,
  kIo,
  kMalformed,
  kOracleGuard,
  kSingularModel,
  kNotFitted,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map them onto exit codes and tests can
// tell distinct diagnostics apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ecoval
