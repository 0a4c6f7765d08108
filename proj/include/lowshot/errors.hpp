#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lowshot {

enum class ErrorCode {
  DegenerateMetric,
  EmptyInput,
  InvalidArgument,
  AllZeroMass,
  ZeroWeightMass,
  InsufficientDraws,
  DegenerateWeights,
  MissingLabel,
  IdMismatch,
  RegenerationLimit,
  IoError,
  ValidationError,
  StorageError,
  NotFound,
  SessionComplete,
  UnknownItem,
  AlreadyLabeled,
  InvalidLabel,
  NoEstimateYet,
  SchemaMismatch,
};

std::string_view error_code_name(ErrorCode code);

// All recoverable failures in the library carry a code so callers (and the
// HTTP layer) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lowshot
