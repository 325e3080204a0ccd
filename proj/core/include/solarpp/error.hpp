#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace solarpp {

/// Failure classes surfaced to callers. The CLI maps these to exit codes.
enum class ErrorCategory { kConfig, kData, kFit };

enum class ErrorCode {
  // configuration
  kInvalidConfig,
  kInvalidStrategy,
  kUnknownConvention,
  kInvalidProbability,
  kInvalidArgument,
  // data
  kFileNotFound,
  kMissingColumn,
  kNonNumericCell,
  kDuplicateTime,
  kNegativeGhi,
  kValueOutOfRange,
  kInvalidTime,
  kEmptySplit,
  kIndexMismatch,
  kMissingCovariate,
  kEmptyGroup,
  kZeroReference,
  // fitting
  kNonConvergence,
  kInsufficientHourData,
  kUnfittedModel,
  kSerialization,
};

ErrorCategory category_of(ErrorCode code);
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

/// Process exit code for an error category: 2 config, 3 data, 4 fit.
int exit_code(ErrorCategory category);

}  // namespace solarpp
