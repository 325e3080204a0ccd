#include "solarpp/error.hpp"

namespace solarpp {

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidStrategy:
    case ErrorCode::kUnknownConvention:
    case ErrorCode::kInvalidProbability:
    case ErrorCode::kInvalidArgument:
      return ErrorCategory::kConfig;
    case ErrorCode::kNonConvergence:
    case ErrorCode::kInsufficientHourData:
    case ErrorCode::kUnfittedModel:
    case ErrorCode::kSerialization:
      return ErrorCategory::kFit;
    default:
      return ErrorCategory::kData;
  }
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidStrategy: return "InvalidStrategy";
    case ErrorCode::kUnknownConvention: return "UnknownConvention";
    case ErrorCode::kInvalidProbability: return "InvalidProbability";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNonNumericCell: return "NonNumericCell";
    case ErrorCode::kDuplicateTime: return "DuplicateTime";
    case ErrorCode::kNegativeGhi: return "NegativeGHI";
    case ErrorCode::kValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::kInvalidTime: return "InvalidTime";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kIndexMismatch: return "IndexMismatch";
    case ErrorCode::kMissingCovariate: return "MissingCovariate";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kZeroReference: return "ZeroReference";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kInsufficientHourData: return "InsufficientHourData";
    case ErrorCode::kUnfittedModel: return "UnfittedModel";
    case ErrorCode::kSerialization: return "Serialization";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig: return 2;
    case ErrorCategory::kData: return 3;
    case ErrorCategory::kFit: return 4;
  }
  return 1;
}

}  // namespace solarpp
