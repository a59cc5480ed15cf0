#include "rwlime/error.hpp"

namespace rwlime {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::OddDimension: return "OddDimension";
    case ErrorCode::EmptySpan: return "EmptySpan";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AllMasked: return "AllMasked";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::EmptyGeneration: return "EmptyGeneration";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateLOO: return "DegenerateLOO";
    case ErrorCode::BudgetExceedsSpace: return "BudgetExceedsSpace";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::EmptyGold: return "EmptyGold";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace rwlime
