#include "causaloid/error.hpp"

namespace causaloid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroConditionCount: return "ZeroConditionCount";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::UnknownRegion: return "UnknownRegion";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TableTooLarge: return "TableTooLarge";
    case ErrorCode::SpanDeficient: return "SpanDeficient";
    case ErrorCode::IncompleteTable: return "IncompleteTable";
    case ErrorCode::DegenerateExterior: return "DegenerateExterior";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownExterior: return "UnknownExterior";
    case ErrorCode::ContextMismatch: return "ContextMismatch";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::MissingEntry: return "MissingEntry";
    case ErrorCode::RuleInapplicable: return "RuleInapplicable";
    case ErrorCode::UnknownProcedure: return "UnknownProcedure";
    case ErrorCode::ZeroDenominatorVector: return "ZeroDenominatorVector";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnknownEntry: return "UnknownEntry";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  return code == ErrorCode::ResidualTooLarge ||
         code == ErrorCode::SingularTransform ||
         code == ErrorCode::SpanDeficient;
}

}  // namespace causaloid
