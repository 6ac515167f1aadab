#include "condmall/error.hpp"

namespace condmall {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::SizeCapExceeded: return "SizeCapExceeded";
    case ErrorCode::UnknownIndex: return "UnknownIndex";
    case ErrorCode::MismatchedModel: return "MismatchedModel";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NotCentered: return "NotCentered";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::NotStandardized: return "NotStandardized";
    case ErrorCode::NotHomogeneous: return "NotHomogeneous";
    case ErrorCode::NotPureChaos: return "NotPureChaos";
    case ErrorCode::NonProductForm: return "NonProductForm";
    case ErrorCode::ConditionFailed: return "ConditionFailed";
    case ErrorCode::MotifTooLarge: return "MotifTooLarge";
    case ErrorCode::DecompositionTooLarge: return "DecompositionTooLarge";
    case ErrorCode::EmptyFamily: return "EmptyFamily";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace condmall
