#include "fmlp/error.hpp"

namespace fmlp {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidDimension: return "invalid-dimension";
    case ErrorCode::InvalidKnots: return "invalid-knots";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::EmptyData: return "empty-data";
    case ErrorCode::Underdetermined: return "underdetermined";
    case ErrorCode::Conditioning: return "conditioning";
    case ErrorCode::Evaluation: return "evaluation";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::BasisMismatch: return "basis-mismatch";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Ordering: return "ordering";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Conditioning:
    case ErrorCode::Evaluation:
    case ErrorCode::Divergence:
    case ErrorCode::Io:
    case ErrorCode::Internal:
      return false;
    default:
      return true;
  }
}

}  // namespace fmlp
