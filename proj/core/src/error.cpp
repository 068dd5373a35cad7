#include "strokepipe/error.hpp"

namespace strokepipe {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::AllMasked: return "all_masked";
    case ErrorCode::EmptyCooccurrence: return "empty_cooccurrence";
    case ErrorCode::NegativeInput: return "negative_input";
    case ErrorCode::SingleClass: return "single_class";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::DegenerateModel: return "degenerate_model";
    case ErrorCode::FeatureKindMismatch: return "feature_kind_mismatch";
    case ErrorCode::NonConvergence: return "non_convergence";
  }
  return "unknown";
}

}  // namespace strokepipe
