#include "strokepipe/features.hpp"

#include <cmath>

#include "strokepipe/error.hpp"

namespace strokepipe {

std::string_view to_string(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::Haralick28: return "haralick28";
    case FeatureKind::Nmf14: return "nmf14";
    case FeatureKind::Concatenated42: return "concatenated42";
  }
  return "?";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view text) noexcept {
  if (text == "haralick28") return FeatureKind::Haralick28;
  if (text == "nmf14") return FeatureKind::Nmf14;
  if (text == "concatenated42") return FeatureKind::Concatenated42;
  return std::nullopt;
}

FeatureVector concatenate(const FeatureVector& haralick, const FeatureVector& nmf) {
  if (haralick.kind != FeatureKind::Haralick28 || nmf.kind != FeatureKind::Nmf14)
    throw Error(ErrorCode::FeatureKindMismatch, "concatenation expects haralick28 followed by nmf14");
  FeatureVector out;
  out.kind = FeatureKind::Concatenated42;
  out.source_id = haralick.source_id;
  out.values = haralick.values;
  out.values.insert(out.values.end(), nmf.values.begin(), nmf.values.end());
  return out;
}

void require_finite(const FeatureVector& v) {
  for (double x : v.values)
    if (!std::isfinite(x))
      throw Error(ErrorCode::NonFinite, "non-finite feature value in sample '" + v.source_id + "'");
}

}  // namespace strokepipe
