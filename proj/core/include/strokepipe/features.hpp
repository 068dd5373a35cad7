#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace strokepipe {

enum class FeatureKind { Haralick28, Nmf14, Concatenated42 };

std::string_view to_string(FeatureKind kind) noexcept;
std::optional<FeatureKind> parse_feature_kind(std::string_view text) noexcept;

/// A fixed-length real feature vector tagged with its provenance.
struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::Haralick28;
  std::string source_id;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Joins a Haralick and an NMF vector into one Concatenated42 vector.
FeatureVector concatenate(const FeatureVector& haralick, const FeatureVector& nmf);

/// Throws Error(NonFinite) if any value is NaN or infinite.
void require_finite(const FeatureVector& v);

}  // namespace strokepipe
