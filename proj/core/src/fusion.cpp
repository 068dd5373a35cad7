#include "strokepipe/fusion.hpp"

#include <cmath>

#include "strokepipe/error.hpp"

namespace strokepipe {

FusedPrediction fuse_scores(double score_a, double score_b) noexcept {
  FusedPrediction out;
  out.score_a = score_a;
  out.score_b = score_b;
  out.chosen = std::abs(score_b) > std::abs(score_a) ? ChosenModel::B : ChosenModel::A;
  const double s = out.chosen == ChosenModel::A ? score_a : score_b;
  out.label = s >= 0.0 ? 1 : -1;
  return out;
}

FusedPrediction fuse_predict(const FusedModel& fm, const FeatureVector& x_a, const FeatureVector& x_b) {
  if (fm.model_a.feature_kind == fm.model_b.feature_kind)
    throw Error(ErrorCode::FeatureKindMismatch, "fused models must use different feature kinds");
  return fuse_scores(score(fm.model_a, x_a), score(fm.model_b, x_b));
}

}  // namespace strokepipe
