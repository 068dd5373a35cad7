#pragma once

#include "strokepipe/features.hpp"
#include "strokepipe/svm.hpp"

namespace strokepipe {

/// Two SVMs trained on different representations of the same samples.
/// Model A takes Haralick28 vectors, model B takes Nmf14 vectors.
struct FusedModel {
  SvmModel model_a;
  SvmModel model_b;
};

enum class ChosenModel { A, B };

struct FusedPrediction {
  int label = 1;
  ChosenModel chosen = ChosenModel::A;
  double score_a = 0.0;
  double score_b = 0.0;
};

/// Trusts whichever model reports the larger |score|; an exact tie goes to A.
FusedPrediction fuse_scores(double score_a, double score_b) noexcept;

/// Scores both representations and fuses them. Throws FeatureKindMismatch
/// if either vector does not match its model, DegenerateModel if either
/// model cannot produce a score.
FusedPrediction fuse_predict(const FusedModel& fm, const FeatureVector& x_a, const FeatureVector& x_b);

}  // namespace strokepipe
