#pragma once

#include <span>
#include <vector>

#include "strokepipe/features.hpp"

namespace strokepipe {

/// Kernel family and parameters.
///   Linear: u.v
///   Rbf:    exp(-||u - v||^2 / (2 sigma^2))
///   Mlp:    tanh(scale * u.v + offset)   ("[a b]" maps to scale=a, offset=b)
struct KernelSpec {
  enum class Kind { Linear, Rbf, Mlp };

  Kind kind = Kind::Linear;
  double sigma = 1.0;
  double scale = 1.0;
  double offset = 0.0;

  static KernelSpec linear() { return {}; }
  static KernelSpec rbf(double sigma);
  static KernelSpec mlp(double scale, double offset) { return {Kind::Mlp, 1.0, scale, offset}; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

std::string_view to_string(KernelSpec::Kind kind) noexcept;

double kernel_eval(const KernelSpec& spec, std::span<const double> u, std::span<const double> v);

/// Per-dimension min-max scaling fitted on training data. Constant
/// dimensions map to 0.
struct MinMaxScaler {
  std::vector<double> lo;
  std::vector<double> hi;

  static MinMaxScaler fit(std::span<const FeatureVector> data);
  std::vector<double> apply(std::span<const double> x) const;
  bool empty() const noexcept { return lo.empty(); }

  friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;
};

struct LabeledSample {
  FeatureVector x;
  int label = 1;  // +1 stroke, -1 non-stroke
};

struct SvmTrainOptions {
  double C = 1.0;
  double tol = 1e-3;
  bool scale_features = true;
  // Iteration cap is max_passes * n pair updates.
  long max_passes = 10000;
};

struct SvmDiagnostics {
  long iterations = 0;
  bool converged = false;
  double kkt_gap = 0.0;  // max violating-pair gap at exit
};

/// Trained binary soft-margin SVM. Support vectors are stored after
/// feature scaling; inputs to the prediction functions are raw.
struct SvmModel {
  FeatureKind feature_kind = FeatureKind::Haralick28;
  KernelSpec kernel;
  double C = 1.0;
  MinMaxScaler scaler;  // empty when scaling was disabled
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> alphas;
  std::vector<int> labels;
  double bias = 0.0;
  double w_norm_sq = 0.0;
  SvmDiagnostics diagnostics;

  std::size_t dimension() const noexcept {
    return support_vectors.empty() ? 0 : support_vectors.front().size();
  }
};

/// SMO on the soft-margin dual. Never throws for non-convergence: check
/// `diagnostics.converged`.
SvmModel train(std::span<const LabeledSample> data, const KernelSpec& spec,
               const SvmTrainOptions& options = {});

/// f(x) = sum_i alpha_i y_i K(x_i, x) + b.
double decision_value(const SvmModel& m, const FeatureVector& x);

/// Signed feature-space distance f(x) / ||w||, ||w||^2 = sum alpha_i alpha_j y_i y_j K_ij.
double score(const SvmModel& m, const FeatureVector& x);

/// sign(f(x)); f(x) == 0 predicts +1.
int predict(const SvmModel& m, const FeatureVector& x);

}  // namespace strokepipe
