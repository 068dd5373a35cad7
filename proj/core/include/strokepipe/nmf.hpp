#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "strokepipe/features.hpp"
#include "strokepipe/image.hpp"

namespace strokepipe {

struct NmfConfig {
  int k = 14;
  int max_iters = 500;
  double tol = 1e-5;  // relative objective change
  std::uint64_t seed = 42;
  // Per-entry confidence weights; absent means the plain Frobenius objective.
  std::optional<Eigen::MatrixXd> weight;
};

/// Learned non-negative basis. Column c of `basis` is one basis image.
struct NmfModel {
  Eigen::MatrixXd basis;  // n_pixels x k
  int k = 0;
  int image_width = 0;
  int image_height = 0;
  std::vector<double> objective_trace;  // [initial, after iter 1, ...]
};

struct NmfFit {
  NmfModel model;
  Eigen::MatrixXd coefficients;  // k x m
  int iterations = 0;
  bool converged = false;
};

/// Multiplicative-update NMF, A ~= V H with V, H >= 0, minimizing
/// ||W .* (A - V H)||_F^2 (W = 1 when no weight is configured).
NmfFit factorize(const Eigen::MatrixXd& a, const NmfConfig& cfg);

/// Same, starting from caller-provided factors instead of seeded ones.
NmfFit factorize(const Eigen::MatrixXd& a, const NmfConfig& cfg, Eigen::MatrixXd v0,
                 Eigen::MatrixXd h0);

/// Objective ||W .* (A - V H)||_F^2 for the given factors.
double nmf_objective(const Eigen::MatrixXd& a, const Eigen::MatrixXd& v, const Eigen::MatrixXd& h,
                     const std::optional<Eigen::MatrixXd>& weight = std::nullopt);

struct ProjectConfig {
  int max_iters = 5000;
  double tol = 1e-12;  // relative max-norm step of h
  std::uint64_t seed = 42;
};

/// Non-negative code h minimizing ||a - V h||^2 with V fixed.
Eigen::VectorXd project(const NmfModel& model, const Eigen::VectorXd& a,
                        const ProjectConfig& cfg = {});

/// Column j is image j flattened row-major and scaled to [0, 1].
/// Images must share dimensions and carry no mask.
Eigen::MatrixXd build_data_matrix(std::span<const GrayImage> images);

/// Inverse of one build_data_matrix column.
GrayImage column_to_image(const Eigen::VectorXd& column, int width, int height, int levels);

FeatureVector to_feature_vector(const Eigen::VectorXd& coefficients, std::string source_id = {});

}  // namespace strokepipe
