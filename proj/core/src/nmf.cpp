#include "strokepipe/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "strokepipe/error.hpp"
#include "strokepipe/rng.hpp"

namespace strokepipe {

namespace {

constexpr double kDenominatorFloor = 1e-12;

Eigen::MatrixXd floored(const Eigen::MatrixXd& m) { return m.cwiseMax(kDenominatorFloor); }

Eigen::MatrixXd random_positive(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform_open0();
  return m;
}

void validate(const Eigen::MatrixXd& a, const NmfConfig& cfg) {
  if (cfg.k < 1) throw Error(ErrorCode::InvalidArgument, "NMF rank k must be >= 1");
  if (!(cfg.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "NMF tol must be positive");
  if (cfg.max_iters < 0) throw Error(ErrorCode::InvalidArgument, "NMF max_iters must be >= 0");
  if (a.size() == 0) throw Error(ErrorCode::InvalidArgument, "NMF input matrix is empty");
  if (!a.allFinite()) throw Error(ErrorCode::NonFinite, "NMF input has non-finite entries");
  if ((a.array() < 0.0).any()) throw Error(ErrorCode::NegativeInput, "NMF input has a negative entry");
  if (cfg.k > std::min(a.rows(), a.cols()))
    throw Error(ErrorCode::InvalidArgument,
                "NMF rank k=" + std::to_string(cfg.k) + " exceeds min(n, m)");
  if (cfg.weight) {
    if (cfg.weight->rows() != a.rows() || cfg.weight->cols() != a.cols())
      throw Error(ErrorCode::DimensionMismatch, "NMF weight shape differs from data shape");
    if ((cfg.weight->array() < 0.0).any() || !cfg.weight->allFinite())
      throw Error(ErrorCode::NegativeInput, "NMF weight has a negative or non-finite entry");
  }
}

}  // namespace

double nmf_objective(const Eigen::MatrixXd& a, const Eigen::MatrixXd& v, const Eigen::MatrixXd& h,
                     const std::optional<Eigen::MatrixXd>& weight) {
  const Eigen::MatrixXd residual = a - v * h;
  if (weight) return (weight->array() * residual.array()).square().sum();
  return residual.squaredNorm();
}

NmfFit factorize(const Eigen::MatrixXd& a, const NmfConfig& cfg) {
  validate(a, cfg);
  Rng rng(cfg.seed);
  Eigen::MatrixXd v = random_positive(rng, a.rows(), cfg.k);
  Eigen::MatrixXd h = random_positive(rng, cfg.k, a.cols());
  return factorize(a, cfg, std::move(v), std::move(h));
}

NmfFit factorize(const Eigen::MatrixXd& a, const NmfConfig& cfg, Eigen::MatrixXd v,
                 Eigen::MatrixXd h) {
  validate(a, cfg);
  if (v.rows() != a.rows() || v.cols() != cfg.k || h.rows() != cfg.k || h.cols() != a.cols())
    throw Error(ErrorCode::DimensionMismatch, "initial NMF factors have the wrong shape");
  if ((v.array() < 0.0).any() || (h.array() < 0.0).any())
    throw Error(ErrorCode::NegativeInput, "initial NMF factors must be non-negative");

  // The weighted objective ||W.(A - VH)||^2 has elementwise weights W^2.
  std::optional<Eigen::MatrixXd> w2;
  Eigen::MatrixXd wa;
  if (cfg.weight) {
    w2 = cfg.weight->cwiseProduct(*cfg.weight);
    wa = w2->cwiseProduct(a);
  }

  NmfFit fit;
  auto& trace = fit.model.objective_trace;
  trace.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);
  trace.push_back(nmf_objective(a, v, h, cfg.weight));

  for (int it = 0; it < cfg.max_iters; ++it) {
    if (w2) {
      h.array() *= (v.transpose() * wa).array() /
                   floored(v.transpose() * w2->cwiseProduct(v * h)).array();
      v.array() *= (wa * h.transpose()).array() /
                   floored(w2->cwiseProduct(v * h) * h.transpose()).array();
    } else {
      const Eigen::MatrixXd vtv = v.transpose() * v;
      h.array() *= (v.transpose() * a).array() / floored(vtv * h).array();
      const Eigen::MatrixXd hht = h * h.transpose();
      v.array() *= (a * h.transpose()).array() / floored(v * hht).array();
    }
    const double obj = nmf_objective(a, v, h, cfg.weight);
    const double prev = trace.back();
    trace.push_back(obj);
    fit.iterations = it + 1;
    if (std::abs(prev - obj) <= cfg.tol * std::max(prev, kDenominatorFloor)) {
      fit.converged = true;
      break;
    }
  }

  fit.model.basis = std::move(v);
  fit.model.k = cfg.k;
  fit.coefficients = std::move(h);
  return fit;
}

Eigen::VectorXd project(const NmfModel& model, const Eigen::VectorXd& a, const ProjectConfig& cfg) {
  const Eigen::MatrixXd& v = model.basis;
  if (a.size() != v.rows())
    throw Error(ErrorCode::DimensionMismatch, "projection input has length " + std::to_string(a.size()) +
                                                  ", basis expects " + std::to_string(v.rows()));
  if (!a.allFinite()) throw Error(ErrorCode::NonFinite, "projection input has non-finite entries");
  if ((a.array() < 0.0).any()) throw Error(ErrorCode::NegativeInput, "projection input has a negative entry");

  Rng rng(cfg.seed);
  Eigen::VectorXd h(v.cols());
  for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = rng.uniform_open0();

  const Eigen::MatrixXd vtv = v.transpose() * v;
  const Eigen::VectorXd vta = v.transpose() * a;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd prev = h;
    h.array() *= vta.array() / (vtv * h).cwiseMax(kDenominatorFloor).array();
    const double step = (h - prev).lpNorm<Eigen::Infinity>();
    if (step <= cfg.tol * std::max(h.lpNorm<Eigen::Infinity>(), kDenominatorFloor)) break;
  }
  return h;
}

Eigen::MatrixXd build_data_matrix(std::span<const GrayImage> images) {
  if (images.empty()) throw Error(ErrorCode::InvalidArgument, "no images to build an NMF data matrix");
  const GrayImage& first = images.front();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(first.size()), static_cast<Eigen::Index>(images.size()));
  for (std::size_t j = 0; j < images.size(); ++j) {
    const GrayImage& img = images[j];
    if (img.width() != first.width() || img.height() != first.height())
      throw Error(ErrorCode::DimensionMismatch, "NMF images have mixed dimensions");
    if (img.has_mask())
      throw Error(ErrorCode::InvalidArgument, "NMF does not accept masked images");
    const double scale = 1.0 / (img.levels() - 1);
    const auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = px[i] * scale;
  }
  return a;
}

GrayImage column_to_image(const Eigen::VectorXd& column, int width, int height, int levels) {
  if (column.size() != static_cast<Eigen::Index>(width) * height)
    throw Error(ErrorCode::DimensionMismatch, "column length does not match image dimensions");
  std::vector<std::uint16_t> px(static_cast<std::size_t>(column.size()));
  for (Eigen::Index i = 0; i < column.size(); ++i)
    px[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(std::lround(column(i) * (levels - 1)));
  return GrayImage(width, height, levels, std::move(px));
}

FeatureVector to_feature_vector(const Eigen::VectorXd& coefficients, std::string source_id) {
  FeatureVector fv;
  fv.kind = FeatureKind::Nmf14;
  fv.source_id = std::move(source_id);
  fv.values.assign(coefficients.data(), coefficients.data() + coefficients.size());
  return fv;
}

}  // namespace strokepipe
