#include "strokepipe/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "strokepipe/error.hpp"

namespace strokepipe {

namespace {

constexpr double kTau = 1e-12;

std::vector<double> scaled(const SvmModel& m, const FeatureVector& x) {
  if (x.kind != m.feature_kind)
    throw Error(ErrorCode::FeatureKindMismatch,
                "feature kind mismatch: model expects " + std::string(to_string(m.feature_kind)) +
                    ", got " + std::string(to_string(x.kind)));
  if (x.size() != m.dimension() || x.size() == 0)
    throw Error(ErrorCode::DimensionMismatch, "feature dimension " + std::to_string(x.size()) +
                                                  " does not match model dimension " +
                                                  std::to_string(m.dimension()));
  require_finite(x);
  return m.scaler.empty() ? x.values : m.scaler.apply(x.values);
}

}  // namespace

KernelSpec KernelSpec::rbf(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "RBF sigma must be positive");
  return {Kind::Rbf, sigma, 1.0, 0.0};
}

std::string_view to_string(KernelSpec::Kind kind) noexcept {
  switch (kind) {
    case KernelSpec::Kind::Linear: return "linear";
    case KernelSpec::Kind::Rbf: return "rbf";
    case KernelSpec::Kind::Mlp: return "mlp";
  }
  return "?";
}

double kernel_eval(const KernelSpec& spec, std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error(ErrorCode::DimensionMismatch, "kernel arguments have different lengths");
  switch (spec.kind) {
    case KernelSpec::Kind::Linear: {
      double dot = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
      return dot;
    }
    case KernelSpec::Kind::Rbf: {
      if (!(spec.sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "RBF sigma must be positive");
      double d2 = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) d2 += (u[i] - v[i]) * (u[i] - v[i]);
      return std::exp(-d2 / (2.0 * spec.sigma * spec.sigma));
    }
    case KernelSpec::Kind::Mlp: {
      double dot = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
      return std::tanh(spec.scale * dot + spec.offset);
    }
  }
  return 0.0;
}

MinMaxScaler MinMaxScaler::fit(std::span<const FeatureVector> data) {
  MinMaxScaler s;
  if (data.empty()) return s;
  const std::size_t d = data.front().size();
  s.lo.assign(d, std::numeric_limits<double>::infinity());
  s.hi.assign(d, -std::numeric_limits<double>::infinity());
  for (const auto& x : data) {
    if (x.size() != d) throw Error(ErrorCode::DimensionMismatch, "training vectors differ in length");
    for (std::size_t i = 0; i < d; ++i) {
      s.lo[i] = std::min(s.lo[i], x.values[i]);
      s.hi[i] = std::max(s.hi[i], x.values[i]);
    }
  }
  return s;
}

std::vector<double> MinMaxScaler::apply(std::span<const double> x) const {
  if (x.size() != lo.size()) throw Error(ErrorCode::DimensionMismatch, "scaler dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double span = hi[i] - lo[i];
    out[i] = span > 0.0 ? (x[i] - lo[i]) / span : 0.0;
  }
  return out;
}

SvmModel train(std::span<const LabeledSample> data, const KernelSpec& spec,
               const SvmTrainOptions& options) {
  if (data.size() < 2) throw Error(ErrorCode::InvalidArgument, "SVM training needs at least 2 samples");
  if (!(options.C > 0.0)) throw Error(ErrorCode::InvalidArgument, "SVM C must be positive");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "SVM tol must be positive");
  if (spec.kind == KernelSpec::Kind::Rbf && !(spec.sigma > 0.0))
    throw Error(ErrorCode::InvalidArgument, "RBF sigma must be positive");

  const FeatureKind kind = data.front().x.kind;
  const std::size_t dim = data.front().x.size();
  bool has_pos = false, has_neg = false;
  for (const auto& s : data) {
    if (s.label != 1 && s.label != -1) throw Error(ErrorCode::InvalidArgument, "SVM labels must be +1 or -1");
    if (s.x.kind != kind) throw Error(ErrorCode::FeatureKindMismatch, "training set mixes feature kinds");
    if (s.x.size() != dim || dim == 0)
      throw Error(ErrorCode::DimensionMismatch, "training vectors differ in length");
    require_finite(s.x);
    (s.label > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClass, "single-class training data");

  const auto n = static_cast<Eigen::Index>(data.size());
  const double c = options.C;

  SvmModel model;
  model.feature_kind = kind;
  model.kernel = spec;
  model.C = c;

  std::vector<std::vector<double>> xs;
  xs.reserve(data.size());
  if (options.scale_features) {
    std::vector<FeatureVector> raw;
    raw.reserve(data.size());
    for (const auto& s : data) raw.push_back(s.x);
    model.scaler = MinMaxScaler::fit(raw);
    for (const auto& s : data) xs.push_back(model.scaler.apply(s.x.values));
  } else {
    for (const auto& s : data) xs.push_back(s.x.values);
  }

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = data[static_cast<std::size_t>(i)].label;

  Eigen::MatrixXd q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      q(i, j) = q(j, i) = y(i) * y(j) * kernel_eval(spec, xs[i], xs[j]);

  // Minimize 0.5 a'Qa - e'a subject to y'a = 0, 0 <= a <= C.
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);

  auto in_up = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) < c) || (y(t) < 0 && alpha(t) > 0); };
  auto in_low = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < c); };

  const long max_iter = options.max_passes * static_cast<long>(n);
  long iter = 0;
  double gap = 0.0;
  bool converged = false;
  while (iter < max_iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -y(t) * grad(t) >= gmax) {
        gmax = -y(t) * grad(t);
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      gmax2 = std::max(gmax2, y(t) * grad(t));
      const double b = gmax + y(t) * grad(t);
      if (i < 0 || b <= 0.0) continue;
      double a = q(i, i) + q(t, t) - 2.0 * y(i) * y(t) * q(i, t);
      if (a <= 0.0) a = kTau;
      if (-(b * b) / a <= best) {
        best = -(b * b) / a;
        j = t;
      }
    }
    gap = gmax + gmax2;
    if (i < 0 || j < 0 || gap < options.tol) {
      converged = true;
      break;
    }
    ++iter;

    // Two-variable subproblem, clipped to the box.
    const double old_ai = alpha(i), old_aj = alpha(j);
    if (y(i) != y(j)) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = -diff; }
      }
      if (diff > 0) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = c - diff; }
      } else {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = c + diff; }
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = sum - c; }
      } else {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = sum; }
      }
      if (sum > c) {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = sum - c; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = sum; }
      }
    }
    const double d_ai = alpha(i) - old_ai;
    const double d_aj = alpha(j) - old_aj;
    grad += q.col(i) * d_ai + q.col(j) * d_aj;
  }

  // Offset: average y_t * grad_t over free multipliers, or the midpoint of
  // the feasible interval when none is free.
  double rho = 0.0;
  int n_free = 0;
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (alpha(t) >= c) {
      if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0) {
      if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;

  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha(t) <= 0.0) continue;
    model.support_vectors.push_back(xs[static_cast<std::size_t>(t)]);
    model.alphas.push_back(alpha(t));
    model.labels.push_back(static_cast<int>(y(t)));
  }
  model.bias = -rho;
  model.w_norm_sq = alpha.dot(q * alpha);
  model.diagnostics = {iter, converged, gap};
  return model;
}

double decision_value(const SvmModel& m, const FeatureVector& x) {
  const std::vector<double> z = scaled(m, x);
  double f = m.bias;
  for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
    f += m.alphas[i] * m.labels[i] * kernel_eval(m.kernel, m.support_vectors[i], z);
  return f;
}

double score(const SvmModel& m, const FeatureVector& x) {
  if (!(m.w_norm_sq > 0.0))
    throw Error(ErrorCode::DegenerateModel,
                "degenerate SVM model: ||w||^2 = " + std::to_string(m.w_norm_sq));
  return decision_value(m, x) / std::sqrt(m.w_norm_sq);
}

int predict(const SvmModel& m, const FeatureVector& x) { return decision_value(m, x) >= 0.0 ? 1 : -1; }

}  // namespace strokepipe
