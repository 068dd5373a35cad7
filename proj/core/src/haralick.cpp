#include "strokepipe/haralick.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "strokepipe/error.hpp"

namespace strokepipe {

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

double entropy_of(const Eigen::VectorXd& v) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) h -= plogp(v(i));
  return h;
}

constexpr double kVarianceFloor = 1e-14;

// Second largest eigenvalue of Q(i,j) = sum_k p(i,k) p(j,k) / (p_x(i) p_y(k)).
// Q = Dx^-1 P Dy^-1 P^T is similar to the symmetric PSD matrix
// S = Dx^-1/2 P Dy^-1 P^T Dx^-1/2, whose spectrum is cheaper and more stable
// to compute. Returns nullopt when fewer than two levels carry mass.
std::optional<double> second_eigenvalue(const Glcm& g, const Marginals& m) {
  std::vector<int> rows;
  std::vector<int> cols;
  for (int i = 0; i < g.n_levels; ++i) {
    if (m.p_x(i) > 0.0) rows.push_back(i);
    if (m.p_y(i) > 0.0) cols.push_back(i);
  }
  if (rows.size() < 2) return std::nullopt;

  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd b(nr, nc);
  for (Eigen::Index a = 0; a < nr; ++a)
    for (Eigen::Index c = 0; c < nc; ++c)
      b(a, c) = g.p(rows[a], cols[c]) / std::sqrt(m.p_x(rows[a]) * m.p_y(cols[c]));
  const Eigen::MatrixXd s = b * b.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(nr - 2);
}

}  // namespace

std::array<double, kHaralickCount> HaralickStats::values() const noexcept {
  return {asm_,         contrast,    correlation,         sum_of_squares,     idm,
          sum_average,  sum_variance, sum_entropy,        entropy,            difference_variance,
          difference_entropy, imc1,  imc2,                max_corr_coeff};
}

HaralickStats compute_stats(const Glcm& g) {
  const int n = g.n_levels;
  const Marginals m = marginals(g);
  HaralickStats s;

  for (int i = 0; i < n; ++i) {
    s.mu_x += (i + 1) * m.p_x(i);
    s.mu_y += (i + 1) * m.p_y(i);
  }
  double var_x = 0.0, var_y = 0.0;
  for (int i = 0; i < n; ++i) {
    var_x += (i + 1 - s.mu_x) * (i + 1 - s.mu_x) * m.p_x(i);
    var_y += (i + 1 - s.mu_y) * (i + 1 - s.mu_y) * m.p_y(i);
  }
  s.sigma_x = std::sqrt(var_x);
  s.sigma_y = std::sqrt(var_y);

  double ij_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = g.p(i, j);
      if (p == 0.0) continue;
      s.asm_ += p * p;
      s.idm += p / (1.0 + (i - j) * (i - j));
      ij_sum += (i + 1.0) * (j + 1.0) * p;
      s.entropy -= plogp(p);
      s.hxy1 -= p * std::log(m.p_x(i) * m.p_y(j));
    }
  }

  for (int k = 0; k < n; ++k) s.contrast += double(k) * k * m.p_diff(k);

  if (var_x <= kVarianceFloor || var_y <= kVarianceFloor) {
    s.correlation = 0.0;
    s.correlation_degenerate = true;
  } else {
    s.correlation = (ij_sum - s.mu_x * s.mu_y) / (s.sigma_x * s.sigma_y);
  }
  s.sum_of_squares = var_x;

  for (Eigen::Index k = 0; k < m.p_sum.size(); ++k) s.sum_average += double(k + 2) * m.p_sum(k);
  s.sum_entropy = entropy_of(m.p_sum);
  for (Eigen::Index k = 0; k < m.p_sum.size(); ++k) {
    const double d = double(k + 2) - s.sum_entropy;
    s.sum_variance += d * d * m.p_sum(k);
  }

  double diff_mean = 0.0;
  for (int k = 0; k < n; ++k) diff_mean += k * m.p_diff(k);
  for (int k = 0; k < n; ++k) s.difference_variance += (k - diff_mean) * (k - diff_mean) * m.p_diff(k);
  s.difference_entropy = entropy_of(m.p_diff);

  s.hx = entropy_of(m.p_x);
  s.hy = entropy_of(m.p_y);
  s.hxy = s.entropy;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s.hxy2 -= plogp(m.p_x(i) * m.p_y(j));

  const double hmax = std::max(s.hx, s.hy);
  if (hmax <= 0.0) {
    s.imc1 = 0.0;
    s.imc1_degenerate = true;
  } else {
    s.imc1 = (s.hxy - s.hxy1) / hmax;
  }
  s.imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (s.hxy2 - s.hxy))));

  if (const auto lambda = second_eigenvalue(g, m)) {
    s.max_corr_coeff = std::sqrt(std::clamp(*lambda, 0.0, 1.0));
  } else {
    s.max_corr_coeff = 0.0;
    s.max_corr_degenerate = true;
  }
  return s;
}

std::array<HaralickStats, 4> directional_stats(const GrayImage& img, int distance) {
  std::array<HaralickStats, 4> out;
  for (std::size_t d = 0; d < kAllDirections.size(); ++d)
    out[d] = compute_stats(compute_glcm(img, kAllDirections[d], distance));
  return out;
}

FeatureVector feature_vector_28(const GrayImage& img, std::string source_id) {
  const auto per_dir = directional_stats(img);
  FeatureVector fv;
  fv.kind = FeatureKind::Haralick28;
  fv.source_id = std::move(source_id);
  fv.values.assign(kHaralickVectorLength, 0.0);
  for (int f = 0; f < kHaralickCount; ++f) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    for (const auto& s : per_dir) {
      const double v = s.values()[f];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    fv.values[f] = sum / 4.0;
    fv.values[kHaralickCount + f] = hi - lo;
  }
  require_finite(fv);
  return fv;
}

}  // namespace strokepipe
