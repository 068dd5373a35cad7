#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library code paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "strokepipe/image.hpp"
#include "strokepipe/rng.hpp"

namespace oracle {

/// Random image with `levels` gray levels and roughly `mask_rate` of pixels
/// masked out.
inline strokepipe::GrayImage random_image(strokepipe::Rng& rng, int w, int h, int levels,
                                          double mask_rate = 0.0) {
  std::vector<std::uint16_t> px(static_cast<std::size_t>(w * h));
  for (auto& v : px) v = static_cast<std::uint16_t>(rng.below(static_cast<std::uint64_t>(levels)));
  if (mask_rate <= 0.0) return strokepipe::GrayImage(w, h, levels, std::move(px));
  std::vector<bool> mask(px.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = !rng.bernoulli(mask_rate);
  return strokepipe::GrayImage(w, h, levels, std::move(px), std::move(mask));
}

/// Co-occurrence counts by comparing every pixel with every other pixel and
/// keeping pairs whose displacement is +offset or -offset.
inline Eigen::MatrixXd naive_glcm_counts(const strokepipe::GrayImage& img, int drow, int dcol) {
  const int n = img.levels();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (int r1 = 0; r1 < img.height(); ++r1)
    for (int c1 = 0; c1 < img.width(); ++c1)
      for (int r2 = 0; r2 < img.height(); ++r2)
        for (int c2 = 0; c2 < img.width(); ++c2) {
          const int dr = r2 - r1, dc = c2 - c1;
          const bool adjacent = (dr == drow && dc == dcol) || (dr == -drow && dc == -dcol);
          if (!adjacent || !img.valid(r1, c1) || !img.valid(r2, c2)) continue;
          counts(img.at(r1, c1), img.at(r2, c2)) += 1.0;
        }
  return counts;
}

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// All 14 texture statistics by direct summation over the full matrix,
/// 1-based gray-level indices, natural logs.
inline std::array<double, 14> brute_haralick(const Eigen::MatrixXd& p) {
  const int n = static_cast<int>(p.rows());
  std::vector<double> px(n, 0.0), py(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      px[i] += p(i, j);
      py[j] += p(i, j);
    }
  double mux = 0, muy = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      mux += (i + 1) * p(i, j);
      muy += (j + 1) * p(i, j);
    }
  double vx = 0, vy = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      vx += (i + 1 - mux) * (i + 1 - mux) * p(i, j);
      vy += (j + 1 - muy) * (j + 1 - muy) * p(i, j);
    }

  std::array<double, 14> f{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      f[0] += p(i, j) * p(i, j);
      f[1] += (i - j) * (i - j) * p(i, j);
      f[4] += p(i, j) / (1.0 + (i - j) * (i - j));
      f[8] -= xlogx(p(i, j));
    }
  double cross = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cross += (i + 1) * (j + 1) * p(i, j);
  f[2] = (vx > 1e-14 && vy > 1e-14) ? (cross - mux * muy) / std::sqrt(vx * vy) : 0.0;
  f[3] = vx;

  // Sum distribution over k = 2..2n (1-based).
  std::vector<double> psum(2 * n + 1, 0.0), pdiff(n, 0.0);
  for (int k = 2; k <= 2 * n; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j)
        if (i + j == k) psum[k] += p(i - 1, j - 1);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (std::abs(i - j) == k) pdiff[k] += p(i, j);

  for (int k = 2; k <= 2 * n; ++k) f[5] += k * psum[k];
  for (int k = 2; k <= 2 * n; ++k) f[7] -= xlogx(psum[k]);
  for (int k = 2; k <= 2 * n; ++k) f[6] += (k - f[7]) * (k - f[7]) * psum[k];
  double dmean = 0;
  for (int k = 0; k < n; ++k) dmean += k * pdiff[k];
  for (int k = 0; k < n; ++k) f[9] += (k - dmean) * (k - dmean) * pdiff[k];
  for (int k = 0; k < n; ++k) f[10] -= xlogx(pdiff[k]);

  double hx = 0, hy = 0, hxy1 = 0, hxy2 = 0;
  for (int i = 0; i < n; ++i) {
    hx -= xlogx(px[i]);
    hy -= xlogx(py[i]);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (p(i, j) > 0) hxy1 -= p(i, j) * std::log(px[i] * py[j]);
      hxy2 -= xlogx(px[i] * py[j]);
    }
  const double hxy = f[8];
  f[11] = std::max(hx, hy) > 0 ? (hxy - hxy1) / std::max(hx, hy) : 0.0;
  f[12] = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - hxy))));

  // Q from its definition over levels with mass, eigenvalues from the
  // general (non-symmetric) solver.
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (px[i] > 0) keep.push_back(i);
  if (keep.size() >= 2) {
    const int m = static_cast<int>(keep.size());
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int k = 0; k < n; ++k)
          if (py[k] > 0) q(a, b) += p(keep[a], k) * p(keep[b], k) / (px[keep[a]] * py[k]);
    Eigen::EigenSolver<Eigen::MatrixXd> es(q, false);
    std::vector<double> ev;
    for (int a = 0; a < m; ++a) ev.push_back(es.eigenvalues()(a).real());
    std::sort(ev.begin(), ev.end(), std::greater<>());
    f[13] = std::sqrt(std::clamp(ev[1], 0.0, 1.0));
  }
  return f;
}

/// Dual objective sum(a) - 0.5 sum_ij a_i a_j y_i y_j K_ij.
inline double dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y, const Eigen::MatrixXd& k) {
  const Eigen::VectorXd ya = alpha.cwiseProduct(y);
  return alpha.sum() - 0.5 * ya.dot(k * ya);
}

/// Maximizes the SVM dual over a grid on [0, C]^n with y'a = 0 enforced by
/// solving for the last multiplier. A coarse pass is followed by a fine
/// pass around the best coarse point. Supports n = 2..4.
inline double grid_dual_max(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c) {
  const int n = static_cast<int>(y.size());
  const int free = n - 1;
  double best = -1e300;
  std::vector<double> best_pt(free, 0.0);

  auto evaluate = [&](const std::vector<double>& pt) {
    Eigen::VectorXd a(n);
    double s = 0;
    for (int i = 0; i < free; ++i) {
      a(i) = pt[i];
      s += y(i) * pt[i];
    }
    a(n - 1) = -y(n - 1) * s;
    if (a(n - 1) < -1e-12 || a(n - 1) > c + 1e-12) return;
    a(n - 1) = std::clamp(a(n - 1), 0.0, c);
    const double d = dual_objective(a, y, k);
    if (d > best) {
      best = d;
      best_pt = pt;
    }
  };

  auto sweep = [&](std::vector<double> lo, std::vector<double> hi, int steps) {
    std::vector<int> idx(free, 0);
    std::vector<double> pt(free);
    while (true) {
      for (int i = 0; i < free; ++i) pt[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / steps;
      evaluate(pt);
      int d = 0;
      while (d < free && ++idx[d] > steps) idx[d++] = 0;
      if (d == free) break;
    }
  };

  const int coarse = n == 2 ? 20000 : (n == 3 ? 1000 : 100);
  sweep(std::vector<double>(free, 0.0), std::vector<double>(free, c), coarse);
  const double h = c / coarse;
  std::vector<double> lo(free), hi(free);
  for (int i = 0; i < free; ++i) {
    lo[i] = std::max(0.0, best_pt[i] - 2 * h);
    hi[i] = std::min(c, best_pt[i] + 2 * h);
  }
  sweep(lo, hi, n == 2 ? 400 : 80);
  return best;
}

}  // namespace oracle
