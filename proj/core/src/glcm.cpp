#include "strokepipe/glcm.hpp"

#include <cstdlib>

#include "strokepipe/error.hpp"

namespace strokepipe {

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::Horizontal: return "0deg";
    case Direction::Vertical: return "90deg";
    case Direction::DiagRight: return "45deg";
    case Direction::DiagLeft: return "135deg";
  }
  return "?";
}

Glcm compute_glcm(const GrayImage& img, Direction dir, int distance) {
  if (distance < 1) throw Error(ErrorCode::InvalidArgument, "co-occurrence distance must be >= 1");
  const auto [du, dv] = unit_offset(dir);
  const int dr = du * distance;
  const int dc = dv * distance;
  const int n = img.levels();

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  std::size_t pairs = 0;
  for (int r = 0; r < img.height(); ++r) {
    const int r2 = r + dr;
    if (r2 < 0 || r2 >= img.height()) continue;
    for (int c = 0; c < img.width(); ++c) {
      const int c2 = c + dc;
      if (c2 < 0 || c2 >= img.width()) continue;
      if (!img.valid(r, c) || !img.valid(r2, c2)) continue;
      const int i = img.at(r, c);
      const int j = img.at(r2, c2);
      counts(i, j) += 1.0;
      counts(j, i) += 1.0;
      pairs += 2;
    }
  }
  if (pairs == 0)
    throw Error(ErrorCode::EmptyCooccurrence,
                "empty co-occurrence: no valid pixel pair along " + std::string(to_string(dir)));

  return Glcm{n, counts / static_cast<double>(pairs), pairs};
}

Marginals marginals(const Glcm& g) {
  const int n = g.n_levels;
  Marginals m;
  m.p_x = g.p.rowwise().sum();
  m.p_y = g.p.colwise().sum().transpose();
  m.p_sum = Eigen::VectorXd::Zero(2 * n - 1);
  m.p_diff = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m.p_sum(i + j) += g.p(i, j);
      m.p_diff(std::abs(i - j)) += g.p(i, j);
    }
  }
  return m;
}

}  // namespace strokepipe
