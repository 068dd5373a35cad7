#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

#include "strokepipe/image.hpp"

namespace strokepipe {

enum class Direction { Horizontal, Vertical, DiagRight, DiagLeft };

inline constexpr std::array<Direction, 4> kAllDirections = {
    Direction::Horizontal, Direction::Vertical, Direction::DiagRight, Direction::DiagLeft};

struct Offset {
  int drow;
  int dcol;
};

/// Unit displacement for 0, 90, 45 and 135 degrees. Rows grow downward, so
/// 45 degrees points up and to the right.
constexpr Offset unit_offset(Direction d) noexcept {
  switch (d) {
    case Direction::Horizontal: return {0, 1};
    case Direction::Vertical: return {1, 0};
    case Direction::DiagRight: return {-1, 1};
    case Direction::DiagLeft: return {-1, -1};
  }
  return {0, 0};
}

std::string_view to_string(Direction d) noexcept;

/// Normalized symmetric co-occurrence matrix.
struct Glcm {
  int n_levels = 0;
  Eigen::MatrixXd p;
  std::size_t pair_count = 0;
};

/// Counts every pair of valid pixels separated by `distance` steps along
/// `dir`, in both orders, and divides by the number of ordered pairs.
/// A pair touching a masked pixel is skipped entirely.
/// Throws Error(EmptyCooccurrence) when no valid pair exists.
Glcm compute_glcm(const GrayImage& img, Direction dir, int distance = 1);

struct Marginals {
  Eigen::VectorXd p_x;
  Eigen::VectorXd p_y;
  // p_sum(k) is the mass on i + j = k with 0-based levels, k in [0, 2N-2].
  // With the 1-based indices used by the texture formulas this is k + 2.
  Eigen::VectorXd p_sum;
  // p_diff(k) is the mass on |i - j| = k, k in [0, N-1].
  Eigen::VectorXd p_diff;
};

Marginals marginals(const Glcm& g);

}  // namespace strokepipe
