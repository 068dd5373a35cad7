#pragma once

#include <array>

#include "strokepipe/features.hpp"
#include "strokepipe/glcm.hpp"
#include "strokepipe/image.hpp"

namespace strokepipe {

inline constexpr int kHaralickCount = 14;
inline constexpr int kHaralickVectorLength = 2 * kHaralickCount;

/// The 14 texture statistics of one co-occurrence matrix plus the
/// intermediates they are built from.
///
/// Conventions: natural logarithms, 0 * log 0 = 0, and gray levels enter
/// the formulas as 1-based indices (so sum average runs over 2..2N).
struct HaralickStats {
  double asm_ = 0;                   // f1  angular second moment
  double contrast = 0;               // f2
  double correlation = 0;            // f3
  double sum_of_squares = 0;         // f4  variance
  double idm = 0;                    // f5  inverse difference moment
  double sum_average = 0;            // f6
  double sum_variance = 0;           // f7  centred on f8
  double sum_entropy = 0;            // f8
  double entropy = 0;                // f9
  double difference_variance = 0;    // f10
  double difference_entropy = 0;     // f11
  double imc1 = 0;                   // f12
  double imc2 = 0;                   // f13
  double max_corr_coeff = 0;         // f14

  double mu_x = 0, mu_y = 0, sigma_x = 0, sigma_y = 0;
  double hx = 0, hy = 0, hxy = 0, hxy1 = 0, hxy2 = 0;

  // Set when the statistic was undefined and reported as 0.
  bool correlation_degenerate = false;
  bool imc1_degenerate = false;
  bool max_corr_degenerate = false;

  std::array<double, kHaralickCount> values() const noexcept;
};

HaralickStats compute_stats(const Glcm& g);

/// Per-direction statistics for the four unit-distance directions, in
/// kAllDirections order.
std::array<HaralickStats, 4> directional_stats(const GrayImage& img, int distance = 1);

/// [14 means | 14 ranges] over the four directions.
FeatureVector feature_vector_28(const GrayImage& img, std::string source_id = {});

}  // namespace strokepipe
