#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "strokepipe/ann.hpp"
#include "strokepipe/dataset.hpp"
#include "strokepipe/image.hpp"

namespace strokepipe {

/// Stationary texture: uniform noise smoothed by a separable exponential
/// kernel exp(-|d| / L). `elongation` stretches L along `orientation`.
/// These are stand-in textures with a tunable co-occurrence signature, not
/// anatomical phantoms.
struct TextureParams {
  enum class Orientation { Horizontal, Vertical };

  double correlation_length = 1.0;  // pixels
  double contrast = 40.0;           // gray-level std around mid-gray
  double elongation = 1.0;
  Orientation orientation = Orientation::Horizontal;
  double jitter = 0.25;  // per-image relative spread of correlation_length

  friend bool operator==(const TextureParams&, const TextureParams&) = default;
};

/// Disk-shaped bright lesions painted into stroke images and recorded in
/// their masks.
struct LesionParams {
  int min_radius = 3;
  int max_radius = 6;
  int count = 1;
  int intensity = 235;
};

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

struct RiskClassParams {
  Gaussian systolic_bp;
  Gaussian cholesterol;
  Gaussian age;
  double p_atrial_fibrillation = 0.0;
  double p_smoker = 0.0;
  double p_diabetic = 0.0;
  double p_exercises = 0.0;
  double p_obese = 0.0;
  double p_family_history = 0.0;
};

/// Index 0 describes the normal class, index 1 the stroke class.
struct SynthSpec {
  int n_per_class = 15;
  int width = 64;
  int height = 64;
  std::array<TextureParams, 2> texture;
  std::optional<LesionParams> lesion;
  std::array<RiskClassParams, 2> risk;
  std::uint64_t seed = 42;

  static SynthSpec defaults();
};

/// Throws InvalidArgument for inconsistent specs (identical classes,
/// lesions that cannot fit, non-positive sizes).
void validate(const SynthSpec& spec);

/// Stroke images first, then normal ones; ids are stroke_NN / normal_NN.
std::vector<ImageSample> gen_images(const SynthSpec& spec);

std::vector<RiskRecord> gen_risk_table(const SynthSpec& spec);

/// Writes images/<id>.pgm, masks/<id>_mask.pgm, manifest.csv and risk.csv
/// under `dir`. Returns the manifest path.
std::filesystem::path write_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& dir);

}  // namespace strokepipe
