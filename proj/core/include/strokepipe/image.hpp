#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace strokepipe {

enum class ImageFormat { Pgm, PngGray };

/// Quantized 2-D intensity grid. Pixels hold bin indices in [0, levels-1],
/// stored row-major. The optional mask marks valid pixels with `true`;
/// invalid (lesion) pixels keep whatever value they had and are ignored by
/// every downstream statistic.
class GrayImage {
 public:
  GrayImage(int width, int height, int levels, std::vector<std::uint16_t> pixels,
            std::optional<std::vector<bool>> mask = std::nullopt);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  std::uint16_t at(int row, int col) const { return pixels_[index(row, col)]; }
  bool valid(int row, int col) const { return !mask_ || (*mask_)[index(row, col)]; }

  std::span<const std::uint16_t> pixels() const noexcept { return pixels_; }
  const std::optional<std::vector<bool>>& mask() const noexcept { return mask_; }
  bool has_mask() const noexcept { return mask_.has_value(); }

  std::size_t valid_count() const noexcept;

  GrayImage with_mask(std::optional<std::vector<bool>> mask) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_;
  int height_;
  int levels_;
  std::vector<std::uint16_t> pixels_;
  std::optional<std::vector<bool>> mask_;
};

/// Reads an 8-bit single-channel image. Result has 256 levels and no mask.
GrayImage load_image(const std::filesystem::path& path, ImageFormat format);

/// Picks the format from the extension (.pgm / .png).
GrayImage load_image(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM (P5). Image must have at most 256 levels.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Scales by M, the mean of the ceil(top_fraction * n) largest valid
/// intensities, then maps v -> round(min(v / M, 1) * (levels - 1)).
/// Masked pixels are left untouched.
GrayImage normalize_intensity(const GrayImage& img, double top_fraction = 0.001);

/// Requantizes to 2^target_bpp levels with v -> floor(v * new / old).
GrayImage quantize(const GrayImage& img, int target_bpp);

/// Loads a lesion mask (0 = valid, nonzero = lesion) and attaches it.
GrayImage apply_mask(const GrayImage& img, const std::filesystem::path& mask_path);

/// In-memory variant; `lesion[i]` true marks pixel i invalid.
GrayImage apply_mask(const GrayImage& img, const std::vector<bool>& lesion);

/// Nearest-neighbour resampling; the mask follows the source pixel.
GrayImage resample(const GrayImage& img, int width, int height);

}  // namespace strokepipe
