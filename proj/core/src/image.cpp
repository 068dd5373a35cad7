#include "strokepipe/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <string>

#include <png.h>

#include "strokepipe/dataset.hpp"
#include "strokepipe/error.hpp"

namespace strokepipe {

namespace {

std::string path_str(const std::filesystem::path& p) { return p.string(); }

// PGM header tokens are separated by whitespace; '#' starts a comment that
// runs to end of line.
std::string next_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!tok.empty()) break;
    } else {
      tok.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  return tok;
}

int parse_header_int(std::istream& in, const std::filesystem::path& path, const char* what) {
  const std::string tok = next_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Format,
                "malformed PGM header (" + std::string(what) + ") in " + path_str(path));
  }
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path_str(path));

  const std::string magic = next_token(in);
  if (magic == "P6" || magic == "P3")
    throw Error(ErrorCode::Format, "multi-channel image not supported: " + path_str(path));
  if (magic != "P5") throw Error(ErrorCode::Format, "not a binary PGM (P5): " + path_str(path));

  const int width = parse_header_int(in, path, "width");
  const int height = parse_header_int(in, path, "height");
  const int maxval = parse_header_int(in, path, "maxval");
  if (width < 1 || height < 1)
    throw Error(ErrorCode::Format, "PGM has empty dimensions: " + path_str(path));
  if (maxval < 1 || maxval > 255)
    throw Error(ErrorCode::Format, "bit depth is not 8 (maxval " + std::to_string(maxval) +
                                       "): " + path_str(path));

  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<unsigned char> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw Error(ErrorCode::Format, "truncated PGM pixel data: " + path_str(path));

  return GrayImage(width, height, 256, std::vector<std::uint16_t>(raw.begin(), raw.end()));
}

GrayImage load_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw Error(ErrorCode::Io, "cannot open " + path_str(path));

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw Error(ErrorCode::Format, "not a PNG file: " + path_str(path));

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::Io, "libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::Io, "libpng initialisation failed");
  }
  std::unique_ptr<void, std::function<void(void*)>> guard(
      png, [&](void*) { png_destroy_read_struct(&png, &info, nullptr); });

  // Declared before setjmp so a longjmp never skips their destructors.
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png)))
    throw Error(ErrorCode::Format, "corrupt PNG data: " + path_str(path));

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (color_type != PNG_COLOR_TYPE_GRAY)
    throw Error(ErrorCode::Format, "multi-channel image not supported: " + path_str(path));
  if (bit_depth != 8)
    throw Error(ErrorCode::Format,
                "bit depth is not 8 (" + std::to_string(bit_depth) + "): " + path_str(path));

  raw.resize(static_cast<std::size_t>(width) * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = raw.data() + static_cast<std::size_t>(r) * width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  return GrayImage(static_cast<int>(width), static_cast<int>(height), 256,
                   std::vector<std::uint16_t>(raw.begin(), raw.end()));
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int bits_for_levels(int levels) {
  int bits = 0;
  while ((1 << bits) < levels) ++bits;
  return bits;
}

}  // namespace

GrayImage::GrayImage(int width, int height, int levels, std::vector<std::uint16_t> pixels,
                     std::optional<std::vector<bool>> mask)
    : width_(width), height_(height), levels_(levels), pixels_(std::move(pixels)),
      mask_(std::move(mask)) {
  if (width_ < 1 || height_ < 1)
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be at least 1x1");
  if (levels_ < 2) throw Error(ErrorCode::InvalidArgument, "image needs at least 2 gray levels");
  const auto n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  if (pixels_.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "pixel buffer size does not match dimensions");
  if (mask_ && mask_->size() != n)
    throw Error(ErrorCode::DimensionMismatch, "mask size does not match image dimensions");
  for (std::size_t i = 0; i < n; ++i) {
    if (pixels_[i] >= levels_ && (!mask_ || (*mask_)[i]))
      throw Error(ErrorCode::InvalidArgument, "pixel value outside [0, levels-1]");
  }
}

std::size_t GrayImage::valid_count() const noexcept {
  if (!mask_) return pixels_.size();
  return static_cast<std::size_t>(std::count(mask_->begin(), mask_->end(), true));
}

GrayImage GrayImage::with_mask(std::optional<std::vector<bool>> mask) const {
  return GrayImage(width_, height_, levels_, pixels_, std::move(mask));
}

GrayImage load_image(const std::filesystem::path& path, ImageFormat format) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::Io, "file not found: " + path_str(path));
  return format == ImageFormat::Pgm ? load_pgm(path) : load_png(path);
}

GrayImage load_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return load_image(path, ImageFormat::PngGray);
  if (ext == ".pgm") return load_image(path, ImageFormat::Pgm);
  throw Error(ErrorCode::Format, "unrecognised image extension: " + path_str(path));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  if (img.levels() > 256)
    throw Error(ErrorCode::InvalidArgument, "PGM output supports at most 256 levels");
  std::string out = "P5\n" + std::to_string(img.width()) + ' ' + std::to_string(img.height()) + '\n' +
                    std::to_string(img.levels() - 1) + '\n';
  out.reserve(out.size() + img.size());
  for (std::uint16_t v : img.pixels()) out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  write_file_atomic(path, out);
}

GrayImage normalize_intensity(const GrayImage& img, double top_fraction) {
  if (!(top_fraction > 0.0 && top_fraction <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "top_fraction must lie in (0, 1]");

  std::vector<std::uint16_t> valid;
  valid.reserve(img.size());
  const auto px = img.pixels();
  const auto& mask = img.mask();
  for (std::size_t i = 0; i < px.size(); ++i)
    if (!mask || (*mask)[i]) valid.push_back(px[i]);
  if (valid.empty()) throw Error(ErrorCode::AllMasked, "all pixels are masked");

  const auto count = static_cast<std::size_t>(
      std::ceil(top_fraction * static_cast<double>(valid.size()) - 1e-9));
  const std::size_t top = std::clamp<std::size_t>(count, 1, valid.size());
  std::nth_element(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(top - 1), valid.end(),
                   std::greater<>());
  const double sum = std::accumulate(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(top), 0.0);
  const double m = sum / static_cast<double>(top);

  const int top_bin = img.levels() - 1;
  std::vector<std::uint16_t> out(px.begin(), px.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    // An all-zero image has M = 0 and stays all zero.
    const double ratio = m > 0.0 ? std::min(static_cast<double>(out[i]) / m, 1.0) : 0.0;
    out[i] = static_cast<std::uint16_t>(std::lround(ratio * top_bin));
  }
  return GrayImage(img.width(), img.height(), img.levels(), std::move(out), img.mask());
}

GrayImage quantize(const GrayImage& img, int target_bpp) {
  if (target_bpp < 1 || target_bpp > 8)
    throw Error(ErrorCode::InvalidArgument, "target bpp must lie in [1, 8]");
  if (!is_power_of_two(img.levels()))
    throw Error(ErrorCode::InvalidArgument, "source level count is not a power of two");
  const int source_bpp = bits_for_levels(img.levels());
  if (target_bpp > source_bpp)
    throw Error(ErrorCode::InvalidArgument, "target bpp " + std::to_string(target_bpp) +
                                                " exceeds source bpp " + std::to_string(source_bpp));
  const int new_levels = 1 << target_bpp;
  std::vector<std::uint16_t> out(img.pixels().begin(), img.pixels().end());
  const auto& mask = img.mask();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask && !(*mask)[i] && out[i] >= img.levels()) {
      out[i] = 0;
      continue;
    }
    out[i] = static_cast<std::uint16_t>(out[i] * new_levels / img.levels());
  }
  return GrayImage(img.width(), img.height(), new_levels, std::move(out), img.mask());
}

GrayImage apply_mask(const GrayImage& img, const std::filesystem::path& mask_path) {
  const GrayImage m = load_image(mask_path);
  if (m.width() != img.width() || m.height() != img.height())
    throw Error(ErrorCode::DimensionMismatch, "mask dimensions differ from image: " + path_str(mask_path));

  std::optional<std::uint16_t> on_value;
  std::vector<bool> lesion(m.size());
  const auto px = m.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (px[i] == 0) continue;
    if (on_value && *on_value != px[i])
      throw Error(ErrorCode::Format, "mask is not binary: " + path_str(mask_path));
    on_value = px[i];
    lesion[i] = true;
  }
  return apply_mask(img, lesion);
}

GrayImage apply_mask(const GrayImage& img, const std::vector<bool>& lesion) {
  if (lesion.size() != img.size())
    throw Error(ErrorCode::DimensionMismatch, "mask size differs from image");
  std::vector<bool> valid(img.size());
  for (std::size_t i = 0; i < valid.size(); ++i)
    valid[i] = !lesion[i] && (!img.mask() || (*img.mask())[i]);
  return img.with_mask(std::move(valid));
}

GrayImage resample(const GrayImage& img, int width, int height) {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::InvalidArgument, "resample target must be at least 1x1");
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint16_t> out(n);
  std::optional<std::vector<bool>> mask;
  if (img.mask()) mask.emplace(n);

  // Source index of the pixel whose centre is nearest the target centre.
  auto src = [](int dst, int dst_len, int src_len) {
    return static_cast<int>((2L * dst + 1) * src_len / (2L * dst_len));
  };
  for (int r = 0; r < height; ++r) {
    const int sr = src(r, height, img.height());
    for (int c = 0; c < width; ++c) {
      const int sc = src(c, width, img.width());
      const std::size_t i = static_cast<std::size_t>(r) * width + c;
      out[i] = img.at(sr, sc);
      if (mask) (*mask)[i] = img.valid(sr, sc);
    }
  }
  return GrayImage(width, height, img.levels(), std::move(out), std::move(mask));
}

}  // namespace strokepipe
