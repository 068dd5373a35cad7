#include "strokepipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "strokepipe/error.hpp"
#include "strokepipe/rng.hpp"

namespace strokepipe {

namespace {

std::string make_id(bool stroke, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02d", stroke ? "stroke" : "normal", index);
  return buf;
}

std::vector<double> exp_kernel(double length) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * length)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int d = -radius; d <= radius; ++d) sum += k[d + radius] = std::exp(-std::abs(d) / length);
  for (double& v : k) v /= sum;
  return k;
}

// Smooths padded noise along rows then columns and crops the centre.
std::vector<double> texture_field(Rng& rng, int width, int height, double lx, double ly) {
  const auto kx = exp_kernel(lx);
  const auto ky = exp_kernel(ly);
  const int rx = static_cast<int>(kx.size() / 2);
  const int ry = static_cast<int>(ky.size() / 2);
  const int pw = width + 2 * rx;
  const int ph = height + 2 * ry;

  std::vector<double> noise(static_cast<std::size_t>(pw) * ph);
  for (double& v : noise) v = rng.uniform01();

  std::vector<double> rows(static_cast<std::size_t>(width) * ph);
  for (int r = 0; r < ph; ++r)
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int d = 0; d < static_cast<int>(kx.size()); ++d) acc += kx[d] * noise[r * pw + c + d];
      rows[static_cast<std::size_t>(r) * width + c] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int d = 0; d < static_cast<int>(ky.size()); ++d) acc += ky[d] * rows[(r + d) * width + c];
      out[static_cast<std::size_t>(r) * width + c] = acc;
    }
  return out;
}

ImageSample make_image(const SynthSpec& spec, bool stroke, int index, std::uint64_t seed) {
  const TextureParams& tp = spec.texture[stroke ? 1 : 0];
  Rng rng(seed);
  const double length = tp.correlation_length * (1.0 + tp.jitter * rng.uniform(-1.0, 1.0));
  const double along = length * tp.elongation;
  const bool horizontal = tp.orientation == TextureParams::Orientation::Horizontal;
  auto field = texture_field(rng, spec.width, spec.height, horizontal ? along : length,
                             horizontal ? length : along);

  double mean = 0.0;
  for (double v : field) mean += v;
  mean /= double(field.size());
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / double(field.size()));

  std::vector<std::uint16_t> px(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double z = sd > 0.0 ? (field[i] - mean) / sd : 0.0;
    px[i] = static_cast<std::uint16_t>(std::clamp(std::lround(128.0 + tp.contrast * z), 0L, 255L));
  }

  std::optional<std::vector<bool>> lesion;
  if (stroke && spec.lesion) {
    const LesionParams& lp = *spec.lesion;
    lesion.emplace(px.size(), false);
    for (int l = 0; l < lp.count; ++l) {
      const int radius = lp.min_radius + static_cast<int>(rng.below(std::uint64_t(lp.max_radius - lp.min_radius + 1)));
      const int cr = radius + static_cast<int>(rng.below(std::uint64_t(spec.height - 2 * radius)));
      const int cc = radius + static_cast<int>(rng.below(std::uint64_t(spec.width - 2 * radius)));
      for (int r = cr - radius; r <= cr + radius; ++r)
        for (int c = cc - radius; c <= cc + radius; ++c) {
          if ((r - cr) * (r - cr) + (c - cc) * (c - cc) > radius * radius) continue;
          const std::size_t i = static_cast<std::size_t>(r) * spec.width + c;
          px[i] = static_cast<std::uint16_t>(std::clamp(lp.intensity + static_cast<int>(rng.below(11)) - 5, 0, 255));
          (*lesion)[i] = true;
        }
    }
  }
  return ImageSample{make_id(stroke, index), GrayImage(spec.width, spec.height, 256, std::move(px)),
                     std::move(lesion), stroke};
}

double draw_clamped(Rng& rng, const Gaussian& g, double lo, double hi) {
  return std::clamp(std::round(rng.normal(g.mean, g.stddev)), lo, hi);
}

}  // namespace

SynthSpec SynthSpec::defaults() {
  SynthSpec s;
  s.texture[0] = {1.2, 40.0, 1.0, TextureParams::Orientation::Horizontal, 0.25};
  s.texture[1] = {2.4, 40.0, 1.5, TextureParams::Orientation::Horizontal, 0.25};
  s.lesion = LesionParams{};
  s.risk[0] = {{122, 12}, {185, 25}, {45, 12}, 0.03, 0.15, 0.08, 0.65, 0.12, 0.15};
  s.risk[1] = {{158, 18}, {245, 35}, {66, 9}, 0.35, 0.55, 0.40, 0.25, 0.45, 0.50};
  return s;
}

void validate(const SynthSpec& spec) {
  if (spec.n_per_class < 1) throw Error(ErrorCode::InvalidArgument, "n_per_class must be >= 1");
  if (spec.width < 2 || spec.height < 2) throw Error(ErrorCode::InvalidArgument, "synthetic images must be at least 2x2");
  if (spec.texture[0] == spec.texture[1]) throw Error(ErrorCode::InvalidArgument, "class texture parameters must differ");
  for (const auto& t : spec.texture) {
    if (!(t.correlation_length > 0.0) || !(t.elongation > 0.0) || !(t.contrast >= 0.0) ||
        !(t.jitter >= 0.0 && t.jitter < 1.0))
      throw Error(ErrorCode::InvalidArgument, "invalid texture parameters");
  }
  if (spec.lesion) {
    const auto& l = *spec.lesion;
    if (l.min_radius < 1 || l.max_radius < l.min_radius || l.count < 1)
      throw Error(ErrorCode::InvalidArgument, "invalid lesion parameters");
    if (2 * l.max_radius + 1 > std::min(spec.width, spec.height))
      throw Error(ErrorCode::InvalidArgument, "lesion larger than image");
    const double worst = l.count * 3.14159265358979 * (l.max_radius + 0.5) * (l.max_radius + 0.5);
    if (worst >= 0.30 * spec.width * spec.height)
      throw Error(ErrorCode::InvalidArgument, "lesions could cover 30% or more of the image");
  }
}

std::vector<ImageSample> gen_images(const SynthSpec& spec) {
  validate(spec);
  std::vector<ImageSample> out;
  out.reserve(2 * static_cast<std::size_t>(spec.n_per_class));
  std::uint64_t item = 0;
  for (bool stroke : {true, false})
    for (int i = 0; i < spec.n_per_class; ++i) out.push_back(make_image(spec, stroke, i, derive_seed(spec.seed, item++)));
  return out;
}

std::vector<RiskRecord> gen_risk_table(const SynthSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, 0x5249534bULL));
  std::vector<RiskRecord> out;
  for (bool stroke : {true, false}) {
    const RiskClassParams& p = spec.risk[stroke ? 1 : 0];
    for (int i = 0; i < spec.n_per_class; ++i) {
      RiskRecord r;
      r.id = make_id(stroke, i);
      r.systolic_bp = draw_clamped(rng, p.systolic_bp, 60, 300);
      r.atrial_fibrillation = rng.bernoulli(p.p_atrial_fibrillation);
      r.smoker = rng.bernoulli(p.p_smoker);
      r.cholesterol = draw_clamped(rng, p.cholesterol, 50, 500);
      r.diabetic = rng.bernoulli(p.p_diabetic);
      r.exercises = rng.bernoulli(p.p_exercises);
      r.obese = rng.bernoulli(p.p_obese);
      r.family_history = rng.bernoulli(p.p_family_history);
      r.age = draw_clamped(rng, p.age, 1, 120);
      r.stroke = stroke;
      out.push_back(r);
    }
  }
  return out;
}

std::filesystem::path write_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& dir) {
  const auto images = gen_images(spec);
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  std::vector<ManifestRow> rows;
  for (const auto& s : images) {
    const std::filesystem::path img_rel = std::filesystem::path("images") / (s.id + ".pgm");
    write_pgm(dir / img_rel, s.image);
    ManifestRow row{s.id, img_rel, std::nullopt, s.stroke};
    if (s.lesion) {
      std::vector<std::uint16_t> m(s.lesion->size());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = (*s.lesion)[i] ? 255 : 0;
      const std::filesystem::path mask_rel = std::filesystem::path("masks") / (s.id + "_mask.pgm");
      write_pgm(dir / mask_rel, GrayImage(s.image.width(), s.image.height(), 256, std::move(m)));
      row.mask_path = mask_rel;
    }
    rows.push_back(std::move(row));
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(manifest, rows);
  write_risk_csv(dir / "risk.csv", gen_risk_table(spec));
  return manifest;
}

}  // namespace strokepipe
