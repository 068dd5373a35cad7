#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "strokepipe/dataset.hpp"
#include "strokepipe/error.hpp"
#include "strokepipe/eval.hpp"
#include "strokepipe/haralick.hpp"
#include "strokepipe/synth.hpp"
#include "support/test_util.hpp"

using namespace strokepipe;

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

TEST_CASE("same seed gives byte-identical corpora") {
  const SynthSpec spec = SynthSpec::defaults();
  const auto d1 = testutil::scratch_dir("synth_a");
  const auto d2 = testutil::scratch_dir("synth_b");
  write_synthetic_corpus(spec, d1);
  write_synthetic_corpus(spec, d2);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(d1)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = std::filesystem::relative(e.path(), d1);
    CHECK(testutil::read_file(e.path()) == testutil::read_file(d2 / rel));
  }
  CHECK(files == 2 + 30 + 15);  // manifest, risk table, images, stroke masks
}

TEST_CASE("class textures separate on GLCM contrast") {
  const SynthSpec spec = SynthSpec::defaults();
  const auto images = gen_images(spec);
  std::vector<double> c[2];
  for (const auto& s : images) {
    const GrayImage t = preprocess_for_texture(s.image, std::nullopt, PreprocessConfig{});
    c[s.stroke ? 1 : 0].push_back(feature_vector_28(t).values[1]);
  }
  const auto [m0, s0] = mean_std(c[0]);
  const auto [m1, s1] = mean_std(c[1]);
  CHECK(std::abs(m0 - m1) > 3.0 * std::max(s0, s1));
}

TEST_CASE("lesions stay small and only appear in stroke images") {
  const auto images = gen_images(SynthSpec::defaults());
  REQUIRE(images.size() == 30);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& s = images[i];
    CHECK(s.stroke == (i < 15));
    CHECK(s.id == (s.stroke ? "stroke_" : "normal_") + std::string(i % 15 < 10 ? "0" : "") + std::to_string(i % 15));
    CHECK(s.image.levels() == 256);
    CHECK_FALSE(s.image.has_mask());
    if (!s.stroke) {
      CHECK_FALSE(s.lesion.has_value());
      continue;
    }
    REQUIRE(s.lesion.has_value());
    const auto covered = static_cast<double>(std::count(s.lesion->begin(), s.lesion->end(), true));
    CHECK(covered > 0);
    CHECK(covered < 0.3 * static_cast<double>(s.image.size()));
    const GrayImage masked = preprocess_for_texture(s.image, s.lesion, PreprocessConfig{});
    CHECK_NOTHROW(feature_vector_28(masked));
  }
}

TEST_CASE("risk table shape and separation") {
  const auto rows = gen_risk_table(SynthSpec::defaults());
  REQUIRE(rows.size() == 30);
  CHECK(std::count_if(rows.begin(), rows.end(), [](const RiskRecord& r) { return r.stroke; }) == 15);
  for (const auto& r : rows) CHECK_NOTHROW(validate(r));
  int best = 0;
  for (const auto& cut : rows) {
    int correct = 0;
    for (const auto& r : rows) correct += (r.systolic_bp >= cut.systolic_bp) == r.stroke;
    best = std::max(best, correct);
  }
  CHECK(best > 21);  // > 70% of 30
}

TEST_CASE("seed + 1 changes content but keeps every invariant") {
  SynthSpec spec = SynthSpec::defaults();
  const auto a = gen_images(spec);
  const auto ra = gen_risk_table(spec);
  spec.seed += 1;
  const auto b = gen_images(spec);
  const auto rb = gen_risk_table(spec);
  REQUIRE(a.size() == b.size());
  CHECK_FALSE(a[0].image == b[0].image);
  CHECK(ra[0].systolic_bp != rb[0].systolic_bp);
  for (const auto& r : rb) CHECK_NOTHROW(validate(r));
  for (const auto& s : b) CHECK(s.lesion.has_value() == s.stroke);
}

TEST_CASE("invalid specs are rejected") {
  SynthSpec s = SynthSpec::defaults();
  s.lesion->max_radius = 40;
  CHECK_THROWS_AS(validate(s), Error);
  s = SynthSpec::defaults();
  s.texture[1] = s.texture[0];
  CHECK_THROWS_AS(validate(s), Error);
  s = SynthSpec::defaults();
  s.n_per_class = 0;
  CHECK_THROWS_AS(gen_images(s), Error);
}

TEST_CASE("written corpus loads back through the manifest") {
  const auto dir = testutil::scratch_dir("synth_load");
  const auto manifest = write_synthetic_corpus(SynthSpec::defaults(), dir);
  const auto loaded = load_dataset(manifest);
  const auto generated = gen_images(SynthSpec::defaults());
  REQUIRE(loaded.size() == generated.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == generated[i].id);
    CHECK(loaded[i].stroke == generated[i].stroke);
    CHECK(loaded[i].image == generated[i].image);
    CHECK(loaded[i].lesion == generated[i].lesion);
  }
  const auto risk = read_risk_csv(dir / "risk.csv");
  const auto gen_risk = gen_risk_table(SynthSpec::defaults());
  REQUIRE(risk.size() == gen_risk.size());
  for (std::size_t i = 0; i < risk.size(); ++i) {
    CHECK(risk[i].id == gen_risk[i].id);
    CHECK(risk[i].systolic_bp == gen_risk[i].systolic_bp);
    CHECK(risk[i].age == gen_risk[i].age);
    CHECK(risk[i].stroke == gen_risk[i].stroke);
  }
}
