#include <doctest.h>

#include <cmath>

#include "strokepipe/error.hpp"
#include "strokepipe/fusion.hpp"
#include "strokepipe/rng.hpp"

using namespace strokepipe;

TEST_CASE("fusion examples") {
  FusedPrediction p = fuse_scores(0.3, -0.9);
  CHECK(p.label == -1);
  CHECK(p.chosen == ChosenModel::B);
  CHECK(p.score_a == 0.3);
  CHECK(p.score_b == -0.9);

  p = fuse_scores(0.5, -0.5);
  CHECK(p.label == 1);
  CHECK(p.chosen == ChosenModel::A);

  CHECK(fuse_scores(0.01, 7.0).label == 1);
  CHECK(fuse_scores(7.0, 0.01).label == 1);
  CHECK(fuse_scores(-2.0, -0.1).label == -1);
  CHECK(fuse_scores(0.0, 0.0).label == 1);
  CHECK(fuse_scores(-0.0, 0.0).chosen == ChosenModel::A);
}

TEST_CASE("fused label follows the larger |score| over random pairs") {
  Rng rng(6);
  for (int t = 0; t < 100000; ++t) {
    // Mix wide and narrow magnitudes so both near-ties and lopsided pairs occur.
    const double sa = rng.normal() * (t % 3 == 0 ? 1e-3 : 2.0);
    const double sb = rng.normal() * (t % 5 == 0 ? 1e-3 : 2.0);
    const FusedPrediction p = fuse_scores(sa, sb);
    const double winner = std::abs(sa) >= std::abs(sb) ? sa : sb;
    REQUIRE(p.label == (winner >= 0 ? 1 : -1));
    REQUIRE(p.chosen == (std::abs(sa) >= std::abs(sb) ? ChosenModel::A : ChosenModel::B));
    if ((sa > 0) == (sb > 0) && sa != 0 && sb != 0) REQUIRE(p.label == (sa > 0 ? 1 : -1));
  }
}

TEST_CASE("fuse_predict scores each representation with its own model") {
  auto fv = [](std::vector<double> v, FeatureKind k) { return FeatureVector{std::move(v), k, {}}; };
  SvmTrainOptions raw;
  raw.C = 10;
  raw.scale_features = false;
  const std::vector<LabeledSample> da{{fv({-1.0}, FeatureKind::Haralick28), -1}, {fv({1.0}, FeatureKind::Haralick28), 1}};
  const std::vector<LabeledSample> db{{fv({-2.0}, FeatureKind::Nmf14), -1}, {fv({2.0}, FeatureKind::Nmf14), 1}};
  const FusedModel fm{train(da, KernelSpec::linear(), raw), train(db, KernelSpec::linear(), raw)};

  // Model A: score(x) = x. Model B: f = x/2, ||w|| = 1/2, score = x.
  FusedPrediction p = fuse_predict(fm, fv({0.5}, FeatureKind::Haralick28), fv({-3.0}, FeatureKind::Nmf14));
  CHECK(p.label == -1);
  CHECK(p.chosen == ChosenModel::B);
  CHECK(p.score_a == doctest::Approx(0.5));
  CHECK(p.score_b == doctest::Approx(-3.0));

  try {
    fuse_predict(fm, fv({0.5}, FeatureKind::Nmf14), fv({1.0}, FeatureKind::Nmf14));
    FAIL("expected FeatureKindMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FeatureKindMismatch);
  }

  FusedModel degenerate = fm;
  degenerate.model_b.w_norm_sq = 0.0;
  CHECK_THROWS_AS(fuse_predict(degenerate, fv({0.5}, FeatureKind::Haralick28), fv({1.0}, FeatureKind::Nmf14)),
                  Error);
}
