#include <benchmark/benchmark.h>

#include <vector>

#include "strokepipe/eval.hpp"
#include "strokepipe/haralick.hpp"
#include "strokepipe/nmf.hpp"
#include "strokepipe/rng.hpp"
#include "strokepipe/svm.hpp"
#include "strokepipe/synth.hpp"

using namespace strokepipe;

namespace {

GrayImage random_image(int side, int levels, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint16_t> px(static_cast<std::size_t>(side * side));
  for (auto& v : px) v = static_cast<std::uint16_t>(rng.below(static_cast<std::uint64_t>(levels)));
  return GrayImage(side, side, levels, std::move(px));
}

void BM_Glcm(benchmark::State& state) {
  const GrayImage img = random_image(static_cast<int>(state.range(0)), 16, 1);
  for (auto _ : state) benchmark::DoNotOptimize(compute_glcm(img, Direction::DiagRight));
}
BENCHMARK(BM_Glcm)->Arg(64)->Arg(256);

void BM_Haralick28(benchmark::State& state) {
  const GrayImage img = random_image(64, static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(feature_vector_28(img));
}
BENCHMARK(BM_Haralick28)->Arg(16)->Arg(64);

void BM_NmfFactorize(benchmark::State& state) {
  Rng rng(3);
  Eigen::MatrixXd a(4096, 29);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform01();
  NmfConfig cfg;
  cfg.max_iters = static_cast<int>(state.range(0));
  cfg.tol = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(factorize(a, cfg));
}
BENCHMARK(BM_NmfFactorize)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_NmfProject(benchmark::State& state) {
  Rng rng(4);
  NmfModel m;
  m.basis.resize(4096, 14);
  for (Eigen::Index i = 0; i < m.basis.size(); ++i) m.basis.data()[i] = rng.uniform01();
  m.k = 14;
  Eigen::VectorXd a(4096);
  for (auto& v : a) v = rng.uniform01();
  for (auto _ : state) benchmark::DoNotOptimize(project(m, a));
}
BENCHMARK(BM_NmfProject)->Unit(benchmark::kMillisecond);

void BM_SmoTrain(benchmark::State& state) {
  Rng rng(5);
  std::vector<LabeledSample> data;
  for (int i = 0; i < state.range(0); ++i) {
    std::vector<double> x(28);
    for (auto& v : x) v = rng.normal() + (i % 2 ? 0.5 : -0.5);
    data.push_back({FeatureVector{std::move(x), FeatureKind::Haralick28, {}}, i % 2 ? 1 : -1});
  }
  for (auto _ : state) benchmark::DoNotOptimize(train(data, KernelSpec::rbf(1.0)));
}
BENCHMARK(BM_SmoTrain)->Arg(29)->Arg(200);

void BM_LoocvHaralick(benchmark::State& state) {
  const auto images = gen_images(SynthSpec::defaults());
  PipelineConfig cfg;
  cfg.threads = 1;
  const auto prepared = prepare(images, cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(loocv(std::span<const PreparedSample>(prepared), Pipeline::HaralickOnly, cfg));
}
BENCHMARK(BM_LoocvHaralick)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
