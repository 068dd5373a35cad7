#include "strokepipe/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "strokepipe/error.hpp"
#include "strokepipe/haralick.hpp"

namespace strokepipe {

namespace {

int label_of(bool stroke) { return stroke ? 1 : -1; }

// Runs fn(0..n-1) on up to `threads` workers; results keep index order and
// the first failure (by index) is rethrown.
template <typename Fn>
auto run_indexed(std::size_t n, int threads, Fn fn) {
  using Result = decltype(fn(std::size_t{}));
  std::vector<std::optional<Result>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  std::vector<Result> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*results[i]));
  }
  return out;
}

std::vector<LabeledSample> labeled(std::span<const PreparedSample> samples, std::size_t held_out,
                                   const std::vector<FeatureVector>& features) {
  std::vector<LabeledSample> out;
  for (std::size_t j = 0, f = 0; j < samples.size(); ++j) {
    if (j == held_out) continue;
    out.push_back({features[f++], label_of(samples[j].stroke)});
  }
  return out;
}

void require_both_classes(std::span<const PreparedSample> samples, std::size_t held_out) {
  bool pos = false, neg = false;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (j == held_out) continue;
    (samples[j].stroke ? pos : neg) = true;
  }
  if (!pos || !neg)
    throw Error(ErrorCode::SingleClass,
                held_out < samples.size()
                    ? "a class is absent from the training fold holding out sample '" + samples[held_out].id + "'"
                    : std::string("single-class training data"));
}

std::optional<double> try_score(const SvmModel& m, const FeatureVector& x) {
  if (!(m.w_norm_sq > 0.0)) return std::nullopt;
  return score(m, x);
}

}  // namespace

void ConfusionMatrix::add(bool truth_stroke, bool predicted_stroke) noexcept {
  if (truth_stroke) {
    ++(predicted_stroke ? tp : fn);
  } else {
    ++(predicted_stroke ? fp : tn);
  }
}

Metrics metrics(const ConfusionMatrix& c) noexcept {
  Metrics m;
  if (c.tp + c.fn > 0) m.sn = 100.0 * double(c.tp) / double(c.tp + c.fn);
  if (c.tn + c.fp > 0) m.sp = 100.0 * double(c.tn) / double(c.tn + c.fp);
  if (c.total() > 0) m.ac = 100.0 * double(c.tp + c.tn) / double(c.total());
  return m;
}

std::string format_percent(std::optional<double> pct) {
  if (!pct) return "undefined";
  const double rounded = std::floor(*pct * 100.0 + 0.5) / 100.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rounded);
  return buf;
}

std::string_view to_string(Pipeline p) noexcept {
  switch (p) {
    case Pipeline::HaralickOnly: return "haralick";
    case Pipeline::NmfOnly: return "nmf";
    case Pipeline::Concatenated: return "concatenated";
    case Pipeline::MultiLevel: return "multilevel";
    case Pipeline::Tier1Ann: return "tier1";
    case Pipeline::Tier2Masked: return "tier2";
  }
  return "?";
}

std::optional<Pipeline> parse_pipeline(std::string_view text) noexcept {
  for (auto p : {Pipeline::HaralickOnly, Pipeline::NmfOnly, Pipeline::Concatenated, Pipeline::MultiLevel,
                 Pipeline::Tier1Ann, Pipeline::Tier2Masked})
    if (to_string(p) == text) return p;
  return std::nullopt;
}

ConfusionMatrix confusion_from(std::span<const SampleOutcome> outcomes) noexcept {
  ConfusionMatrix c;
  for (const auto& o : outcomes) c.add(o.truth_stroke, o.predicted_stroke);
  return c;
}

std::string render_report(const EvalReport& r) {
  const auto& c = r.confusion;
  char buf[512];
  std::ostringstream out;
  out << "pipeline: " << to_string(r.pipeline) << "  (N = " << c.total() << ")\n";
  std::snprintf(buf, sizeof buf, "%-16s%18s%18s\n", "", "predicted stroke", "predicted normal");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-16s%18zu%18zu\n", "actual stroke", c.tp, c.fn);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-16s%18zu%18zu\n", "actual normal", c.fp, c.tn);
  out << buf;
  out << "SN " << format_percent(r.metrics.sn) << "%  SP " << format_percent(r.metrics.sp) << "%  AC "
      << format_percent(r.metrics.ac) << "%\n";
  return out.str();
}

GrayImage preprocess_for_texture(const GrayImage& raw, const std::optional<std::vector<bool>>& lesion,
                                 const PreprocessConfig& cfg) {
  GrayImage img = lesion ? apply_mask(raw, *lesion) : raw;
  img = normalize_intensity(img, cfg.top_fraction);
  img = resample(img, cfg.width, cfg.height);
  return quantize(img, cfg.bpp);
}

GrayImage preprocess_for_nmf(const GrayImage& raw, const PreprocessConfig& cfg) {
  GrayImage img = raw.has_mask() ? raw.with_mask(std::nullopt) : raw;
  return resample(normalize_intensity(img, cfg.top_fraction), cfg.width, cfg.height);
}

std::vector<PreparedSample> prepare(std::span<const ImageSample> samples, const PipelineConfig& cfg) {
  return run_indexed(samples.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    const ImageSample& s = samples[i];
    try {
      PreparedSample p;
      p.id = s.id;
      p.stroke = s.stroke;
      p.haralick = feature_vector_28(preprocess_for_texture(s.image, std::nullopt, cfg.preprocess), s.id);
      p.haralick_masked =
          s.lesion ? feature_vector_28(preprocess_for_texture(s.image, s.lesion, cfg.preprocess), s.id)
                   : p.haralick;
      const GrayImage nmf_img = preprocess_for_nmf(s.image, cfg.preprocess);
      p.nmf_column = build_data_matrix(std::span(&nmf_img, 1)).col(0);
      return p;
    } catch (const Error& e) {
      throw Error(e.code(), "sample '" + s.id + "': " + e.what());
    }
  });
}

std::pair<NmfModel, std::vector<FeatureVector>> fit_nmf_features(std::span<const PreparedSample> train,
                                                                 const PipelineConfig& cfg) {
  if (train.empty()) throw Error(ErrorCode::InvalidArgument, "no samples to fit an NMF basis");
  Eigen::MatrixXd a(train.front().nmf_column.size(), static_cast<Eigen::Index>(train.size()));
  for (std::size_t j = 0; j < train.size(); ++j) {
    if (train[j].nmf_column.size() != a.rows())
      throw Error(ErrorCode::DimensionMismatch, "NMF columns differ in length");
    a.col(static_cast<Eigen::Index>(j)) = train[j].nmf_column;
  }
  NmfFit fit = factorize(a, cfg.nmf);
  fit.model.image_width = cfg.preprocess.width;
  fit.model.image_height = cfg.preprocess.height;
  std::vector<FeatureVector> feats;
  feats.reserve(train.size());
  for (std::size_t j = 0; j < train.size(); ++j)
    feats.push_back(to_feature_vector(fit.coefficients.col(static_cast<Eigen::Index>(j)), train[j].id));
  return {std::move(fit.model), std::move(feats)};
}

FeatureVector nmf_features(const NmfModel& model, const PreparedSample& sample, const PipelineConfig& cfg) {
  return to_feature_vector(project(model, sample.nmf_column, cfg.project), sample.id);
}

namespace {

constexpr std::size_t kNoHeldOut = static_cast<std::size_t>(-1);

FoldModels train_models(std::span<const PreparedSample> samples, std::size_t held_out, Pipeline pipeline,
                        const PipelineConfig& cfg) {
  require_both_classes(samples, held_out);

  std::vector<PreparedSample> rest;
  std::vector<FeatureVector> haralick;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (j == held_out) continue;
    rest.push_back(samples[j]);
    haralick.push_back(samples[j].haralick);
  }

  FoldModels fm;
  const bool needs_nmf = pipeline == Pipeline::NmfOnly || pipeline == Pipeline::Concatenated ||
                         pipeline == Pipeline::MultiLevel;
  std::vector<FeatureVector> nmf;
  if (needs_nmf) {
    auto [model, feats] = fit_nmf_features(rest, cfg);
    fm.nmf = std::move(model);
    nmf = std::move(feats);
  }

  switch (pipeline) {
    case Pipeline::HaralickOnly:
      fm.model_a = train(labeled(samples, held_out, haralick), cfg.haralick_kernel, cfg.svm);
      break;
    case Pipeline::Tier2Masked:
      fm.model_a = train(labeled(samples, held_out, haralick), cfg.tier2_kernel, cfg.svm);
      break;
    case Pipeline::NmfOnly:
      fm.model_b = train(labeled(samples, held_out, nmf), cfg.nmf_kernel, cfg.svm);
      break;
    case Pipeline::Concatenated: {
      std::vector<FeatureVector> joined;
      for (std::size_t f = 0; f < haralick.size(); ++f) joined.push_back(concatenate(haralick[f], nmf[f]));
      fm.model_a = train(labeled(samples, held_out, joined), cfg.concatenated_kernel, cfg.svm);
      break;
    }
    case Pipeline::MultiLevel:
      fm.model_a = train(labeled(samples, held_out, haralick), cfg.haralick_kernel, cfg.svm);
      fm.model_b = train(labeled(samples, held_out, nmf), cfg.nmf_kernel, cfg.svm);
      break;
    case Pipeline::Tier1Ann:
      throw Error(ErrorCode::InvalidArgument, "tier1 runs on risk records, not images");
  }
  return fm;
}

}  // namespace

FoldModels train_fold(std::span<const PreparedSample> samples, std::size_t held_out, Pipeline pipeline,
                      const PipelineConfig& cfg) {
  if (held_out >= samples.size()) throw Error(ErrorCode::InvalidArgument, "held-out index out of range");
  return train_models(samples, held_out, pipeline, cfg);
}

FoldModels train_all(std::span<const PreparedSample> samples, Pipeline pipeline, const PipelineConfig& cfg) {
  return train_models(samples, kNoHeldOut, pipeline, cfg);
}

SampleOutcome evaluate_fold(const FoldModels& fm, const PreparedSample& s, Pipeline pipeline,
                            const PipelineConfig& cfg) {
  SampleOutcome o;
  o.id = s.id;
  o.truth_stroke = s.stroke;
  switch (pipeline) {
    case Pipeline::HaralickOnly:
    case Pipeline::Tier2Masked: {
      const FeatureVector& x = pipeline == Pipeline::Tier2Masked ? s.haralick_masked : s.haralick;
      o.predicted_stroke = predict(*fm.model_a, x) > 0;
      o.score_a = try_score(*fm.model_a, x);
      break;
    }
    case Pipeline::NmfOnly: {
      const FeatureVector x = nmf_features(*fm.nmf, s, cfg);
      o.predicted_stroke = predict(*fm.model_b, x) > 0;
      o.score_b = try_score(*fm.model_b, x);
      break;
    }
    case Pipeline::Concatenated: {
      const FeatureVector x = concatenate(s.haralick, nmf_features(*fm.nmf, s, cfg));
      o.predicted_stroke = predict(*fm.model_a, x) > 0;
      o.score_a = try_score(*fm.model_a, x);
      break;
    }
    case Pipeline::MultiLevel: {
      const FusedPrediction fp =
          fuse_predict(FusedModel{*fm.model_a, *fm.model_b}, s.haralick, nmf_features(*fm.nmf, s, cfg));
      o.predicted_stroke = fp.label > 0;
      o.chosen = fp.chosen;
      o.score_a = fp.score_a;
      o.score_b = fp.score_b;
      break;
    }
    case Pipeline::Tier1Ann:
      throw Error(ErrorCode::InvalidArgument, "tier1 runs on risk records, not images");
  }
  return o;
}

EvalReport loocv(std::span<const ImageSample> samples, Pipeline pipeline, const PipelineConfig& cfg) {
  const auto prepared = prepare(samples, cfg);
  return loocv(std::span<const PreparedSample>(prepared), pipeline, cfg);
}

EvalReport loocv(std::span<const PreparedSample> samples, Pipeline pipeline, const PipelineConfig& cfg) {
  if (pipeline == Pipeline::Tier1Ann) throw Error(ErrorCode::InvalidArgument, "tier1 runs on risk records, not images");
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.stroke ? 1 : 0;
  if (pos < 2 || samples.size() - pos < 2)
    throw Error(ErrorCode::SingleClass, "LOOCV needs at least 2 samples per class");

  EvalReport r;
  r.pipeline = pipeline;
  r.per_sample = run_indexed(samples.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    return evaluate_fold(train_fold(samples, i, pipeline, cfg), samples[i], pipeline, cfg);
  });
  r.confusion = confusion_from(r.per_sample);
  r.metrics = metrics(r.confusion);
  return r;
}

EvalReport loocv_tier1(std::span<const RiskRecord> records, const LmConfig& cfg, int threads) {
  std::size_t pos = 0;
  for (const auto& rec : records) pos += rec.stroke ? 1 : 0;
  if (pos < 2 || records.size() - pos < 2)
    throw Error(ErrorCode::SingleClass, "LOOCV needs at least 2 records per class");

  EvalReport r;
  r.pipeline = Pipeline::Tier1Ann;
  r.per_sample = run_indexed(records.size(), resolve_threads(threads), [&](std::size_t i) {
    std::vector<RiskRecord> rest;
    for (std::size_t j = 0; j < records.size(); ++j)
      if (j != i) rest.push_back(records[j]);
    const AnnTrainResult trained = train_ann(rest, cfg);
    const RiskOutput out = forward(trained.model, records[i]);
    SampleOutcome o;
    o.id = records[i].id;
    o.truth_stroke = records[i].stroke;
    o.predicted_stroke = out.predicts_stroke();
    o.score_a = out.p_stroke;
    o.score_b = out.p_normal;
    return o;
  });
  r.confusion = confusion_from(r.per_sample);
  r.metrics = metrics(r.confusion);
  return r;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STROKEPIPE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

}  // namespace strokepipe
