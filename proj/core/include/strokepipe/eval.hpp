#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strokepipe/ann.hpp"
#include "strokepipe/dataset.hpp"
#include "strokepipe/fusion.hpp"
#include "strokepipe/nmf.hpp"
#include "strokepipe/svm.hpp"

namespace strokepipe {

/// Stroke is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  void add(bool truth_stroke, bool predicted_stroke) noexcept;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Percentages; a metric with a zero denominator is undefined (nullopt).
struct Metrics {
  std::optional<double> sn;
  std::optional<double> sp;
  std::optional<double> ac;
};

Metrics metrics(const ConfusionMatrix& c) noexcept;

/// Half-up rounding to two decimals, e.g. 78.5714 -> "78.57"; "undefined"
/// for a missing metric.
std::string format_percent(std::optional<double> pct);

enum class Pipeline { HaralickOnly, NmfOnly, Concatenated, MultiLevel, Tier1Ann, Tier2Masked };

std::string_view to_string(Pipeline p) noexcept;
std::optional<Pipeline> parse_pipeline(std::string_view text) noexcept;

struct SampleOutcome {
  std::string id;
  bool truth_stroke = false;
  bool predicted_stroke = false;
  std::optional<ChosenModel> chosen;  // MultiLevel only
  std::optional<double> score_a;      // SVM score, or p_stroke for Tier1Ann
  std::optional<double> score_b;      // NMF score in MultiLevel, p_normal for Tier1Ann
};

struct EvalReport {
  Pipeline pipeline = Pipeline::MultiLevel;
  ConfusionMatrix confusion;
  Metrics metrics;
  std::vector<SampleOutcome> per_sample;
};

/// Rebuilds confusion and metrics from per_sample.
ConfusionMatrix confusion_from(std::span<const SampleOutcome> outcomes) noexcept;

/// Text table laid out as a 2x2 confusion matrix with SN/SP/AC underneath.
std::string render_report(const EvalReport& report);

struct PreprocessConfig {
  double top_fraction = 0.001;
  int width = 64;
  int height = 64;
  int bpp = 4;
};

struct PipelineConfig {
  PreprocessConfig preprocess;
  KernelSpec haralick_kernel = KernelSpec::linear();
  KernelSpec nmf_kernel = KernelSpec::linear();
  KernelSpec concatenated_kernel = KernelSpec::linear();
  KernelSpec tier2_kernel = KernelSpec::linear();
  SvmTrainOptions svm;
  NmfConfig nmf;
  ProjectConfig project;
  LmConfig lm;
  int threads = 0;  // 0: STROKEPIPE_THREADS or hardware concurrency
};

/// normalize -> resample -> quantize, honouring an optional lesion mask.
GrayImage preprocess_for_texture(const GrayImage& raw, const std::optional<std::vector<bool>>& lesion,
                                 const PreprocessConfig& cfg);

/// normalize -> resample, full 8-bit depth, never masked.
GrayImage preprocess_for_nmf(const GrayImage& raw, const PreprocessConfig& cfg);

/// Per-sample inputs that do not depend on other samples.
struct PreparedSample {
  std::string id;
  bool stroke = false;
  FeatureVector haralick;         // unmasked
  FeatureVector haralick_masked;  // lesion removed; equals `haralick` without a lesion
  Eigen::VectorXd nmf_column;     // preprocessed image scaled to [0, 1]
};

std::vector<PreparedSample> prepare(std::span<const ImageSample> samples, const PipelineConfig& cfg);

/// Fits an NMF basis on the given samples' columns; returns the model and
/// one Nmf14 vector per sample (its coefficient column).
std::pair<NmfModel, std::vector<FeatureVector>> fit_nmf_features(std::span<const PreparedSample> train,
                                                                 const PipelineConfig& cfg);

/// Projects one sample onto a fitted basis.
FeatureVector nmf_features(const NmfModel& model, const PreparedSample& sample, const PipelineConfig& cfg);

/// Everything trained for one LOOCV fold.
struct FoldModels {
  std::optional<SvmModel> model_a;  // Haralick, or the only model
  std::optional<SvmModel> model_b;  // NMF
  std::optional<NmfModel> nmf;
};

/// Trains every model of `pipeline` on all samples except `held_out`.
FoldModels train_fold(std::span<const PreparedSample> samples, std::size_t held_out, Pipeline pipeline,
                      const PipelineConfig& cfg);

/// Trains every model of `pipeline` on all samples.
FoldModels train_all(std::span<const PreparedSample> samples, Pipeline pipeline, const PipelineConfig& cfg);

/// A pipeline trained on a whole dataset, with the settings needed to
/// classify new images the same way.
struct TrainedPipeline {
  Pipeline pipeline = Pipeline::MultiLevel;
  PreprocessConfig preprocess;
  ProjectConfig project;
  FoldModels models;
};

/// Classifies the held-out sample with a fold's models.
SampleOutcome evaluate_fold(const FoldModels& models, const PreparedSample& sample, Pipeline pipeline,
                            const PipelineConfig& cfg);

/// Leave-one-out over an image dataset. Every model, scaler and NMF basis
/// is refit per fold. Tier2Masked trains on unmasked images and tests on the
/// held-out image with its lesion removed, Haralick features only.
EvalReport loocv(std::span<const ImageSample> samples, Pipeline pipeline, const PipelineConfig& cfg);
EvalReport loocv(std::span<const PreparedSample> samples, Pipeline pipeline, const PipelineConfig& cfg);

/// Leave-one-out for the tier-1 network.
EvalReport loocv_tier1(std::span<const RiskRecord> records, const LmConfig& cfg, int threads = 0);

/// Resolves a thread count: explicit > 0, else STROKEPIPE_THREADS, else
/// hardware concurrency (at least 1).
int resolve_threads(int requested);

}  // namespace strokepipe
