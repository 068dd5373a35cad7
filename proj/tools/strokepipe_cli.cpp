// strokepipe: command-line front end for the two-tier stroke classification
// toolkit. Every subcommand writes its outputs atomically and leaves a
// `<out>.config.json` echo that reproduces the run.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "strokepipe/dataset.hpp"
#include "strokepipe/error.hpp"
#include "strokepipe/eval.hpp"
#include "strokepipe/serialize.hpp"
#include "strokepipe/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace strokepipe;

namespace {

constexpr const char* kVersion = "0.1.0";

struct KernelFlags {
  std::string kind = "linear";
  double rbf_sigma = 1.0;
  std::string mlp_params = "1,0";
};

struct Options {
  std::string manifest;
  std::string out;
  std::string risk;
  std::string model;
  std::string model_out;
  std::string features;
  std::string features_b;
  std::string basis;
  std::string pipeline = "multilevel";
  std::string feature = "haralick28";
  bool masked = false;
  KernelFlags kernel;
  std::optional<std::string> nmf_kernel;
  std::optional<double> nmf_rbf_sigma;
  std::optional<std::string> nmf_mlp_params;
  double C = 1.0;
  double tol = 1e-3;
  int nmf_k = 14;
  int nmf_iters = 500;
  int bpp = 4;
  std::string resize = "64x64";
  std::uint64_t seed = 42;
  int n_per_class = 15;
};

double parse_number(const std::string& text, const std::string& what) {
  double v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::InvalidArgument, what + ": not a number: '" + text + "'");
  return v;
}

KernelSpec parse_kernel(const std::string& kind, double sigma, const std::string& mlp) {
  if (kind == "linear") return KernelSpec::linear();
  if (kind == "rbf") return KernelSpec::rbf(sigma);
  if (kind == "mlp") {
    const auto comma = mlp.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "--mlp-params expects 'a,b', got '" + mlp + "'");
    return KernelSpec::mlp(parse_number(mlp.substr(0, comma), "--mlp-params"),
                           parse_number(mlp.substr(comma + 1), "--mlp-params"));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + kind + "'");
}

std::pair<int, int> parse_resize(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--resize expects WxH, got '" + text + "'");
  const double w = parse_number(text.substr(0, x), "--resize");
  const double h = parse_number(text.substr(x + 1), "--resize");
  if (w < 2 || h < 2 || w != static_cast<int>(w) || h != static_cast<int>(h))
    throw Error(ErrorCode::InvalidArgument, "--resize needs integer sizes >= 2, got '" + text + "'");
  return {static_cast<int>(w), static_cast<int>(h)};
}

json kernel_echo(const KernelSpec& k) {
  json j = {{"kind", to_string(k.kind)}};
  if (k.kind == KernelSpec::Kind::Rbf) j["sigma"] = k.sigma;
  if (k.kind == KernelSpec::Kind::Mlp) j["params"] = {k.scale, k.offset};
  return j;
}

PipelineConfig pipeline_config(const Options& o) {
  PipelineConfig cfg;
  const auto [w, h] = parse_resize(o.resize);
  cfg.preprocess.width = w;
  cfg.preprocess.height = h;
  if (o.bpp < 1 || o.bpp > 8) throw Error(ErrorCode::InvalidArgument, "--bpp must lie in [1, 8]");
  cfg.preprocess.bpp = o.bpp;
  const KernelSpec k = parse_kernel(o.kernel.kind, o.kernel.rbf_sigma, o.kernel.mlp_params);
  cfg.haralick_kernel = cfg.concatenated_kernel = cfg.tier2_kernel = k;
  cfg.nmf_kernel = parse_kernel(o.nmf_kernel.value_or(o.kernel.kind), o.nmf_rbf_sigma.value_or(o.kernel.rbf_sigma),
                                o.nmf_mlp_params.value_or(o.kernel.mlp_params));
  if (!(o.C > 0)) throw Error(ErrorCode::InvalidArgument, "--C must be positive");
  if (!(o.tol > 0)) throw Error(ErrorCode::InvalidArgument, "--tol must be positive");
  cfg.svm.C = o.C;
  cfg.svm.tol = o.tol;
  if (o.nmf_k < 1) throw Error(ErrorCode::InvalidArgument, "--nmf-k must be >= 1");
  cfg.nmf.k = o.nmf_k;
  cfg.nmf.max_iters = o.nmf_iters;
  cfg.nmf.seed = o.seed;
  cfg.project.seed = o.seed;
  cfg.lm.seed = o.seed;
  return cfg;
}

json config_echo(const std::string& command, const Options& o, const PipelineConfig& cfg) {
  json j = {{"command", command},
            {"version", kVersion},
            {"seed", o.seed},
            {"preprocess",
             {{"top_fraction", cfg.preprocess.top_fraction},
              {"resize", {cfg.preprocess.width, cfg.preprocess.height}},
              {"bpp", cfg.preprocess.bpp}}},
            {"svm", {{"C", cfg.svm.C}, {"tol", cfg.svm.tol}, {"scale_features", cfg.svm.scale_features},
                     {"max_passes", cfg.svm.max_passes}}},
            {"kernel", kernel_echo(cfg.haralick_kernel)},
            {"nmf_kernel", kernel_echo(cfg.nmf_kernel)},
            {"nmf", {{"k", cfg.nmf.k}, {"max_iters", cfg.nmf.max_iters}, {"tol", cfg.nmf.tol}, {"seed", cfg.nmf.seed}}},
            {"project", {{"max_iters", cfg.project.max_iters}, {"tol", cfg.project.tol}, {"seed", cfg.project.seed}}},
            {"lm",
             {{"mu0", cfg.lm.mu0},
              {"mu_dec", cfg.lm.mu_dec},
              {"mu_inc", cfg.lm.mu_inc},
              {"mu_max", cfg.lm.mu_max},
              {"max_epochs", cfg.lm.max_epochs},
              {"goal_mse", cfg.lm.goal_mse},
              {"seed", cfg.lm.seed}}}};
  json paths = json::object();
  auto add = [&](const char* key, const std::string& v) {
    if (!v.empty()) paths[key] = v;
  };
  add("manifest", o.manifest);
  add("out", o.out);
  add("risk", o.risk);
  add("model", o.model);
  add("model_out", o.model_out);
  add("features", o.features);
  add("features_b", o.features_b);
  add("basis", o.basis);
  j["paths"] = std::move(paths);
  if (command == "extract") {
    j["feature"] = o.feature;
    j["masked"] = o.masked;
  }
  if (command == "train" || command == "loocv") j["pipeline"] = o.pipeline;
  if (command == "synth") j["n_per_class"] = o.n_per_class;
  return j;
}

void write_echo(const fs::path& path, const json& echo) { write_file_atomic(path, echo.dump(2) + "\n"); }

fs::path echo_path(const std::string& out) { return fs::path(out + ".config.json"); }

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " is required");
}

Pipeline image_pipeline(const std::string& name) {
  const auto p = parse_pipeline(name);
  if (!p || *p == Pipeline::Tier1Ann)
    throw Error(ErrorCode::InvalidArgument,
                "--pipeline must be one of haralick, nmf, concatenated, multilevel, tier2; got '" + name + "'");
  return *p;
}

std::vector<PreparedSample> prepared_from_manifest(const Options& o, const PipelineConfig& cfg) {
  require(o.manifest, "--manifest");
  const auto samples = load_dataset(o.manifest);
  return prepare(samples, cfg);
}

// ---------------------------------------------------------------------------

void cmd_extract(const Options& o) {
  require(o.out, "--out");
  const PipelineConfig cfg = pipeline_config(o);
  const auto kind = parse_feature_kind(o.feature);
  if (!kind) throw Error(ErrorCode::InvalidArgument, "--feature must be haralick28, nmf14 or concatenated42");
  const auto prepared = prepared_from_manifest(o, cfg);

  std::vector<FeatureVector> nmf;
  if (*kind != FeatureKind::Haralick28) {
    if (!o.basis.empty()) {
      const NmfModel model = nmf_model_from_json(read_text_file(o.basis));
      for (const auto& s : prepared) nmf.push_back(nmf_features(model, s, cfg));
    } else {
      auto [model, feats] = fit_nmf_features(prepared, cfg);
      write_file_atomic(o.out + ".nmf.json", to_json(model) + "\n");
      nmf = std::move(feats);
    }
  }

  std::vector<FeatureVector> rows;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    FeatureVector h = o.masked ? prepared[i].haralick_masked : prepared[i].haralick;
    h.source_id = prepared[i].id;
    if (*kind == FeatureKind::Haralick28) rows.push_back(std::move(h));
    else if (*kind == FeatureKind::Nmf14) rows.push_back(nmf[i]);
    else rows.push_back(concatenate(h, nmf[i]));
  }
  write_feature_csv(o.out, rows);
  write_echo(echo_path(o.out), config_echo("extract", o, cfg));
}

void cmd_train(const Options& o) {
  require(o.out, "--out");
  const PipelineConfig cfg = pipeline_config(o);
  TrainedPipeline t;
  t.pipeline = image_pipeline(o.pipeline);
  t.preprocess = cfg.preprocess;
  t.project = cfg.project;
  const auto prepared = prepared_from_manifest(o, cfg);
  t.models = train_all(prepared, t.pipeline, cfg);
  write_file_atomic(o.out, to_json(t) + "\n");
  write_echo(echo_path(o.out), config_echo("train", o, cfg));
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string prediction_csv(const std::vector<SampleOutcome>& outcomes) {
  std::string out = "id,predicted,score_a,score_b,chosen_model\n";
  for (const auto& s : outcomes) {
    out += s.id + ',' + label_name(s.predicted_stroke) + ',' + optional_cell(s.score_a) + ',' +
           optional_cell(s.score_b) + ',' + (s.chosen ? (*s.chosen == ChosenModel::A ? "A" : "B") : "") + '\n';
  }
  return out;
}

std::vector<SampleOutcome> predict_from_features(const TrainedPipeline& t, const Options& o) {
  const auto rows = read_feature_csv(o.features);
  std::vector<SampleOutcome> out;
  if (t.pipeline == Pipeline::MultiLevel) {
    require(o.features_b, "--features-b (NMF features for the multilevel model)");
    const auto rows_b = read_feature_csv(o.features_b);
    if (rows_b.size() != rows.size())
      throw Error(ErrorCode::DimensionMismatch, "--features and --features-b have different row counts");
    const FusedModel fm{*t.models.model_a, *t.models.model_b};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].source_id != rows_b[i].source_id)
        throw Error(ErrorCode::InvalidArgument, "feature files disagree on sample order at row " +
                                                    std::to_string(i + 1) + " ('" + rows[i].source_id + "' vs '" +
                                                    rows_b[i].source_id + "')");
      const FusedPrediction p = fuse_predict(fm, rows[i], rows_b[i]);
      out.push_back({rows[i].source_id, false, p.label > 0, p.chosen, p.score_a, p.score_b});
    }
    return out;
  }
  const SvmModel& m = t.models.model_a ? *t.models.model_a : *t.models.model_b;
  for (const auto& x : rows) {
    SampleOutcome s;
    s.id = x.source_id;
    try {
      s.predicted_stroke = predict(m, x) > 0;
      if (m.w_norm_sq > 0) (t.models.model_a ? s.score_a : s.score_b) = score(m, x);
    } catch (const Error& e) {
      throw Error(e.code(), "sample '" + x.source_id + "': " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

void cmd_predict(const Options& o) {
  require(o.out, "--out");
  require(o.model, "--model");
  const TrainedPipeline t = trained_pipeline_from_json(read_text_file(o.model));
  PipelineConfig cfg = pipeline_config(o);
  cfg.preprocess = t.preprocess;
  cfg.project = t.project;

  std::vector<SampleOutcome> outcomes;
  if (!o.features.empty()) {
    outcomes = predict_from_features(t, o);
  } else {
    for (const auto& s : prepared_from_manifest(o, cfg)) outcomes.push_back(evaluate_fold(t.models, s, t.pipeline, cfg));
  }
  write_file_atomic(o.out, prediction_csv(outcomes));
  write_echo(echo_path(o.out), config_echo("predict", o, cfg));
}

void emit_report(const EvalReport& r, const Options& o, const std::string& command, const PipelineConfig& cfg) {
  write_file_atomic(o.out, to_json(r) + "\n");
  write_echo(echo_path(o.out), config_echo(command, o, cfg));
  std::cout << render_report(r);
}

void cmd_loocv(const Options& o) {
  require(o.out, "--out");
  const PipelineConfig cfg = pipeline_config(o);
  const Pipeline p = image_pipeline(o.pipeline);
  const auto prepared = prepared_from_manifest(o, cfg);
  emit_report(loocv(std::span<const PreparedSample>(prepared), p, cfg), o, "loocv", cfg);
}

void cmd_tier2(const Options& o) {
  require(o.out, "--out");
  const PipelineConfig cfg = pipeline_config(o);
  require(o.manifest, "--manifest");
  const auto samples = load_dataset(o.manifest);
  bool any_lesion = false;
  for (const auto& s : samples) any_lesion = any_lesion || (s.stroke && s.lesion);
  if (!any_lesion)
    throw Error(ErrorCode::InvalidArgument, "tier2 needs lesion masks on stroke samples (manifest mask_path)");
  emit_report(loocv(samples, Pipeline::Tier2Masked, cfg), o, "tier2", cfg);
}

void cmd_tier1(const Options& o) {
  require(o.out, "--out");
  require(o.risk, "--risk");
  const PipelineConfig cfg = pipeline_config(o);
  const auto records = read_risk_csv(o.risk);
  const EvalReport r = loocv_tier1(records, cfg.lm, cfg.threads);
  fs::path model_out = o.model_out;
  if (model_out.empty()) {
    model_out = fs::path(o.out);
    model_out.replace_extension();
    model_out += ".model.json";
  }
  write_file_atomic(model_out, to_json(train_ann(records, cfg.lm).model) + "\n");
  emit_report(r, o, "tier1", cfg);
}

void cmd_synth(const Options& o) {
  require(o.out, "--out");
  const PipelineConfig cfg = pipeline_config(o);
  SynthSpec spec = SynthSpec::defaults();
  spec.seed = o.seed;
  spec.n_per_class = o.n_per_class;
  spec.width = cfg.preprocess.width;
  spec.height = cfg.preprocess.height;
  write_synthetic_corpus(spec, o.out);
  write_echo(fs::path(o.out) / "config.json", config_echo("synth", o, cfg));
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << std::endl;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output path");
  sub->add_option("--kernel", o.kernel.kind, "SVM kernel")->check(CLI::IsMember({"linear", "rbf", "mlp"}));
  sub->add_option("--rbf-sigma", o.kernel.rbf_sigma, "RBF width sigma in exp(-d^2 / (2 sigma^2))");
  sub->add_option("--mlp-params", o.kernel.mlp_params, "MLP kernel 'a,b' for tanh(a u.v + b)");
  sub->add_option("--nmf-kernel", o.nmf_kernel, "Kernel for the NMF model (default: --kernel)")
      ->check(CLI::IsMember({"linear", "rbf", "mlp"}));
  sub->add_option("--nmf-rbf-sigma", o.nmf_rbf_sigma, "RBF sigma for the NMF model");
  sub->add_option("--nmf-mlp-params", o.nmf_mlp_params, "MLP 'a,b' for the NMF model");
  sub->add_option("--C", o.C, "SVM box constraint");
  sub->add_option("--tol", o.tol, "SMO stopping tolerance");
  sub->add_option("--nmf-k", o.nmf_k, "NMF basis count");
  sub->add_option("--nmf-iters", o.nmf_iters, "NMF iteration cap");
  sub->add_option("--bpp", o.bpp, "Quantization depth for Haralick features");
  sub->add_option("--resize", o.resize, "Resample size WxH");
  sub->add_option("--seed", o.seed, "Seed for every random draw");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strokepipe: texture and risk-factor stroke classification toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto* extract = app.add_subcommand("extract", "Write per-sample feature vectors to CSV");
  add_common(extract, o);
  extract->add_option("--manifest", o.manifest, "Dataset manifest CSV");
  extract->add_option("--feature", o.feature, "haralick28 | nmf14 | concatenated42");
  extract->add_option("--basis", o.basis, "Fitted NMF basis JSON (otherwise fit on the manifest)");
  extract->add_flag("--masked", o.masked, "Drop lesion pixels from Haralick features");

  auto* trainc = app.add_subcommand("train", "Train a pipeline on a whole manifest");
  add_common(trainc, o);
  trainc->add_option("--manifest", o.manifest, "Dataset manifest CSV");
  trainc->add_option("--pipeline", o.pipeline, "haralick | nmf | concatenated | multilevel | tier2");

  auto* predictc = app.add_subcommand("predict", "Classify samples with a trained pipeline");
  add_common(predictc, o);
  predictc->add_option("--model", o.model, "Trained pipeline JSON");
  predictc->add_option("--manifest", o.manifest, "Images to classify");
  predictc->add_option("--features", o.features, "Feature CSV to classify instead of images");
  predictc->add_option("--features-b", o.features_b, "NMF feature CSV for a multilevel model");

  auto* loocvc = app.add_subcommand("loocv", "Leave-one-out evaluation of an image pipeline");
  add_common(loocvc, o);
  loocvc->add_option("--manifest", o.manifest, "Dataset manifest CSV");
  loocvc->add_option("--pipeline", o.pipeline, "haralick | nmf | concatenated | multilevel | tier2");

  auto* tier1 = app.add_subcommand("tier1", "Leave-one-out evaluation and fit of the risk-factor network");
  add_common(tier1, o);
  tier1->add_option("--risk", o.risk, "Risk-factor CSV");
  tier1->add_option("--model-out", o.model_out, "Where to write the network (default <out>.model.json)");

  auto* tier2 = app.add_subcommand("tier2", "Train on unmasked images, test on lesion-removed images");
  add_common(tier2, o);
  tier2->add_option("--manifest", o.manifest, "Dataset manifest CSV with lesion masks");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus (images, masks, risk table)");
  add_common(synth, o);
  synth->add_option("--n-per-class", o.n_per_class, "Samples per class");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*extract) cmd_extract(o);
    else if (*trainc) cmd_train(o);
    else if (*predictc) cmd_predict(o);
    else if (*loocvc) cmd_loocv(o);
    else if (*tier1) cmd_tier1(o);
    else if (*tier2) cmd_tier2(o);
    else if (*synth) cmd_synth(o);
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
