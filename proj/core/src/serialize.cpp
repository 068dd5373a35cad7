#include "strokepipe/serialize.hpp"

#include <json.hpp>

#include "strokepipe/error.hpp"

namespace strokepipe {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw Error(ErrorCode::Format, "matrix data does not match its dimensions");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

json kernel_json(const KernelSpec& k) {
  json j = {{"kind", to_string(k.kind)}};
  if (k.kind == KernelSpec::Kind::Rbf) j["sigma"] = k.sigma;
  if (k.kind == KernelSpec::Kind::Mlp) {
    j["scale"] = k.scale;
    j["offset"] = k.offset;
  }
  return j;
}

KernelSpec kernel_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear") return KernelSpec::linear();
  if (kind == "rbf") return KernelSpec::rbf(j.at("sigma").get<double>());
  if (kind == "mlp") return KernelSpec::mlp(j.at("scale").get<double>(), j.at("offset").get<double>());
  throw Error(ErrorCode::Format, "unknown kernel kind '" + kind + "'");
}

json svm_json(const SvmModel& m) {
  return {
      {"type", "svm"},
      {"feature_kind", to_string(m.feature_kind)},
      {"kernel", kernel_json(m.kernel)},
      {"C", m.C},
      {"scaler", {{"min", m.scaler.lo}, {"max", m.scaler.hi}}},
      {"dimension", m.dimension()},
      {"support_vectors", m.support_vectors},
      {"alphas", m.alphas},
      {"labels", m.labels},
      {"bias", m.bias},
      {"w_norm_sq", m.w_norm_sq},
      {"diagnostics",
       {{"iterations", m.diagnostics.iterations},
        {"converged", m.diagnostics.converged},
        {"kkt_gap", m.diagnostics.kkt_gap}}},
  };
}

SvmModel svm_from(const json& j) {
  if (j.at("type") != "svm") throw Error(ErrorCode::Format, "document is not an SVM model");
  SvmModel m;
  const auto kind = parse_feature_kind(j.at("feature_kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::Format, "unknown feature kind in SVM model");
  m.feature_kind = *kind;
  m.kernel = kernel_from(j.at("kernel"));
  m.C = j.at("C").get<double>();
  m.scaler.lo = j.at("scaler").at("min").get<std::vector<double>>();
  m.scaler.hi = j.at("scaler").at("max").get<std::vector<double>>();
  m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
  m.alphas = j.at("alphas").get<std::vector<double>>();
  m.labels = j.at("labels").get<std::vector<int>>();
  m.bias = j.at("bias").get<double>();
  m.w_norm_sq = j.at("w_norm_sq").get<double>();
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    m.diagnostics = {d.at("iterations").get<long>(), d.at("converged").get<bool>(), d.at("kkt_gap").get<double>()};
  }
  if (m.alphas.size() != m.support_vectors.size() || m.labels.size() != m.support_vectors.size())
    throw Error(ErrorCode::Format, "SVM model arrays differ in length");
  for (const auto& sv : m.support_vectors)
    if (sv.size() != m.dimension()) throw Error(ErrorCode::Format, "support vectors differ in length");
  if (!m.scaler.empty() && (m.scaler.lo.size() != m.dimension() || m.scaler.hi.size() != m.dimension()))
    throw Error(ErrorCode::Format, "scaler dimension does not match support vectors");
  return m;
}

json nmf_json(const NmfModel& m) {
  return {{"type", "nmf"},
          {"k", m.k},
          {"image_shape", {m.image_width, m.image_height}},
          {"basis", matrix_json(m.basis)},
          {"objective_trace", m.objective_trace}};
}

NmfModel nmf_from(const json& j) {
  if (j.at("type") != "nmf") throw Error(ErrorCode::Format, "document is not an NMF model");
  NmfModel m;
  m.k = j.at("k").get<int>();
  const auto shape = j.at("image_shape").get<std::vector<int>>();
  if (shape.size() != 2) throw Error(ErrorCode::Format, "image_shape must have two entries");
  m.image_width = shape[0];
  m.image_height = shape[1];
  m.basis = matrix_from(j.at("basis"));
  if (m.basis.cols() != m.k) throw Error(ErrorCode::Format, "NMF basis width differs from k");
  if (j.contains("objective_trace")) m.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  return m;
}

template <typename F>
auto parse_with(std::string_view text, F&& f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed model JSON: ") + e.what());
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string to_json(const SvmModel& m) { return svm_json(m).dump(2); }

SvmModel svm_model_from_json(std::string_view text) {
  return parse_with(text, [](const json& j) { return svm_from(j); });
}

std::string to_json(const FusedModel& m) {
  return json{{"type", "fused"}, {"tie_break", "prefer_a"}, {"model_a", svm_json(m.model_a)}, {"model_b", svm_json(m.model_b)}}
      .dump(2);
}

FusedModel fused_model_from_json(std::string_view text) {
  return parse_with(text, [](const json& j) {
    if (j.at("type") != "fused") throw Error(ErrorCode::Format, "document is not a fused model");
    FusedModel m{svm_from(j.at("model_a")), svm_from(j.at("model_b"))};
    if (m.model_a.feature_kind == m.model_b.feature_kind)
      throw Error(ErrorCode::FeatureKindMismatch, "fused models must use different feature kinds");
    return m;
  });
}

std::string to_json(const NmfModel& m) { return nmf_json(m).dump(2); }

NmfModel nmf_model_from_json(std::string_view text) {
  return parse_with(text, [](const json& j) { return nmf_from(j); });
}

std::string to_json(const AnnModel& m) {
  json layers = json::array();
  for (const auto& w : m.net.weights) layers.push_back(matrix_json(w));
  return json{{"type", "ann"},
              {"layer_sizes", m.net.layer_sizes},
              {"activation", "logistic"},
              {"inputs", kRiskFieldNames},
              {"weights", std::move(layers)},
              {"scaler", {{"min", m.scaler.lo()}, {"max", m.scaler.hi()}}}}
      .dump(2);
}

AnnModel ann_model_from_json(std::string_view text) {
  return parse_with(text, [](const json& j) {
    if (j.at("type") != "ann") throw Error(ErrorCode::Format, "document is not an ANN model");
    AnnModel m;
    m.net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    for (const auto& w : j.at("weights")) m.net.weights.push_back(matrix_from(w));
    if (m.net.weights.size() + 1 != m.net.layer_sizes.size())
      throw Error(ErrorCode::Format, "ANN weights do not match layer_sizes");
    for (std::size_t l = 0; l < m.net.weights.size(); ++l)
      if (m.net.weights[l].rows() != m.net.layer_sizes[l + 1] || m.net.weights[l].cols() != m.net.layer_sizes[l] + 1)
        throw Error(ErrorCode::Format, "ANN weight shape mismatch in layer " + std::to_string(l));
    if (m.net.layer_sizes.front() != kRiskInputs || m.net.layer_sizes.back() != 2)
      throw Error(ErrorCode::Format, "risk model must map 9 inputs to 2 outputs");
    m.scaler = RiskScaler(j.at("scaler").at("min").get<std::array<double, kRiskInputs>>(),
                          j.at("scaler").at("max").get<std::array<double, kRiskInputs>>());
    return m;
  });
}

std::string to_json(const EvalReport& r) {
  json samples = json::array();
  for (const auto& s : r.per_sample) {
    json row = {{"id", s.id},
                {"truth", label_name(s.truth_stroke)},
                {"predicted", label_name(s.predicted_stroke)},
                {"score_a", optional_number(s.score_a)},
                {"score_b", optional_number(s.score_b)}};
    row["chosen_model"] = s.chosen ? json(*s.chosen == ChosenModel::A ? "A" : "B") : json(nullptr);
    samples.push_back(std::move(row));
  }
  const auto& c = r.confusion;
  return json{{"type", "eval_report"},
              {"pipeline", to_string(r.pipeline)},
              {"confusion", {{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}}},
              {"sn", optional_number(r.metrics.sn)},
              {"sp", optional_number(r.metrics.sp)},
              {"ac", optional_number(r.metrics.ac)},
              {"display", {{"sn", format_percent(r.metrics.sn)}, {"sp", format_percent(r.metrics.sp)}, {"ac", format_percent(r.metrics.ac)}}},
              {"per_sample", std::move(samples)}}
      .dump(2);
}

std::string to_json(const FoldModels& f) {
  json j = json::object();
  if (f.model_a) j["model_a"] = svm_json(*f.model_a);
  if (f.model_b) j["model_b"] = svm_json(*f.model_b);
  if (f.nmf) j["nmf"] = nmf_json(*f.nmf);
  return j.dump();
}

std::string to_json(const TrainedPipeline& t) {
  json j = {{"type", "pipeline"},
            {"pipeline", to_string(t.pipeline)},
            {"preprocess",
             {{"top_fraction", t.preprocess.top_fraction},
              {"width", t.preprocess.width},
              {"height", t.preprocess.height},
              {"bpp", t.preprocess.bpp}}},
            {"project", {{"max_iters", t.project.max_iters}, {"tol", t.project.tol}, {"seed", t.project.seed}}}};
  if (t.models.model_a) j["model_a"] = svm_json(*t.models.model_a);
  if (t.models.model_b) j["model_b"] = svm_json(*t.models.model_b);
  if (t.models.nmf) j["nmf"] = nmf_json(*t.models.nmf);
  return j.dump(2);
}

TrainedPipeline trained_pipeline_from_json(std::string_view text) {
  return parse_with(text, [](const json& j) {
    if (j.at("type") != "pipeline") throw Error(ErrorCode::Format, "document is not a trained pipeline");
    TrainedPipeline t;
    const auto name = j.at("pipeline").get<std::string>();
    const auto p = parse_pipeline(name);
    if (!p || *p == Pipeline::Tier1Ann) throw Error(ErrorCode::Format, "unknown image pipeline '" + name + "'");
    t.pipeline = *p;
    const auto& pre = j.at("preprocess");
    t.preprocess = {pre.at("top_fraction").get<double>(), pre.at("width").get<int>(), pre.at("height").get<int>(),
                    pre.at("bpp").get<int>()};
    const auto& pr = j.at("project");
    t.project = {pr.at("max_iters").get<int>(), pr.at("tol").get<double>(), pr.at("seed").get<std::uint64_t>()};
    if (j.contains("model_a")) t.models.model_a = svm_from(j.at("model_a"));
    if (j.contains("model_b")) t.models.model_b = svm_from(j.at("model_b"));
    if (j.contains("nmf")) t.models.nmf = nmf_from(j.at("nmf"));
    const bool needs_a = t.pipeline != Pipeline::NmfOnly;
    const bool needs_b = t.pipeline == Pipeline::NmfOnly || t.pipeline == Pipeline::MultiLevel;
    const bool needs_nmf = needs_b || t.pipeline == Pipeline::Concatenated;
    if (needs_a != t.models.model_a.has_value() || needs_b != t.models.model_b.has_value() ||
        needs_nmf != t.models.nmf.has_value())
      throw Error(ErrorCode::Format, "trained pipeline '" + name + "' is missing or has extra models");
    return t;
  });
}

}  // namespace strokepipe
