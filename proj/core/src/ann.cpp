#include "strokepipe/ann.hpp"

#include <cmath>
#include <string>

#include "strokepipe/error.hpp"
#include "strokepipe/rng.hpp"

namespace strokepipe {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::VectorXd with_bias(const Eigen::VectorXd& a) {
  Eigen::VectorXd out(a.size() + 1);
  out << a, 1.0;
  return out;
}

// Activations of every layer, a[0] = input.
std::vector<Eigen::VectorXd> activations(const Network& net, const Eigen::VectorXd& x) {
  std::vector<Eigen::VectorXd> a;
  a.reserve(net.weights.size() + 1);
  a.push_back(x);
  for (const auto& w : net.weights) a.push_back((w * with_bias(a.back())).unaryExpr(&sigmoid));
  return a;
}

void check_shapes(const Network& net, const Eigen::MatrixXd& inputs) {
  if (net.weights.empty()) throw Error(ErrorCode::InvalidArgument, "network has no layers");
  if (inputs.cols() != net.layer_sizes.front())
    throw Error(ErrorCode::DimensionMismatch, "network expects " + std::to_string(net.layer_sizes.front()) +
                                                  " inputs, got " + std::to_string(inputs.cols()));
  if (!inputs.allFinite()) throw Error(ErrorCode::NonFinite, "network input has non-finite values");
}

constexpr std::array<bool, kRiskInputs> kContinuous = {true, false, false, true, false,
                                                       false, false, false, true};

std::array<double, kRiskInputs> raw_inputs(const RiskRecord& r) {
  return {r.systolic_bp,   double(r.atrial_fibrillation), double(r.smoker),
          r.cholesterol,   double(r.diabetic),            double(r.exercises),
          double(r.obese), double(r.family_history),      r.age};
}

}  // namespace

Eigen::Index Network::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& w : weights) n += w.size();
  return n;
}

Network init_network(std::span<const int> layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw Error(ErrorCode::InvalidArgument, "network needs at least 2 layers");
  for (int s : layer_sizes)
    if (s < 1) throw Error(ErrorCode::InvalidArgument, "layer sizes must be positive");
  Network net;
  net.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  Rng rng(seed);
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l - 1] + 1;
    const double bound = 1.0 / std::sqrt(double(fan_in));
    Eigen::MatrixXd w(layer_sizes[l], fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-1.0, 1.0) * bound;
    net.weights.push_back(std::move(w));
  }
  return net;
}

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x) {
  if (x.size() != net.layer_sizes.front())
    throw Error(ErrorCode::DimensionMismatch, "network input has the wrong length");
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "network input has non-finite values");
  return activations(net, x).back();
}

Eigen::VectorXd parameters(const Network& net) {
  Eigen::VectorXd p(net.parameter_count());
  Eigen::Index k = 0;
  for (const auto& w : net.weights)
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) p(k++) = w(r, c);
  return p;
}

Network with_parameters(const Network& net, const Eigen::VectorXd& params) {
  if (params.size() != net.parameter_count())
    throw Error(ErrorCode::DimensionMismatch, "parameter vector has the wrong length");
  Network out = net;
  Eigen::Index k = 0;
  for (auto& w : out.weights)
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = params(k++);
  return out;
}

Eigen::MatrixXd jacobian(const Network& net, const Eigen::MatrixXd& inputs) {
  check_shapes(net, inputs);
  const int n_out = net.layer_sizes.back();
  const std::size_t n_layers = net.weights.size();

  std::vector<Eigen::Index> offset(n_layers, 0);
  for (std::size_t l = 1; l < n_layers; ++l) offset[l] = offset[l - 1] + net.weights[l - 1].size();

  Eigen::MatrixXd jac(inputs.rows() * n_out, net.parameter_count());
  for (Eigen::Index s = 0; s < inputs.rows(); ++s) {
    const auto a = activations(net, inputs.row(s).transpose());
    for (int q = 0; q < n_out; ++q) {
      // Backpropagate the unit vector on output q; sigmoid' = a (1 - a).
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(n_out);
      delta(q) = a.back()(q) * (1.0 - a.back()(q));
      auto row = jac.row(s * n_out + q);
      for (std::size_t l = n_layers; l-- > 0;) {
        const Eigen::VectorXd in = with_bias(a[l]);
        const auto& w = net.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
          for (Eigen::Index c = 0; c < w.cols(); ++c) row(offset[l] + r * w.cols() + c) = delta(r) * in(c);
        if (l > 0) {
          const Eigen::VectorXd back = w.leftCols(w.cols() - 1).transpose() * delta;
          delta = back.array() * a[l].array() * (1.0 - a[l].array());
        }
      }
    }
  }
  return jac;
}

double mse(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  check_shapes(net, inputs);
  double sum = 0.0;
  for (Eigen::Index s = 0; s < inputs.rows(); ++s)
    sum += (targets.row(s).transpose() - activations(net, inputs.row(s).transpose()).back()).squaredNorm();
  return sum / double(targets.size());
}

std::string_view to_string(LmStop stop) noexcept {
  switch (stop) {
    case LmStop::Goal: return "goal";
    case LmStop::MaxEpochs: return "max_epochs";
    case LmStop::MuOverflow: return "mu_overflow";
  }
  return "?";
}

LmResult train_lm(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                  std::span<const int> layer_sizes, const LmConfig& cfg) {
  return train_lm(inputs, targets, init_network(layer_sizes, cfg.seed), cfg);
}

LmResult train_lm(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, Network initial,
                  const LmConfig& cfg) {
  check_shapes(initial, inputs);
  if (targets.rows() != inputs.rows() || targets.cols() != initial.layer_sizes.back())
    throw Error(ErrorCode::DimensionMismatch, "target matrix shape does not match network outputs");
  if (!(cfg.mu0 > 0.0 && cfg.mu_dec > 0.0 && cfg.mu_dec < 1.0 && cfg.mu_inc > 1.0))
    throw Error(ErrorCode::InvalidArgument, "invalid LM damping schedule");

  const int n_out = initial.layer_sizes.back();
  LmResult res;
  res.net = std::move(initial);
  Eigen::VectorXd w = parameters(res.net);
  double current = mse(res.net, inputs, targets);
  res.mse_trace.push_back(current);
  double mu = cfg.mu0;

  auto residuals = [&](const Network& net) {
    Eigen::VectorXd e(inputs.rows() * n_out);
    for (Eigen::Index s = 0; s < inputs.rows(); ++s)
      e.segment(s * n_out, n_out) =
          targets.row(s).transpose() - activations(net, inputs.row(s).transpose()).back();
    return e;
  };

  res.stop = LmStop::MaxEpochs;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (current <= cfg.goal_mse) {
      res.stop = LmStop::Goal;
      break;
    }
    const Eigen::MatrixXd jac = jacobian(res.net, inputs);
    const Eigen::VectorXd e = residuals(res.net);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jte = jac.transpose() * e;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(jtj.rows(), jtj.cols());

    bool accepted = false;
    while (mu <= cfg.mu_max) {
      const Eigen::VectorXd step = (jtj + mu * eye).ldlt().solve(jte);
      Network trial = with_parameters(res.net, w + step);
      const double trial_mse = mse(trial, inputs, targets);
      if (std::isfinite(trial_mse) && trial_mse < current) {
        w += step;
        res.net = std::move(trial);
        current = trial_mse;
        mu *= cfg.mu_dec;
        accepted = true;
        break;
      }
      mu *= cfg.mu_inc;
    }
    if (!accepted) {
      res.stop = LmStop::MuOverflow;
      break;
    }
    res.mse_trace.push_back(current);
    res.epochs = epoch + 1;
  }
  if (res.stop == LmStop::MaxEpochs && current <= cfg.goal_mse) res.stop = LmStop::Goal;
  return res;
}

void validate(const RiskRecord& r) {
  const auto raw = raw_inputs(r);
  for (double v : raw)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "risk record " + r.id + " has a non-finite field");
  auto bad = [&](std::string_view field) {
    throw Error(ErrorCode::InvalidArgument, "risk record " + r.id + ": " + std::string(field) + " out of range");
  };
  if (r.systolic_bp < 60 || r.systolic_bp > 300) bad("systolic_bp");
  if (r.cholesterol < 50 || r.cholesterol > 500) bad("cholesterol");
  if (r.age < 1 || r.age > 120) bad("age");
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (!kContinuous[i] && raw[i] != 0.0 && raw[i] != 1.0) bad(kRiskFieldNames[i]);
}

RiskScaler::RiskScaler(std::array<double, kRiskInputs> lo, std::array<double, kRiskInputs> hi)
    : lo_(lo), hi_(hi) {}

RiskScaler RiskScaler::fit(std::span<const RiskRecord> data) {
  std::array<double, kRiskInputs> lo{}, hi{};
  for (std::size_t i = 0; i < kRiskInputs; ++i) {
    lo[i] = 0.0;
    hi[i] = 1.0;
  }
  bool first = true;
  for (const auto& r : data) {
    const auto raw = raw_inputs(r);
    for (std::size_t i = 0; i < kRiskInputs; ++i) {
      if (!kContinuous[i]) continue;
      lo[i] = first ? raw[i] : std::min(lo[i], raw[i]);
      hi[i] = first ? raw[i] : std::max(hi[i], raw[i]);
    }
    first = false;
  }
  return RiskScaler(lo, hi);
}

RiskScaler RiskScaler::identity() {
  std::array<double, kRiskInputs> lo{}, hi{};
  hi.fill(1.0);
  return RiskScaler(lo, hi);
}

ScaledRisk RiskScaler::apply(const RiskRecord& r) const {
  const auto raw = raw_inputs(r);
  std::array<double, kRiskInputs> out{};
  for (std::size_t i = 0; i < kRiskInputs; ++i) {
    if (!std::isfinite(raw[i])) throw Error(ErrorCode::NonFinite, "risk record " + r.id + " has a non-finite field");
    const double span = hi_[i] - lo_[i];
    out[i] = kContinuous[i] ? (span > 0.0 ? (raw[i] - lo_[i]) / span : 0.0) : raw[i];
  }
  return ScaledRisk(out);
}

RiskOutput forward(const AnnModel& m, const ScaledRisk& x) {
  const auto& v = x.values();
  const Eigen::VectorXd out = forward(m.net, Eigen::Map<const Eigen::VectorXd>(v.data(), kRiskInputs));
  return {out(0), out(1)};
}

RiskOutput forward(const AnnModel& m, const RiskRecord& r) { return forward(m, m.scaler.apply(r)); }

AnnTrainResult train_ann(std::span<const RiskRecord> data, const LmConfig& cfg) {
  if (data.size() < 2) throw Error(ErrorCode::InvalidArgument, "tier-1 training needs at least 2 records");
  bool pos = false, neg = false;
  for (const auto& r : data) {
    validate(r);
    (r.stroke ? pos : neg) = true;
  }
  if (!pos || !neg) throw Error(ErrorCode::SingleClass, "single-class risk data");

  AnnTrainResult out;
  out.model.scaler = RiskScaler::fit(data);
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd inputs(n, kRiskInputs);
  Eigen::MatrixXd targets(n, 2);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto& r = data[static_cast<std::size_t>(s)];
    const auto x = out.model.scaler.apply(r).values();
    for (int i = 0; i < kRiskInputs; ++i) inputs(s, i) = x[static_cast<std::size_t>(i)];
    targets(s, 0) = r.stroke ? 1.0 : 0.0;
    targets(s, 1) = r.stroke ? 0.0 : 1.0;
  }
  constexpr std::array<int, 3> kLayers = {kRiskInputs, 6, 2};
  out.lm = train_lm(inputs, targets, kLayers, cfg);
  out.model.net = out.lm.net;
  return out;
}

}  // namespace strokepipe
