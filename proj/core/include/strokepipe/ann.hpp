#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace strokepipe {

// ---------------------------------------------------------------------------
// Generic fully-connected sigmoid network.

/// Layer l maps a_{l-1} to sigmoid(W_l [a_{l-1}; 1]); W_l is
/// out x (in + 1) with the bias in the last column.
struct Network {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;

  Eigen::Index parameter_count() const;
};

/// Weights drawn uniformly from [-1, 1] / sqrt(fan_in + 1).
Network init_network(std::span<const int> layer_sizes, std::uint64_t seed);

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x);

/// Row-major per layer, layers in order.
Eigen::VectorXd parameters(const Network& net);
Network with_parameters(const Network& net, const Eigen::VectorXd& params);

/// d outputs / d parameters for every sample. Row s * n_out + q holds the
/// gradient of output q on sample s (inputs are rows of `inputs`).
Eigen::MatrixXd jacobian(const Network& net, const Eigen::MatrixXd& inputs);

/// Mean squared error over all samples and outputs.
double mse(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

struct LmConfig {
  double mu0 = 0.1;
  double mu_dec = 0.5;
  double mu_inc = 10.0;
  double mu_max = 1e10;
  int max_epochs = 200;
  double goal_mse = 1e-6;
  std::uint64_t seed = 42;
};

enum class LmStop { Goal, MaxEpochs, MuOverflow };

std::string_view to_string(LmStop stop) noexcept;

struct LmResult {
  Network net;
  std::vector<double> mse_trace;  // [initial, after each accepted epoch]
  int epochs = 0;
  LmStop stop = LmStop::MaxEpochs;
};

/// Levenberg-Marquardt: each epoch solves (J'J + mu I) d = J'e with
/// e = targets - outputs. A step that lowers the MSE is accepted and mu is
/// multiplied by mu_dec; otherwise it is rejected and mu grows by mu_inc.
LmResult train_lm(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                  std::span<const int> layer_sizes, const LmConfig& cfg);
LmResult train_lm(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, Network initial,
                  const LmConfig& cfg);

// ---------------------------------------------------------------------------
// Tier-1 risk model.

inline constexpr int kRiskInputs = 9;

struct RiskRecord {
  std::string id;
  double systolic_bp = 120;  // mmHg
  int atrial_fibrillation = 0;
  int smoker = 0;
  double cholesterol = 180;  // mg/dL
  int diabetic = 0;
  int exercises = 0;
  int obese = 0;
  int family_history = 0;
  double age = 40;  // years
  bool stroke = false;
};

/// Input column names in network order; age is the ninth input.
inline constexpr std::array<std::string_view, kRiskInputs> kRiskFieldNames = {
    "systolic_bp", "atrial_fibrillation", "smoker", "cholesterol", "diabetic",
    "exercises",   "obese",               "family_history", "age"};

/// Throws InvalidArgument if a field is out of range, NonFinite for NaN/inf.
void validate(const RiskRecord& r);

/// Network input produced by RiskScaler. Only the scaler can build one, so
/// an already-scaled input cannot be scaled again.
class ScaledRisk {
 public:
  const std::array<double, kRiskInputs>& values() const noexcept { return v_; }

 private:
  friend class RiskScaler;
  explicit ScaledRisk(const std::array<double, kRiskInputs>& v) : v_(v) {}
  std::array<double, kRiskInputs> v_;
};

/// Min-max scaling of the continuous fields (bp, cholesterol, age);
/// binary fields pass through unchanged.
class RiskScaler {
 public:
  RiskScaler() = default;
  RiskScaler(std::array<double, kRiskInputs> lo, std::array<double, kRiskInputs> hi);

  static RiskScaler fit(std::span<const RiskRecord> data);
  static RiskScaler identity();

  ScaledRisk apply(const RiskRecord& r) const;

  const std::array<double, kRiskInputs>& lo() const noexcept { return lo_; }
  const std::array<double, kRiskInputs>& hi() const noexcept { return hi_; }

 private:
  std::array<double, kRiskInputs> lo_{};
  std::array<double, kRiskInputs> hi_{};
};

struct AnnModel {
  Network net;  // [9, 6, 2]
  RiskScaler scaler;
};

struct RiskOutput {
  double p_stroke = 0.0;
  double p_normal = 0.0;
  bool predicts_stroke() const noexcept { return p_stroke >= p_normal; }
};

RiskOutput forward(const AnnModel& m, const ScaledRisk& x);
RiskOutput forward(const AnnModel& m, const RiskRecord& r);

struct AnnTrainResult {
  AnnModel model;
  LmResult lm;
};

/// Fits the scaler on `data`, then trains a 9-6-2 network with one-hot
/// targets (stroke -> (1, 0)).
AnnTrainResult train_ann(std::span<const RiskRecord> data, const LmConfig& cfg = {});

}  // namespace strokepipe
