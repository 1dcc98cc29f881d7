#ifndef INCI_SUPERVISED_HPP
#define INCI_SUPERVISED_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "inci/corpus.hpp"
#include "inci/features.hpp"

namespace inci {

template <typename Scalar>
using ClassScores = Eigen::Matrix<Scalar, kNumLabels, Eigen::Dynamic>;  // one column per example

template <typename Scalar>
using ClassVector = Eigen::Matrix<Scalar, kNumLabels, 1>;

template <typename Scalar>
using CostMatrixOf = Eigen::Matrix<Scalar, kNumLabels, kNumLabels>;

class EmptyBatch : public std::invalid_argument {
 public:
  EmptyBatch() : std::invalid_argument("loss over an empty batch") {}
};

class NoLabeledData : public std::invalid_argument {
 public:
  NoLabeledData() : std::invalid_argument("no labeled training examples") {}
};

// ---------------------------------------------------------------------------
// Loss kernels over logits. Each returns the batch-mean loss and its
// gradient with respect to the logits.

template <typename Scalar>
struct LogitLoss {
  Scalar value = 0;
  ClassScores<Scalar> grad;
};

/// Column-wise log-softmax, shifted by the column max.
template <typename Scalar>
ClassScores<Scalar> log_softmax(const ClassScores<Scalar>& logits) {
  ClassScores<Scalar> out(kNumLabels, logits.cols());
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    const Scalar m = logits.col(i).maxCoeff();
    const Scalar lse = m + std::log((logits.col(i).array() - m).exp().sum());
    out.col(i) = logits.col(i).array() - lse;
  }
  return out;
}

template <typename Scalar>
ClassScores<Scalar> softmax(const ClassScores<Scalar>& logits) {
  return log_softmax(logits).array().exp().matrix();
}

/// mean_i w[y_i] * -log p(y_i | x_i)
template <typename Scalar>
LogitLoss<Scalar> weighted_ce_on_logits(const ClassScores<Scalar>& logits, std::span<const int> labels,
                                        const ClassVector<Scalar>& weights) {
  const Eigen::Index n = logits.cols();
  if (n == 0) throw EmptyBatch();
  const auto logp = log_softmax(logits);
  LogitLoss<Scalar> out{Scalar(0), ClassScores<Scalar>(kNumLabels, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const Scalar w = weights(y);
    out.value += w * -logp(y, i);
    for (int k = 0; k < kNumLabels; ++k) {
      out.grad(k, i) = w * (std::exp(logp(k, i)) - Scalar(k == y ? 1 : 0));
    }
  }
  out.value /= Scalar(n);
  out.grad /= Scalar(n);
  return out;
}

/// mean_i w[y_i] * (1 - p_i)^gamma * -log p_i, with p_i = p(y_i | x_i).
/// At gamma = 0 this is weighted cross-entropy, value and gradient alike.
template <typename Scalar>
LogitLoss<Scalar> focal_on_logits(const ClassScores<Scalar>& logits, std::span<const int> labels,
                                  const ClassVector<Scalar>& weights, Scalar gamma) {
  const Eigen::Index n = logits.cols();
  if (n == 0) throw EmptyBatch();
  const auto logp = log_softmax(logits);
  LogitLoss<Scalar> out{Scalar(0), ClassScores<Scalar>(kNumLabels, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const Scalar w = weights(y);
    const Scalar lp = logp(y, i);
    const Scalar p = std::exp(lp);
    const Scalar q = -std::expm1(lp);  // 1 - p
    const Scalar modulator = gamma == Scalar(0) ? Scalar(1) : std::pow(q, gamma);
    out.value += w * modulator * -lp;
    // p * d/dp [q^gamma * -log p] = gamma p q^(gamma-1) log p - q^gamma
    const Scalar focus = (gamma == Scalar(0) || q == Scalar(0)) ? Scalar(0)
                                                                : gamma * p * std::pow(q, gamma - Scalar(1)) * lp;
    const Scalar scale = w * (focus - modulator);
    for (int k = 0; k < kNumLabels; ++k) {
      out.grad(k, i) = scale * (Scalar(k == y ? 1 : 0) - std::exp(logp(k, i)));
    }
  }
  out.value /= Scalar(n);
  out.grad /= Scalar(n);
  return out;
}

/// mean_i sum_k C[y_i][k] * p(k | x_i)
template <typename Scalar>
LogitLoss<Scalar> expected_cost_on_logits(const ClassScores<Scalar>& logits, std::span<const int> labels,
                                          const CostMatrixOf<Scalar>& cost) {
  const Eigen::Index n = logits.cols();
  if (n == 0) throw EmptyBatch();
  const auto probs = softmax(logits);
  LogitLoss<Scalar> out{Scalar(0), ClassScores<Scalar>(kNumLabels, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const Scalar expected = cost.row(y).dot(probs.col(i));
    out.value += expected;
    for (int j = 0; j < kNumLabels; ++j) out.grad(j, i) = probs(j, i) * (cost(y, j) - expected);
  }
  out.value /= Scalar(n);
  out.grad /= Scalar(n);
  return out;
}

// ---------------------------------------------------------------------------
// Model, objectives, decoding

struct ClassWeights {
  Eigen::Vector3d w = Eigen::Vector3d::Ones();

  /// w_c = N / (3 n_c). A class absent from training gets weight N / 3.
  static ClassWeights from_counts(const std::array<std::size_t, kNumLabels>& counts);
};

struct CostMatrix {
  Eigen::Matrix3d c;  // rows: true class, columns: predicted class

  /// [[0,1,4],[1,0,4],[8,6,0]]: missing a follow-up-required lesion costs most.
  static CostMatrix clinical_default();
  static CostMatrix zero_one();

  /// Throws std::invalid_argument unless non-negative with a zero diagonal.
  void validate() const;
};

nlohmann::ordered_json to_json(const CostMatrix& c);
CostMatrix cost_matrix_from_json(const nlohmann::json& j);
CostMatrix load_cost_matrix(const std::filesystem::path& path);

class SoftmaxModel {
 public:
  explicit SoftmaxModel(Eigen::Index n_features);

  Eigen::Index n_features() const { return weights.cols(); }
  Eigen::Vector3d logits(const FeatureVector& x) const;
  Eigen::Vector3d probabilities(const FeatureVector& x) const;

  Eigen::Matrix<double, kNumLabels, Eigen::Dynamic> weights;
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();
};

struct Example {
  FeatureVector x;
  IncidentalomaLabel y = IncidentalomaLabel::None;
};

/// Gradient with respect to model parameters; weight columns are sparse.
struct ParamGradient {
  std::map<std::uint32_t, Eigen::Vector3d> weights;
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();

  double squared_norm() const;
  void scale(double factor);
};

struct LossAndGradient {
  double value = 0.0;
  ParamGradient gradient;
};

LossAndGradient loss_weighted_ce(const SoftmaxModel& model, std::span<const Example> batch, const ClassWeights& w);
LossAndGradient loss_focal(const SoftmaxModel& model, std::span<const Example> batch, const ClassWeights& w,
                           double gamma);
LossAndGradient loss_expected_cost(const SoftmaxModel& model, std::span<const Example> batch, const CostMatrix& c);

enum class DecodeMode { Argmax, CostAware };

/// argmax_k p_k, ties to the lowest label.
IncidentalomaLabel argmax_label(const Eigen::Vector3d& probs);
/// argmin_k sum_j C[j][k] p_j, ties to the lowest label.
IncidentalomaLabel cost_aware_label(const Eigen::Vector3d& probs, const CostMatrix& cost);
IncidentalomaLabel decode(const SoftmaxModel& model, const FeatureVector& x, DecodeMode mode,
                          const CostMatrix& cost = CostMatrix::clinical_default());

enum class Objective { WeightedCE, Focal, ExpectedCost };

std::string_view to_string(Objective o);
Objective objective_from_string(std::string_view s);  // weighted-ce | focal | expected-cost
std::string_view to_string(DecodeMode m);
DecodeMode decode_mode_from_string(std::string_view s);  // argmax | cost-aware

struct TrainConfig {
  Objective objective = Objective::WeightedCE;
  double gamma = 2.0;
  double learning_rate = 0.1;
  double weight_decay = 0.01;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 0;
  CostMatrix cost_matrix = CostMatrix::clinical_default();
  int patience = 3;
  double clip_norm = 1.0;
  int hash_bits = kDefaultHashBits;
  std::size_t context_radius = 100;
  DecodeMode selection_decode = DecodeMode::Argmax;  // decode used for validation scoring

  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainedModel {
  SoftmaxModel model;
  TrainConfig config;
  ClassWeights class_weights;
  int best_epoch = 0;                   // 1-based
  std::vector<double> validation_curve;  // incidentaloma macro-F1 per epoch
};

/// "Anatomy: <Organ> | Lesion: <surface> | Context: <window>".
std::string build_input_string(const RadiologyReport& report, std::string_view lesion_id, std::size_t radius = 100);

struct KeyedExample {
  std::string report_id;
  std::string lesion_id;
  Example example;
};

/// One example per lesion. With `require_gold`, lesions lacking gold are
/// skipped; otherwise their label is left at 0.
std::vector<KeyedExample> lesion_examples(const std::vector<RadiologyReport>& corpus, int hash_bits,
                                          std::size_t radius, bool require_gold = true);

/// Mini-batch gradient descent with decoupled weight decay and global-norm
/// gradient clipping. After each epoch the model is scored on `validation`
/// (incidentaloma macro-F1); training stops after `patience` epochs without
/// improvement and the best-scoring model is returned. An empty validation
/// set falls back to scoring on the training set. Deterministic in
/// (data, cfg).
TrainedModel train(std::span<const Example> training, std::span<const Example> validation, const TrainConfig& cfg);

nlohmann::ordered_json to_json(const TrainedModel& m);
TrainedModel trained_model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& m, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace inci

#endif  // INCI_SUPERVISED_HPP
