#include "inci/supervised.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "inci/io.hpp"
#include "inci/random.hpp"
#include "inci/tagging.hpp"

namespace inci {

namespace {

constexpr std::string_view kModelFormat = "inci-softmax";
constexpr int kModelVersion = 1;

// Logits for a batch, one column per example.
Eigen::Matrix<double, kNumLabels, Eigen::Dynamic> batch_logits(const SoftmaxModel& model,
                                                               std::span<const Example> batch) {
  Eigen::Matrix<double, kNumLabels, Eigen::Dynamic> z(kNumLabels, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) z.col(static_cast<Eigen::Index>(i)) = model.logits(batch[i].x);
  return z;
}

std::vector<int> batch_labels(std::span<const Example> batch) {
  std::vector<int> y(batch.size());
  std::transform(batch.begin(), batch.end(), y.begin(), [](const Example& e) { return to_int(e.y); });
  return y;
}

// Chain rule from logit gradients to parameter gradients.
LossAndGradient to_params(const LogitLoss<double>& loss, std::span<const Example> batch) {
  LossAndGradient out;
  out.value = loss.value;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Eigen::Vector3d g = loss.grad.col(static_cast<Eigen::Index>(i));
    out.gradient.bias += g;
    for (const auto& [idx, v] : batch[i].x.entries) {
      auto [it, inserted] = out.gradient.weights.try_emplace(idx, Eigen::Vector3d::Zero());
      it->second += v * g;
    }
  }
  return out;
}

void check_features(const SoftmaxModel& model, const FeatureVector& x) {
  if (!x.entries.empty() && x.entries.back().first >= model.n_features()) {
    throw std::out_of_range("feature index outside the model's hash space");
  }
}

struct Counts {
  std::array<std::array<std::size_t, kNumLabels>, kNumLabels> m{};  // [gold][pred]
};

double f1_of(const Counts& c, int k) {
  std::size_t tp = c.m[k][k], fp = 0, fn = 0;
  for (int j = 0; j < kNumLabels; ++j) {
    if (j == k) continue;
    fp += c.m[j][k];
    fn += c.m[k][j];
  }
  const auto denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double incidentaloma_f1(const SoftmaxModel& model, std::span<const Example> data, const TrainConfig& cfg) {
  Counts c;
  for (const auto& e : data) {
    ++c.m[to_int(e.y)][to_int(decode(model, e.x, cfg.selection_decode, cfg.cost_matrix))];
  }
  return (f1_of(c, 1) + f1_of(c, 2)) / 2.0;
}

Eigen::Vector3d vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::ordered_json vec3_to_json(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }

}  // namespace

// ---------------------------------------------------------------------------

ClassWeights ClassWeights::from_counts(const std::array<std::size_t, kNumLabels>& counts) {
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  ClassWeights cw;
  for (int c = 0; c < kNumLabels; ++c) {
    cw.w(c) = n / (3.0 * static_cast<double>(std::max<std::size_t>(counts[c], 1)));
  }
  return cw;
}

CostMatrix CostMatrix::clinical_default() {
  CostMatrix c;
  c.c << 0, 1, 4,  //
      1, 0, 4,     //
      8, 6, 0;
  return c;
}

CostMatrix CostMatrix::zero_one() {
  CostMatrix c;
  c.c = Eigen::Matrix3d::Ones() - Eigen::Matrix3d::Identity();
  return c;
}

void CostMatrix::validate() const {
  if (!c.allFinite() || (c.array() < 0).any()) throw std::invalid_argument("cost matrix entries must be finite and >= 0");
  if (c.diagonal().cwiseAbs().maxCoeff() != 0.0) throw std::invalid_argument("cost matrix diagonal must be zero");
}

nlohmann::ordered_json to_json(const CostMatrix& c) {
  auto j = nlohmann::ordered_json::array();
  for (int r = 0; r < kNumLabels; ++r) j.push_back({c.c(r, 0), c.c(r, 1), c.c(r, 2)});
  return j;
}

CostMatrix cost_matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("cost matrix must be a 3x3 array");
  CostMatrix c;
  for (int r = 0; r < kNumLabels; ++r) c.c.row(r) = vec3_from_json(j[r]).transpose();
  c.validate();
  return c;
}

CostMatrix load_cost_matrix(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(io::read_file(path));
  return cost_matrix_from_json(j.is_object() ? j.at("cost_matrix") : j);
}

SoftmaxModel::SoftmaxModel(Eigen::Index n_features)
    : weights(Eigen::Matrix<double, kNumLabels, Eigen::Dynamic>::Zero(kNumLabels, n_features)) {}

Eigen::Vector3d SoftmaxModel::logits(const FeatureVector& x) const {
  check_features(*this, x);
  Eigen::Vector3d z = bias;
  for (const auto& [idx, v] : x.entries) z += v * weights.col(idx);
  return z;
}

Eigen::Vector3d SoftmaxModel::probabilities(const FeatureVector& x) const {
  Eigen::Matrix<double, kNumLabels, Eigen::Dynamic> z = logits(x);
  return softmax<double>(z);
}

double ParamGradient::squared_norm() const {
  double s = bias.squaredNorm();
  for (const auto& [idx, g] : weights) s += g.squaredNorm();
  return s;
}

void ParamGradient::scale(double factor) {
  bias *= factor;
  for (auto& [idx, g] : weights) g *= factor;
}

LossAndGradient loss_weighted_ce(const SoftmaxModel& model, std::span<const Example> batch, const ClassWeights& w) {
  if (batch.empty()) throw EmptyBatch();
  const auto y = batch_labels(batch);
  return to_params(weighted_ce_on_logits<double>(batch_logits(model, batch), y, w.w), batch);
}

LossAndGradient loss_focal(const SoftmaxModel& model, std::span<const Example> batch, const ClassWeights& w,
                           double gamma) {
  if (batch.empty()) throw EmptyBatch();
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  const auto y = batch_labels(batch);
  return to_params(focal_on_logits<double>(batch_logits(model, batch), y, w.w, gamma), batch);
}

LossAndGradient loss_expected_cost(const SoftmaxModel& model, std::span<const Example> batch, const CostMatrix& c) {
  if (batch.empty()) throw EmptyBatch();
  const auto y = batch_labels(batch);
  return to_params(expected_cost_on_logits<double>(batch_logits(model, batch), y, c.c), batch);
}

IncidentalomaLabel argmax_label(const Eigen::Vector3d& probs) {
  int best = 0;
  for (int k = 1; k < kNumLabels; ++k) {
    if (probs(k) > probs(best)) best = k;
  }
  return label_from_int(best);
}

IncidentalomaLabel cost_aware_label(const Eigen::Vector3d& probs, const CostMatrix& cost) {
  const Eigen::Vector3d expected = cost.c.transpose() * probs;  // expected(k) = sum_j C[j][k] p_j
  int best = 0;
  for (int k = 1; k < kNumLabels; ++k) {
    if (expected(k) < expected(best)) best = k;
  }
  return label_from_int(best);
}

IncidentalomaLabel decode(const SoftmaxModel& model, const FeatureVector& x, DecodeMode mode, const CostMatrix& cost) {
  const auto p = model.probabilities(x);
  return mode == DecodeMode::Argmax ? argmax_label(p) : cost_aware_label(p, cost);
}

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::WeightedCE: return "weighted-ce";
    case Objective::Focal: return "focal";
    case Objective::ExpectedCost: return "expected-cost";
  }
  return "?";
}

Objective objective_from_string(std::string_view s) {
  if (s == "weighted-ce") return Objective::WeightedCE;
  if (s == "focal") return Objective::Focal;
  if (s == "expected-cost") return Objective::ExpectedCost;
  throw std::invalid_argument("unknown objective '" + std::string(s) + "'");
}

std::string_view to_string(DecodeMode m) { return m == DecodeMode::Argmax ? "argmax" : "cost-aware"; }

DecodeMode decode_mode_from_string(std::string_view s) {
  if (s == "argmax") return DecodeMode::Argmax;
  if (s == "cost-aware") return DecodeMode::CostAware;
  throw std::invalid_argument("unknown decode mode '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(gamma >= 0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(weight_decay >= 0) || learning_rate * weight_decay >= 1) {
    throw std::invalid_argument("weight_decay must be >= 0 with learning_rate * weight_decay < 1");
  }
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (patience <= 0) throw std::invalid_argument("patience must be positive");
  if (!(clip_norm > 0)) throw std::invalid_argument("clip_norm must be > 0");
  if (hash_bits < 1 || hash_bits > 24) throw std::invalid_argument("hash_bits must lie in [1, 24]");
  cost_matrix.validate();
}

nlohmann::ordered_json to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["objective"] = to_string(cfg.objective);
  j["gamma"] = cfg.gamma;
  j["learning_rate"] = cfg.learning_rate;
  j["weight_decay"] = cfg.weight_decay;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["cost_matrix"] = to_json(cfg.cost_matrix);
  j["patience"] = cfg.patience;
  j["clip_norm"] = cfg.clip_norm;
  j["hash_bits"] = cfg.hash_bits;
  j["context_radius"] = cfg.context_radius;
  j["selection_decode"] = to_string(cfg.selection_decode);
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  if (j.contains("objective")) cfg.objective = objective_from_string(j["objective"].get<std::string>());
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("cost_matrix")) cfg.cost_matrix = cost_matrix_from_json(j["cost_matrix"]);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
  cfg.hash_bits = j.value("hash_bits", cfg.hash_bits);
  cfg.context_radius = j.value("context_radius", cfg.context_radius);
  if (j.contains("selection_decode")) {
    cfg.selection_decode = decode_mode_from_string(j["selection_decode"].get<std::string>());
  }
  cfg.validate();
  return cfg;
}

std::string build_input_string(const RadiologyReport& report, std::string_view lesion_id, std::size_t radius) {
  const auto* lesion = report.find_lesion(lesion_id);
  if (lesion == nullptr) throw UnknownLesion(std::string(lesion_id));
  return "Anatomy: " + std::string(display_name(lesion->anatomy)) + " | Lesion: " + lesion->surface +
         " | Context: " + context_window(report, lesion_id, radius);
}

std::vector<KeyedExample> lesion_examples(const std::vector<RadiologyReport>& corpus, int hash_bits,
                                          std::size_t radius, bool require_gold) {
  std::vector<KeyedExample> out;
  for (const auto& report : corpus) {
    for (const auto& lesion : report.lesions) {
      if (require_gold && !lesion.gold_label) continue;
      KeyedExample ke{report.report_id, lesion.lesion_id, {}};
      ke.example.x = featurize(build_input_string(report, lesion.lesion_id, radius), hash_bits);
      ke.example.y = lesion.gold_label.value_or(IncidentalomaLabel::None);
      out.push_back(std::move(ke));
    }
  }
  return out;
}

TrainedModel train(std::span<const Example> training, std::span<const Example> validation, const TrainConfig& cfg) {
  cfg.validate();
  if (training.empty()) throw NoLabeledData();

  std::array<std::size_t, kNumLabels> counts{};
  for (const auto& e : training) ++counts[to_int(e.y)];
  const auto class_weights = ClassWeights::from_counts(counts);
  const auto selection = validation.empty() ? training : validation;

  const Eigen::Index dim = Eigen::Index{1} << cfg.hash_bits;
  for (const auto& e : training) {
    if (!e.x.entries.empty() && e.x.entries.back().first >= dim) {
      throw std::out_of_range("training feature index outside 2^hash_bits");
    }
  }

  // Weights are held as scale * v so that decay costs O(1) per step.
  SoftmaxModel model(dim);
  SoftmaxModel v(dim);
  double scale = 1.0;
  const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;

  TrainedModel best{SoftmaxModel(dim), cfg, class_weights, 0, {}};
  double best_score = -std::numeric_limits<double>::infinity();
  int stale = 0;

  std::vector<std::size_t> order(training.size());
  std::vector<Example> batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
    }

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(training[order[i]]);

      // Only the touched columns of the effective model are needed for the loss.
      for (const auto& e : batch) {
        for (const auto& [idx, val] : e.x.entries) model.weights.col(idx) = scale * v.weights.col(idx);
      }
      model.bias = v.bias;

      LossAndGradient lg;
      switch (cfg.objective) {
        case Objective::WeightedCE: lg = loss_weighted_ce(model, batch, class_weights); break;
        case Objective::Focal: lg = loss_focal(model, batch, class_weights, cfg.gamma); break;
        case Objective::ExpectedCost: lg = loss_expected_cost(model, batch, cfg.cost_matrix); break;
      }
      const double norm = std::sqrt(lg.gradient.squared_norm());
      if (norm > cfg.clip_norm) lg.gradient.scale(cfg.clip_norm / norm);

      // w <- decay * w - lr * g; bias is not decayed
      scale *= decay;
      for (const auto& [idx, g] : lg.gradient.weights) v.weights.col(idx) -= (cfg.learning_rate / scale) * g;
      v.bias -= cfg.learning_rate * lg.gradient.bias;
      if (scale < 1e-8) {
        v.weights *= scale;
        scale = 1.0;
      }
    }

    model.weights = scale * v.weights;
    model.bias = v.bias;
    const double score = incidentaloma_f1(model, selection, cfg);
    best.validation_curve.push_back(score);
    if (score > best_score) {
      best_score = score;
      best.model = model;
      best.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return best;
}

nlohmann::ordered_json to_json(const TrainedModel& m) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["hash_bits"] = m.config.hash_bits;
  auto weights = nlohmann::ordered_json::array();
  for (Eigen::Index c = 0; c < m.model.weights.cols(); ++c) {
    const Eigen::Vector3d w = m.model.weights.col(c);
    if (!w.isZero(0.0)) weights.push_back({{"index", c}, {"w", vec3_to_json(w)}});
  }
  j["weights"] = std::move(weights);
  j["bias"] = vec3_to_json(m.model.bias);
  j["train_config"] = to_json(m.config);
  j["class_weights"] = vec3_to_json(m.class_weights.w);
  j["best_epoch"] = m.best_epoch;
  j["validation_curve"] = m.validation_curve;
  return j;
}

TrainedModel trained_model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != kModelFormat) throw std::invalid_argument("not a model file");
  if (j.value("version", 0) != kModelVersion) throw std::invalid_argument("unsupported model version");
  const auto cfg = train_config_from_json(j.at("train_config"));
  const int bits = j.at("hash_bits").get<int>();
  if (bits != cfg.hash_bits) throw std::invalid_argument("hash_bits disagrees with train_config");
  const Eigen::Index dim = Eigen::Index{1} << bits;

  TrainedModel m{SoftmaxModel(dim), cfg, {}, j.value("best_epoch", 0), {}};
  for (const auto& entry : j.at("weights")) {
    const auto idx = entry.at("index").get<Eigen::Index>();
    if (idx < 0 || idx >= dim) throw std::invalid_argument("weight index outside hash space");
    m.model.weights.col(idx) = vec3_from_json(entry.at("w"));
  }
  m.model.bias = vec3_from_json(j.at("bias"));
  m.class_weights.w = vec3_from_json(j.at("class_weights"));
  if (j.contains("validation_curve")) m.validation_curve = j["validation_curve"].get<std::vector<double>>();
  if (!m.model.weights.allFinite() || !m.model.bias.allFinite()) throw std::invalid_argument("non-finite model weights");
  return m;
}

void save_model(const TrainedModel& m, const std::filesystem::path& path) { io::write_file(path, to_json(m).dump() + "\n"); }

TrainedModel load_model(const std::filesystem::path& path) {
  return trained_model_from_json(nlohmann::json::parse(io::read_file(path)));
}

}  // namespace inci
