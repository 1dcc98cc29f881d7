#ifndef INCI_EVALUATION_HPP
#define INCI_EVALUATION_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "inci/corpus.hpp"
#include "inci/ensemble.hpp"
#include "inci/predictions.hpp"

namespace inci {

class EmptyMatrix : public std::invalid_argument {
 public:
  EmptyMatrix() : std::invalid_argument("metrics of an empty confusion matrix") {}
};

class EmptyPool : public std::invalid_argument {
 public:
  EmptyPool() : std::invalid_argument("bootstrap pool is empty") {}
};

/// Rows are gold, columns predicted.
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, kNumLabels, kNumLabels> counts = decltype(counts)::Zero();

  std::int64_t total() const { return counts.sum(); }
  void add(IncidentalomaLabel gold, IncidentalomaLabel pred) { ++counts(to_int(gold), to_int(pred)); }
};

/// Throws KeyMismatch unless gold and pred cover exactly the same items.
ConfusionMatrix confusion(const LabelTable& gold, const LabelTable& pred);

enum class MacroMode {
  PresentClasses,  // classes absent from both gold and predictions are left out
  AllClasses,      // always the mean of three F1 values
};

struct MetricsReport {
  std::array<double, kNumLabels> precision{};
  std::array<double, kNumLabels> recall{};
  std::array<double, kNumLabels> f1{};
  std::array<std::int64_t, kNumLabels> support{};
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double incidentaloma_macro_f1 = 0.0;  // (f1[1] + f1[2]) / 2
  double miss_rate_class2 = 0.0;        // gold 2 predicted 0, over gold 2
  std::int64_t n = 0;
  ConfusionMatrix confusion;
};

/// Per-class scores use F1 = 0 when precision + recall = 0, and also for a
/// class absent from both gold and predictions. Such a class is left out of
/// macro_f1 under PresentClasses.
MetricsReport metrics(const ConfusionMatrix& cm, MacroMode macro = MacroMode::PresentClasses);

double incidentaloma_macro_f1(double f1_no_risk, double f1_follow_up);

/// Macro-F1 alone, without building a report. 0 for an empty matrix.
double macro_f1(const ConfusionMatrix& cm, MacroMode macro = MacroMode::PresentClasses);

/// Decimal half-up rounding. Values within 1e-6 of a unit in the last place
/// of a tie (0.78499999... for 0.785) count as the tie.
double round_half_up(double x, int decimals);
std::string format_fixed(double x, int decimals);

enum class AgreementLevel { Document, Lesion };

/// Metrics of annotator b against reference a. At Document level items are
/// grouped by report_id and each report takes its maximum label. Per-class F1
/// is symmetric under swapping a and b; support is not.
MetricsReport iaa(const LabelTable& a, const LabelTable& b, AgreementLevel level);

struct ErrorPatterns {
  std::int64_t gold_no_risk = 0;  // gold 1
  std::int64_t gold_follow_up = 0;  // gold 2
  std::int64_t gold_none = 0;       // gold 0
  std::int64_t missed = 0;          // 2 -> 0
  std::int64_t underestimated = 0;  // 2 -> 1
  std::int64_t false_positives = 0;  // 0 -> 1 or 2
  std::int64_t escalated = 0;        // 1 -> 2

  double missed_rate() const;           // over gold 2
  double underestimation_rate() const;  // over gold 2
  double false_positive_rate() const;   // over gold 0
  double escalation_rate() const;       // over gold 1
};

ErrorPatterns error_patterns(const ConfusionMatrix& cm);
ErrorPatterns error_patterns(const LabelTable& gold, const LabelTable& pred);

struct BootstrapOptions {
  int n_resamples = 1000;
  std::uint64_t seed = 1;
  bool restrict_to_incidentalomas = true;  // pool = items with gold 1 or 2
  MacroMode macro = MacroMode::PresentClasses;
};

struct BootstrapResult {
  std::string model_a;
  std::string model_b;
  double mean_delta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  int n_resamples = 0;
  std::uint64_t seed = 0;
  bool restricted_to_incidentalomas = true;
  MacroMode macro = MacroMode::PresentClasses;
  std::size_t pool_size = 0;

  bool operator==(const BootstrapResult&) const = default;
};

/// Paired bootstrap of macro-F1(A) - macro-F1(B). Resample r draws from its
/// own stream derived from (seed, r). CI is the 2.5/97.5 percentile pair with
/// linear interpolation; p = 2 min(frac(delta <= 0), frac(delta >= 0)),
/// capped at 1.
BootstrapResult bootstrap_pairwise(const LabelTable& gold, const PredictionSet& a, const PredictionSet& b,
                                   const BootstrapOptions& opts = {});

/// Percentile of sorted values, linear interpolation between order statistics.
double percentile(const std::vector<double>& sorted, double q);

/// Lesion labels lifted to anatomy items (report_id, anatomy), seven per
/// report, by taking the maximum. Reports with a lesion missing from the
/// table are skipped.
LabelTable to_anatomy_level(const LabelTable& lesion_labels, const std::vector<RadiologyReport>& corpus);

/// Subset of `table` whose keys appear in `keys`.
LabelTable restrict_to(const LabelTable& table, const LabelTable& keys);

std::string_view to_string(MacroMode m);
MacroMode macro_mode_from_string(std::string_view s);  // present | all

/// JSON with metric values rounded to 3 decimals.
nlohmann::ordered_json to_json(const MetricsReport& m);
nlohmann::ordered_json to_json(const ErrorPatterns& e);
nlohmann::ordered_json to_json(const BootstrapResult& r);

/// Console table, 2 decimals.
std::string format_metrics_table(const MetricsReport& m, const std::string& title);

}  // namespace inci

#endif  // INCI_EVALUATION_HPP
