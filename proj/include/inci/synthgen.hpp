#ifndef INCI_SYNTHGEN_HPP
#define INCI_SYNTHGEN_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "inci/corpus.hpp"

namespace inci {

struct GenConfig {
  std::uint64_t seed = 7;
  std::size_t n_reports = 100;
  std::array<double, 3> label_prior = {0.8, 0.12, 0.08};
  std::size_t min_lesions = 1;
  std::size_t max_lesions = 6;
  double trend_rate = 0.3;
  double neoplastic_rate = 0.2;
  double recommendation_rate = 0.9;
};

class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void validate(const GenConfig& cfg);

/// Reads a config object; absent keys keep their defaults.
GenConfig gen_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const GenConfig& cfg);

/// Seeded synthetic corpus with gold lesion labels.
///
/// Gold labels are drawn per lesion from `label_prior`. A lesion carries a
/// size trend only when its label is 0 (a trend means the lesion was seen on
/// a prior exam, so it cannot be incidental); `trend_rate` is the probability
/// of a trend among those lesions. Report-level sentences are then drawn
/// conditioned on the report's maximum lesion label: a follow-up
/// recommendation accompanies a class-2 report with probability
/// `recommendation_rate`, and class-1 reports sometimes carry a negated
/// recommendation ("no follow-up is recommended"), which a cue-based detector
/// still fires on.
///
/// Output is a pure function of `cfg`.
std::vector<RadiologyReport> generate(const GenConfig& cfg);

}  // namespace inci

#endif  // INCI_SYNTHGEN_HPP
