#ifndef INCI_ENSEMBLE_HPP
#define INCI_ENSEMBLE_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include "inci/corpus.hpp"
#include "inci/predictions.hpp"

namespace inci {

class EmptyVotes : public std::invalid_argument {
 public:
  EmptyVotes() : std::invalid_argument("majority vote over no votes") {}
};

class TooFewModels : public std::invalid_argument {
 public:
  TooFewModels() : std::invalid_argument("an ensemble needs at least two prediction sets") {}
};

/// Raised when prediction sets (or gold and predictions) cover different items.
class KeyMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Most frequent label; ties go to the lowest label.
IncidentalomaLabel majority_vote(std::span<const IncidentalomaLabel> votes);

/// Per-lesion majority vote. model_id is "ensemble(a,b,...)" over the sorted
/// member ids, so the result does not depend on member order.
PredictionSet ensemble(const std::vector<PredictionSet>& sets);

}  // namespace inci

#endif  // INCI_ENSEMBLE_HPP
