#pragma once

#include <string>
#include <vector>

#include "percept/dataset.hpp"
#include "percept/interpreter.hpp"
#include "percept/rational.hpp"

namespace percept {

/// Score weights. Reward/penalty go to the target selected as an incorrect
/// answer; the counter weight goes to the target that was not selected.
struct ScoringConfig {
  Rational reward{2};
  Rational penalty{2};
  Rational counter{1};

  /// Throws unless all weights are positive and counter is the weakest.
  void validate() const;
};

/// One signed perception score assignment. Zero contributions are encoded by
/// the absence of an event, never by a zero value.
struct ScoreEvent {
  std::string persona_id;
  std::string target_id;
  Rational value;
  std::string question_id;
  Polarity polarity = Polarity::Positive;
  ContextCondition condition = ContextCondition::Ambiguous;

  friend bool operator==(const ScoreEvent&, const ScoreEvent&) = default;
};

/// Applies the scoring strategy to one interpreted response.
///
/// Correct responses carry no perception signal. An incorrect response that
/// selects a target earns that target the reward (positive question) or the
/// penalty (negative question), and the other target the opposite-signed
/// counter score. An incorrect unknown selection names no target and yields
/// nothing.
std::vector<ScoreEvent> score_response(const QuestionRecord& record,
                                       const InterpretedAnswer& answer,
                                       const std::string& persona_id,
                                       const ScoringConfig& config);

}  // namespace percept
