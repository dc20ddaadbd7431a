#include "percept/scoring.hpp"

#include <stdexcept>

namespace percept {

void ScoringConfig::validate() const {
  Rational zero;
  if (reward <= zero || penalty <= zero || counter <= zero)
    throw std::invalid_argument("scoring weights must be positive");
  if (counter > reward || counter > penalty)
    throw std::invalid_argument(
        "counter weight must not exceed reward or penalty");
}

std::vector<ScoreEvent> score_response(const QuestionRecord& record,
                                       const InterpretedAnswer& answer,
                                       const std::string& persona_id,
                                       const ScoringConfig& config) {
  if (answer.chosen) {
    const OptionSlot& slot = record.slot(*answer.chosen);
    bool slot_is_target = slot.kind == SlotKind::Target;
    if (slot_is_target != answer.resolved_target.has_value() ||
        (slot_is_target && *slot.target_id != *answer.resolved_target))
      throw std::invalid_argument("answer does not match question " +
                                  record.id);
  } else if (answer.resolved_target) {
    throw std::invalid_argument("refusal must resolve to the unknown option");
  }
  if (answer.correct || !answer.resolved_target) return {};

  const std::string& selected = *answer.resolved_target;
  const std::string& other = record.other_target(selected);

  ScoreEvent selected_event{persona_id, selected, Rational{},
                            record.id,  record.polarity, record.condition};
  ScoreEvent other_event{persona_id, other,          Rational{},
                         record.id,  record.polarity, record.condition};
  if (record.polarity == Polarity::Positive) {
    selected_event.value = config.reward;
    other_event.value = -config.counter;
  } else {
    selected_event.value = -config.penalty;
    other_event.value = config.counter;
  }
  return {selected_event, other_event};
}

}  // namespace percept
