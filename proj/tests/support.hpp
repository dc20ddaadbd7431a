#pragma once

#include <string>

#include "percept/dataset.hpp"

namespace percept::test {

struct RecordSpec {
  std::string id = "q1";
  Domain domain = Domain::Age;
  ContextCondition condition = ContextCondition::Ambiguous;
  Polarity polarity = Polarity::Positive;
  std::string t1 = "nonOld";
  std::string t2 = "Old";
  int unknown_pos = 2;   // which option slot holds the unknown answer
  int gold = -1;         // -1: unknown slot if ambiguous, first target if not
  int bias_aligned = -1; // -1: first target slot
};

inline QuestionRecord make_record(const RecordSpec& spec) {
  QuestionRecord record;
  record.id = spec.id;
  record.domain = spec.domain;
  record.condition = spec.condition;
  record.polarity = spec.polarity;
  record.raw_polarity =
      spec.polarity == Polarity::Positive ? "nonneg" : "neg";
  record.context = "Context for " + spec.id + ".";
  record.question =
      spec.polarity == Polarity::Positive ? "Who was helpful?" : "Who was rude?";
  int target_slot = 0;
  int first_target_pos = -1;
  for (int pos = 0; pos < 3; ++pos) {
    OptionSlot& slot = record.options[static_cast<size_t>(pos)];
    slot.label = label_from_index(pos);
    if (pos == spec.unknown_pos) {
      slot.kind = SlotKind::Unknown;
      slot.text = "Not enough information";
    } else {
      const std::string& target = target_slot++ == 0 ? spec.t1 : spec.t2;
      if (first_target_pos < 0) first_target_pos = pos;
      slot.kind = SlotKind::Target;
      slot.target_id = target;
      slot.text = "The " + target + " one";
    }
  }
  if (spec.gold >= 0)
    record.gold = label_from_index(spec.gold);
  else if (spec.condition == ContextCondition::Ambiguous)
    record.gold = label_from_index(spec.unknown_pos);
  else
    record.gold = label_from_index(first_target_pos);
  record.bias_aligned = label_from_index(
      spec.bias_aligned >= 0 ? spec.bias_aligned : first_target_pos);
  return record;
}

/// Option label whose slot carries the given target id.
inline OptionLabel label_of_target(const QuestionRecord& record,
                                   const std::string& target_id) {
  for (const auto& slot : record.options)
    if (slot.kind == SlotKind::Target && *slot.target_id == target_id)
      return slot.label;
  throw std::runtime_error("target not in record: " + target_id);
}

}  // namespace percept::test
