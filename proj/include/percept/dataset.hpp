#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "percept/domains.hpp"

namespace percept {

enum class OptionLabel { A, B, C };
enum class SlotKind { Target, Unknown };

inline char to_char(OptionLabel label) {
  return static_cast<char>('A' + static_cast<int>(label));
}
inline int to_index(OptionLabel label) { return static_cast<int>(label); }
inline OptionLabel label_from_index(int index) {
  if (index < 0 || index > 2)
    throw std::out_of_range("option index out of range");
  return static_cast<OptionLabel>(index);
}

struct OptionSlot {
  OptionLabel label = OptionLabel::A;
  std::string text;
  SlotKind kind = SlotKind::Target;
  std::optional<std::string> target_id;  // present iff kind == Target

  friend bool operator==(const OptionSlot&, const OptionSlot&) = default;
};

/// One multiple-choice item: a context, a polarized question, two target
/// identities and an unknown option.
struct QuestionRecord {
  std::string id;
  Domain domain = Domain::Age;
  ContextCondition condition = ContextCondition::Ambiguous;
  Polarity polarity = Polarity::Positive;
  std::string raw_polarity;  // source-file spelling, kept for provenance
  std::string context;
  std::string question;
  std::array<OptionSlot, 3> options;
  OptionLabel gold = OptionLabel::A;
  OptionLabel bias_aligned = OptionLabel::A;

  const OptionSlot& slot(OptionLabel label) const {
    return options[static_cast<size_t>(to_index(label))];
  }
  OptionLabel unknown_label() const;
  /// The two target slots, in option order.
  std::pair<const OptionSlot*, const OptionSlot*> target_slots() const;
  /// Target id of the target slot other than `target_id`.
  const std::string& other_target(const std::string& target_id) const;

  friend bool operator==(const QuestionRecord&, const QuestionRecord&) = default;
};

/// Appearance counts for one (domain, condition) slice. Every question
/// carries exactly two target options, so the counts always sum to twice the
/// question count.
struct DatasetStats {
  std::map<std::string, long long> appearances;
  long long question_count = 0;

  void merge(const DatasetStats& other);
  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadOptions {
  const Catalogs* catalogs = nullptr;  // null = built-in
  /// Overrides the domain's target list (synthetic fixtures use ad-hoc ids).
  std::optional<std::vector<std::string>> target_override;
};

/// Reads line-delimited records (docs/dataset-schema.md), keeping only the
/// requested domain and condition. Records are validated fail-fast and
/// returned in stable id order.
std::vector<QuestionRecord> load_dataset(std::istream& source, Domain domain,
                                         ContextCondition condition,
                                         const LoadOptions& options = {});
std::vector<QuestionRecord> load_dataset_file(const std::string& path,
                                              Domain domain,
                                              ContextCondition condition,
                                              const LoadOptions& options = {});

DatasetStats validate_statistics(const std::vector<QuestionRecord>& records);

/// Writes records in the same line-delimited schema the loader reads.
void write_dataset(std::ostream& out,
                   const std::vector<QuestionRecord>& records);

struct SyntheticSpec {
  int n_questions = 0;
  std::vector<std::string> targets;
  double polarity_mix = 0.5;  // fraction of positive questions
  ContextCondition condition = ContextCondition::Ambiguous;
  std::uint64_t seed = 0;
  Domain domain = Domain::Age;
};

/// Deterministic fixture generator: uniform target pairs, permuted option
/// order, gold set per condition, exact polarity split by round-half rule.
std::vector<QuestionRecord> generate_synthetic_dataset(
    const SyntheticSpec& spec);

}  // namespace percept
