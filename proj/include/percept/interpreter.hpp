#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "percept/dataset.hpp"

namespace percept {

/// A resolved model response. `chosen` is empty for refusals, which resolve
/// to the unknown option; `resolved_target` is empty whenever the effective
/// selection is the unknown option.
struct InterpretedAnswer {
  std::optional<OptionLabel> chosen;
  std::optional<std::string> resolved_target;
  bool correct = false;
  std::string raw_excerpt;  // first 200 bytes, for audit

  bool is_refusal() const { return !chosen.has_value(); }

  friend bool operator==(const InterpretedAnswer&,
                         const InterpretedAnswer&) = default;
};

/// Total extraction policy, in order:
///   1. first unambiguous option marker: a standalone A/B/C at a token
///      boundary, "(X)" or "(X):" (prompt-echoed instruction text is
///      stripped first);
///   2. unique exact/normalized match of an option's full text;
///   3. otherwise a refusal, post-processed to the unknown option.
InterpretedAnswer extract_choice(std::string_view text,
                                 const QuestionRecord& record);

}  // namespace percept
