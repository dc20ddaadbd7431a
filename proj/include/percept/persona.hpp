#pragma once

#include <array>
#include <optional>
#include <string>

#include "percept/dataset.hpp"
#include "percept/domains.hpp"

namespace percept {

/// The five persona-assignment prompts (one per iteration) plus the QA user
/// prompt in its plain and reasoning variants.
struct PromptTemplateSet {
  std::array<std::string, 5> persona_templates;
  std::string qa_template;
  std::string qa_reasoning_template;
};

const PromptTemplateSet& default_templates();
PromptTemplateSet load_templates_file(const std::string& path);

struct RenderOptions {
  /// Insert "a"/"an" before the persona name ("Speak like an elder."). Off by
  /// default: the catalogs carry bare names.
  bool insert_article = false;
};

/// System prompt for one persona and iteration. The default persona carries
/// no system prompt at all.
std::optional<std::string> render_system_prompt(
    const PersonaSpec& persona, int template_index,
    const PromptTemplateSet& templates = default_templates(),
    const RenderOptions& options = {});

/// QA user prompt for one record, options in stored order.
std::string render_user_prompt(
    const QuestionRecord& record, bool reasoning = false,
    const PromptTemplateSet& templates = default_templates());

}  // namespace percept
