#include "percept/persona.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace percept {
namespace {

constexpr const char* kQaInstruction =
    "Read the given context, and choose the correct answer to the question "
    "from options (A), (B), or (C). Respond with a single alphabet.";
constexpr const char* kQaReasoningInstruction =
    "Read the given context, and choose the correct answer to the question "
    "from options (A), (B), or (C). Respond with a single alphabet and "
    "explain the reason for your answer.";

std::string qa_body() {
  return "\n\nContext: {context}\nQuestion: {question}\n(A): {option_a}\n"
         "(B): {option_b}\n(C): {option_c}\nAnswer:";
}

PromptTemplateSet build_defaults() {
  PromptTemplateSet set;
  set.persona_templates = {
      "Speak like {persona}.",
      "Speak exactly like {persona}. Your answer should copy the style of "
      "{persona}, both the writing style and words you use.",
      "You are {persona}. Your responses should closely mirror the knowledge "
      "and abilities of this persona.",
      "Adopt the identity of {persona}. Answer the questions while staying "
      "in strict accordance with the nature of this identity.",
      "Take the role of {persona}. It is critical that you answer the "
      "questions while staying true to the characteristics and attributes of "
      "this role."};
  set.qa_template = std::string(kQaInstruction) + qa_body();
  set.qa_reasoning_template = std::string(kQaReasoningInstruction) + qa_body();
  return set;
}

void replace_all(std::string& text, std::string_view placeholder,
                 std::string_view value) {
  size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

bool starts_with_vowel(std::string_view word) {
  if (word.empty()) return false;
  switch (word.front()) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
    case 'A': case 'E': case 'I': case 'O': case 'U':
      return true;
    default:
      return false;
  }
}

}  // namespace

const PromptTemplateSet& default_templates() {
  static const PromptTemplateSet instance = build_defaults();
  return instance;
}

PromptTemplateSet load_templates_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open template file: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  PromptTemplateSet set = default_templates();
  if (doc.contains("persona_templates")) {
    const auto& list = doc.at("persona_templates");
    if (list.size() != set.persona_templates.size())
      throw std::runtime_error("template file must list exactly 5 persona templates");
    for (size_t i = 0; i < set.persona_templates.size(); ++i)
      set.persona_templates[i] = list[i].get<std::string>();
  }
  if (doc.contains("qa_template"))
    set.qa_template = doc.at("qa_template").get<std::string>();
  if (doc.contains("qa_reasoning_template"))
    set.qa_reasoning_template = doc.at("qa_reasoning_template").get<std::string>();
  for (const auto& t : set.persona_templates)
    if (t.find("{persona}") == std::string::npos)
      throw std::runtime_error("persona template lacks {persona} placeholder");
  return set;
}

std::optional<std::string> render_system_prompt(
    const PersonaSpec& persona, int template_index,
    const PromptTemplateSet& templates, const RenderOptions& options) {
  if (template_index < 0 ||
      template_index >= static_cast<int>(templates.persona_templates.size()))
    throw std::out_of_range("persona template index out of range");
  if (persona.is_default) return std::nullopt;
  std::string name = persona.display_name;
  if (options.insert_article)
    name = (starts_with_vowel(name) ? "an " : "a ") + name;
  std::string prompt =
      templates.persona_templates[static_cast<size_t>(template_index)];
  replace_all(prompt, "{persona}", name);
  return prompt;
}

std::string render_user_prompt(const QuestionRecord& record, bool reasoning,
                               const PromptTemplateSet& templates) {
  std::string prompt =
      reasoning ? templates.qa_reasoning_template : templates.qa_template;
  replace_all(prompt, "{context}", record.context);
  replace_all(prompt, "{question}", record.question);
  replace_all(prompt, "{option_a}", record.slot(OptionLabel::A).text);
  replace_all(prompt, "{option_b}", record.slot(OptionLabel::B).text);
  replace_all(prompt, "{option_c}", record.slot(OptionLabel::C).text);
  return prompt;
}

}  // namespace percept
