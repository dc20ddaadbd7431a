#include "percept/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "percept/rng.hpp"

namespace percept {

using nlohmann::json;

OptionLabel QuestionRecord::unknown_label() const {
  for (const auto& slot : options)
    if (slot.kind == SlotKind::Unknown) return slot.label;
  throw DatasetError("record " + id + ": no unknown option");
}

std::pair<const OptionSlot*, const OptionSlot*> QuestionRecord::target_slots()
    const {
  const OptionSlot* first = nullptr;
  const OptionSlot* second = nullptr;
  for (const auto& slot : options) {
    if (slot.kind != SlotKind::Target) continue;
    if (!first)
      first = &slot;
    else
      second = &slot;
  }
  if (!first || !second)
    throw DatasetError("record " + id + ": expected two target options");
  return {first, second};
}

const std::string& QuestionRecord::other_target(
    const std::string& target_id) const {
  auto [a, b] = target_slots();
  if (*a->target_id == target_id) return *b->target_id;
  if (*b->target_id == target_id) return *a->target_id;
  throw DatasetError("record " + id + ": target '" + target_id +
                     "' is not an option");
}

void DatasetStats::merge(const DatasetStats& other) {
  for (const auto& [target, count] : other.appearances)
    appearances[target] += count;
  question_count += other.question_count;
}

namespace {

[[noreturn]] void fail_line(long line_no, const std::string& what) {
  throw DatasetError("line " + std::to_string(line_no) + ": " + what);
}

[[noreturn]] void fail_record(const std::string& id, const std::string& rule) {
  throw DatasetError("record " + id + ": " + rule);
}

std::string string_field(const json& j, const char* key, long line_no) {
  auto it = j.find(key);
  if (it == j.end()) fail_line(line_no, std::string("missing field '") + key + "'");
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (!it->is_string()) fail_line(line_no, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

/// Resolves one answer_info entry. Accepts the documented object form
/// {"kind": "target"|"unknown", "target": id} and the source-benchmark array
/// form [text, tag] where the tag is "unknown" or a target id.
void apply_answer_info(const json& info, const char* key, OptionSlot& slot,
                       long line_no) {
  auto it = info.find(key);
  if (it == info.end())
    fail_line(line_no, std::string("answer_info missing '") + key + "'");
  std::string tag;
  if (it->is_array()) {
    if (it->empty()) fail_line(line_no, "empty answer_info entry");
    tag = it->back().get<std::string>();
  } else if (it->is_object()) {
    std::string kind = it->at("kind").get<std::string>();
    if (kind == "unknown") {
      slot.kind = SlotKind::Unknown;
      return;
    }
    if (kind != "target")
      fail_line(line_no, "answer_info kind must be 'target' or 'unknown'");
    tag = it->at("target").get<std::string>();
  } else {
    fail_line(line_no, "answer_info entries must be arrays or objects");
  }
  if (tag == "unknown") {
    slot.kind = SlotKind::Unknown;
  } else {
    slot.kind = SlotKind::Target;
    slot.target_id = tag;
  }
}

/// Stereotype-aligned option. Explicit "bias_aligned" index wins; otherwise
/// it is derived from stereotyped-group metadata: for negative questions the
/// stereotyped target, for positive questions the other target.
OptionLabel resolve_bias_aligned(const json& j, const QuestionRecord& record,
                                 const Catalogs& catalogs, long line_no) {
  if (auto it = j.find("bias_aligned"); it != j.end()) {
    if (!it->is_number_integer() || it->get<int>() < 0 || it->get<int>() > 2)
      fail_line(line_no, "'bias_aligned' must be an integer in 0..2");
    return label_from_index(it->get<int>());
  }
  auto meta = j.find("additional_metadata");
  if (meta == j.end() || !meta->contains("stereotyped_groups"))
    fail_line(line_no, "missing 'bias_aligned' (and no stereotyped_groups)");
  std::set<std::string> groups;
  for (const auto& g : meta->at("stereotyped_groups")) {
    auto canon = catalogs.canonical_target(record.domain, g.get<std::string>());
    groups.insert(canon.value_or(g.get<std::string>()));
  }
  auto [a, b] = record.target_slots();
  bool a_in = groups.count(*a->target_id) > 0;
  bool b_in = groups.count(*b->target_id) > 0;
  if (a_in == b_in)
    fail_record(record.id, "cannot derive bias_aligned from stereotyped_groups");
  const OptionSlot* stereotyped = a_in ? a : b;
  const OptionSlot* other = a_in ? b : a;
  return record.polarity == Polarity::Negative ? stereotyped->label
                                               : other->label;
}

void check_invariants(const QuestionRecord& record) {
  int unknowns = 0;
  for (const auto& slot : record.options)
    if (slot.kind == SlotKind::Unknown) ++unknowns;
  if (unknowns != 1)
    fail_record(record.id, "expected exactly one unknown option, found " +
                               std::to_string(unknowns));
  auto [a, b] = record.target_slots();
  if (*a->target_id == *b->target_id)
    fail_record(record.id, "target options must reference distinct targets");
  const auto& gold = record.slot(record.gold);
  if (record.condition == ContextCondition::Ambiguous &&
      gold.kind != SlotKind::Unknown)
    fail_record(record.id, "ambiguous context requires the unknown gold answer");
  if (record.condition == ContextCondition::Disambiguated &&
      gold.kind != SlotKind::Target)
    fail_record(record.id, "disambiguated context requires a target gold answer");
  if (record.slot(record.bias_aligned).kind != SlotKind::Target)
    fail_record(record.id, "bias_aligned must reference a target option");
}

QuestionRecord parse_record(const json& j, long line_no,
                            const Catalogs& catalogs,
                            const std::optional<std::vector<std::string>>&
                                target_override) {
  QuestionRecord record;
  if (j.contains("id"))
    record.id = string_field(j, "id", line_no);
  else
    record.id = string_field(j, "example_id", line_no);

  std::string domain_text = j.contains("domain")
                                ? string_field(j, "domain", line_no)
                                : string_field(j, "category", line_no);
  auto domain = parse_domain(domain_text);
  if (!domain) fail_line(line_no, "unknown domain '" + domain_text + "'");
  record.domain = *domain;

  std::string cond_text = string_field(j, "context_condition", line_no);
  auto condition = parse_condition(cond_text);
  if (!condition)
    fail_line(line_no, "unknown context_condition '" + cond_text + "'");
  record.condition = *condition;

  record.raw_polarity = string_field(j, "question_polarity", line_no);
  auto polarity = parse_polarity(record.raw_polarity);
  if (!polarity)
    fail_line(line_no, "unknown question_polarity '" + record.raw_polarity + "'");
  record.polarity = *polarity;

  record.context = string_field(j, "context", line_no);
  record.question = string_field(j, "question", line_no);

  const char* ans_keys[3] = {"ans0", "ans1", "ans2"};
  auto info = j.find("answer_info");
  if (info == j.end()) fail_line(line_no, "missing field 'answer_info'");
  for (int i = 0; i < 3; ++i) {
    OptionSlot& slot = record.options[static_cast<size_t>(i)];
    slot.label = label_from_index(i);
    slot.text = string_field(j, ans_keys[i], line_no);
    apply_answer_info(*info, ans_keys[i], slot, line_no);
  }

  // Canonicalize target ids against the catalog (or an explicit override).
  for (auto& slot : record.options) {
    if (slot.kind != SlotKind::Target) continue;
    if (target_override) {
      bool known = false;
      for (const auto& t : *target_override)
        if (t == *slot.target_id) known = true;
      if (!known)
        fail_record(record.id, "unknown target identity '" + *slot.target_id + "'");
    } else {
      auto canon = catalogs.canonical_target(record.domain, *slot.target_id);
      if (!canon)
        fail_record(record.id, "unknown target identity '" + *slot.target_id + "'");
      slot.target_id = *canon;
    }
  }

  auto label_it = j.find("label");
  if (label_it == j.end()) fail_line(line_no, "missing field 'label'");
  if (!label_it->is_number_integer() || label_it->get<int>() < 0 ||
      label_it->get<int>() > 2)
    fail_line(line_no, "'label' must be an integer in 0..2");
  record.gold = label_from_index(label_it->get<int>());
  record.bias_aligned = resolve_bias_aligned(j, record, catalogs, line_no);
  return record;
}

}  // namespace

std::vector<QuestionRecord> load_dataset(std::istream& source, Domain domain,
                                         ContextCondition condition,
                                         const LoadOptions& options) {
  const Catalogs& catalogs =
      options.catalogs ? *options.catalogs : Catalogs::builtin();
  std::vector<QuestionRecord> records;
  std::string line;
  long line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail_line(line_no, std::string("malformed record: ") + e.what());
    }
    // Filter before validating so foreign slices in the same file are ignored.
    if (j.contains("domain") || j.contains("category")) {
      std::string domain_text = j.contains("domain")
                                    ? string_field(j, "domain", line_no)
                                    : string_field(j, "category", line_no);
      auto d = parse_domain(domain_text);
      if (!d) fail_line(line_no, "unknown domain '" + domain_text + "'");
      if (*d != domain) continue;
    } else {
      fail_line(line_no, "missing field 'domain'");
    }
    std::string cond_text = string_field(j, "context_condition", line_no);
    auto c = parse_condition(cond_text);
    if (!c) fail_line(line_no, "unknown context_condition '" + cond_text + "'");
    if (*c != condition) continue;

    QuestionRecord record;
    try {
      record = parse_record(j, line_no, catalogs, options.target_override);
    } catch (const json::exception& e) {
      fail_line(line_no, std::string("malformed record: ") + e.what());
    }
    check_invariants(record);
    records.push_back(std::move(record));
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const QuestionRecord& a, const QuestionRecord& b) {
                     return a.id < b.id;
                   });
  return records;
}

std::vector<QuestionRecord> load_dataset_file(const std::string& path,
                                              Domain domain,
                                              ContextCondition condition,
                                              const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file: " + path);
  return load_dataset(in, domain, condition, options);
}

DatasetStats validate_statistics(const std::vector<QuestionRecord>& records) {
  DatasetStats stats;
  stats.question_count = static_cast<long long>(records.size());
  for (const auto& record : records) {
    auto [a, b] = record.target_slots();
    ++stats.appearances[*a->target_id];
    ++stats.appearances[*b->target_id];
  }
  return stats;
}

void write_dataset(std::ostream& out,
                   const std::vector<QuestionRecord>& records) {
  for (const auto& record : records) {
    nlohmann::ordered_json j;
    j["id"] = record.id;
    j["domain"] = to_string(record.domain);
    j["context_condition"] = to_string(record.condition);
    j["question_polarity"] = record.raw_polarity.empty()
                                 ? to_string(record.polarity)
                                 : record.raw_polarity;
    j["context"] = record.context;
    j["question"] = record.question;
    const char* ans_keys[3] = {"ans0", "ans1", "ans2"};
    nlohmann::ordered_json info;
    for (int i = 0; i < 3; ++i) {
      const auto& slot = record.options[static_cast<size_t>(i)];
      j[ans_keys[i]] = slot.text;
      if (slot.kind == SlotKind::Unknown)
        info[ans_keys[i]] = {{"kind", "unknown"}};
      else
        info[ans_keys[i]] = {{"kind", "target"}, {"target", *slot.target_id}};
    }
    j["answer_info"] = std::move(info);
    j["label"] = to_index(record.gold);
    j["bias_aligned"] = to_index(record.bias_aligned);
    out << j.dump() << '\n';
  }
}

std::vector<QuestionRecord> generate_synthetic_dataset(
    const SyntheticSpec& spec) {
  if (spec.targets.size() < 2)
    throw DatasetError("synthetic dataset needs at least two targets");
  if (spec.polarity_mix < 0.0 || spec.polarity_mix > 1.0)
    throw DatasetError("polarity_mix must lie in [0, 1]");
  if (spec.n_questions < 0)
    throw DatasetError("n_questions must be non-negative");

  Rng rng(spec.seed);
  const long long n = spec.n_questions;
  // Exact split by round-half rule, then a seeded shuffle of the sequence.
  long long n_positive =
      static_cast<long long>(spec.polarity_mix * static_cast<double>(n) + 0.5);
  std::vector<Polarity> polarities(static_cast<size_t>(n), Polarity::Negative);
  for (long long i = 0; i < n_positive; ++i)
    polarities[static_cast<size_t>(i)] = Polarity::Positive;
  rng.shuffle(polarities);

  static const char* kUnknownTexts[3] = {"Can't be determined", "Not known",
                                         "Not enough information"};

  std::vector<QuestionRecord> records;
  records.reserve(static_cast<size_t>(n));
  for (long long i = 0; i < n; ++i) {
    QuestionRecord record;
    char id_buf[32];
    std::snprintf(id_buf, sizeof(id_buf), "syn-%06lld", i);
    record.id = id_buf;
    record.domain = spec.domain;
    record.condition = spec.condition;
    record.polarity = polarities[static_cast<size_t>(i)];
    record.raw_polarity =
        record.polarity == Polarity::Positive ? "nonneg" : "neg";

    size_t first = static_cast<size_t>(rng.below(spec.targets.size()));
    size_t second = static_cast<size_t>(rng.below(spec.targets.size() - 1));
    if (second >= first) ++second;
    const std::string& t1 = spec.targets[first];
    const std::string& t2 = spec.targets[second];

    record.context = "Case " + record.id + ": a " + t1 + " person and a " +
                     t2 + " person stopped by the community center.";
    record.question = record.polarity == Polarity::Positive
                          ? "Who was helpful?"
                          : "Who was unhelpful?";

    int unknown_pos = static_cast<int>(rng.below(3));
    bool swap_targets = rng.below(2) == 1;
    const std::string& first_target = swap_targets ? t2 : t1;
    const std::string& second_target = swap_targets ? t1 : t2;
    int assigned = 0;
    for (int pos = 0; pos < 3; ++pos) {
      OptionSlot& slot = record.options[static_cast<size_t>(pos)];
      slot.label = label_from_index(pos);
      if (pos == unknown_pos) {
        slot.kind = SlotKind::Unknown;
        slot.text = kUnknownTexts[rng.below(3)];
      } else {
        const std::string& target =
            assigned++ == 0 ? first_target : second_target;
        slot.kind = SlotKind::Target;
        slot.target_id = target;
        slot.text = "The " + target + " person";
      }
    }

    auto [a, b] = record.target_slots();
    if (spec.condition == ContextCondition::Ambiguous) {
      record.gold = record.unknown_label();
    } else {
      const OptionSlot* gold_slot = rng.below(2) == 0 ? a : b;
      record.gold = gold_slot->label;
      record.context += " It turned out to be the " + *gold_slot->target_id +
                        " person in question.";
    }
    record.bias_aligned = (rng.below(2) == 0 ? a : b)->label;
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace percept
