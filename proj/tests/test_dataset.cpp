#include "doctest.h"

#include <sstream>

#include "percept/dataset.hpp"
#include "support.hpp"

using namespace percept;

namespace {

std::string age_line(const std::string& id, const std::string& condition,
                     const std::string& polarity, int label) {
  return "{\"id\":\"" + id + "\",\"domain\":\"Age\",\"context_condition\":\"" +
         condition + "\",\"question_polarity\":\"" + polarity +
         "\",\"context\":\"ctx\",\"question\":\"q\","
         "\"ans0\":\"The grandson\",\"ans1\":\"The grandmother\","
         "\"ans2\":\"Can't be determined\","
         "\"answer_info\":{\"ans0\":{\"kind\":\"target\",\"target\":\"nonOld\"},"
         "\"ans1\":{\"kind\":\"target\",\"target\":\"Old\"},"
         "\"ans2\":{\"kind\":\"unknown\"}},"
         "\"label\":" + std::to_string(label) + ",\"bias_aligned\":1}";
}

}  // namespace

TEST_CASE("empty source loads to empty list") {
  std::istringstream in("");
  auto records =
      load_dataset(in, Domain::Age, ContextCondition::Ambiguous);
  CHECK(records.empty());
}

TEST_CASE("loads, filters and orders records") {
  std::string text = age_line("b-2", "ambig", "nonneg", 2) + "\n" +
                     age_line("a-1", "ambig", "neg", 2) + "\n" +
                     age_line("c-3", "disambig", "nonneg", 0) + "\n";
  std::istringstream in(text);
  auto records = load_dataset(in, Domain::Age, ContextCondition::Ambiguous);
  REQUIRE(records.size() == 2);
  CHECK(records[0].id == "a-1");
  CHECK(records[1].id == "b-2");
  CHECK(records[0].polarity == Polarity::Negative);
  CHECK(records[0].raw_polarity == "neg");
  CHECK(records[1].polarity == Polarity::Positive);
  CHECK(records[0].slot(OptionLabel::A).target_id == "nonOld");
  CHECK(records[0].gold == OptionLabel::C);
}

TEST_CASE("malformed line reports its line number") {
  std::string text = age_line("a-1", "ambig", "nonneg", 2) + "\n{broken\n";
  std::istringstream in(text);
  CHECK_THROWS_WITH_AS(
      load_dataset(in, Domain::Age, ContextCondition::Ambiguous),
      doctest::Contains("line 2"), DatasetError);
}

TEST_CASE("invariant violations report the record and rule") {
  SUBCASE("ambiguous gold must be unknown") {
    std::istringstream in(age_line("bad-1", "ambig", "nonneg", 0) + "\n");
    CHECK_THROWS_WITH_AS(
        load_dataset(in, Domain::Age, ContextCondition::Ambiguous),
        doctest::Contains("record bad-1"), DatasetError);
  }
  SUBCASE("disambiguated gold must be a target") {
    std::istringstream in(age_line("bad-2", "disambig", "nonneg", 2) + "\n");
    CHECK_THROWS_WITH_AS(
        load_dataset(in, Domain::Age, ContextCondition::Disambiguated),
        doctest::Contains("target gold"), DatasetError);
  }
  SUBCASE("unknown target identity") {
    std::string line = age_line("bad-3", "ambig", "nonneg", 2);
    auto pos = line.find("nonOld");
    line.replace(pos, 6, "cyborg");
    std::istringstream in(line + "\n");
    CHECK_THROWS_WITH_AS(
        load_dataset(in, Domain::Age, ContextCondition::Ambiguous),
        doctest::Contains("unknown target identity 'cyborg'"), DatasetError);
  }
  SUBCASE("duplicate target ids") {
    std::string line = age_line("bad-4", "ambig", "nonneg", 2);
    auto pos = line.find("\"Old\"");
    line.replace(pos, 5, "\"nonOld\"");
    std::istringstream in(line + "\n");
    CHECK_THROWS_WITH_AS(
        load_dataset(in, Domain::Age, ContextCondition::Ambiguous),
        doctest::Contains("distinct"), DatasetError);
  }
}

TEST_CASE("accepts source-benchmark field spellings") {
  // example_id/category aliases, [text, tag] answer_info, stereotyped_groups.
  std::string line =
      "{\"example_id\": 17, \"category\": \"Age\","
      "\"context_condition\": \"ambig\", \"question_polarity\": \"neg\","
      "\"context\": \"ctx\", \"question\": \"q\","
      "\"ans0\": \"The grandson\", \"ans1\": \"Cannot answer\","
      "\"ans2\": \"The grandmother\","
      "\"answer_info\": {\"ans0\": [\"grandson\", \"nonOld\"],"
      "\"ans1\": [\"Cannot answer\", \"unknown\"],"
      "\"ans2\": [\"grandmother\", \"old\"]},"
      "\"additional_metadata\": {\"stereotyped_groups\": [\"old\"]},"
      "\"label\": 1}";
  std::istringstream in(line + "\n");
  auto records = load_dataset(in, Domain::Age, ContextCondition::Ambiguous);
  REQUIRE(records.size() == 1);
  CHECK(records[0].id == "17");
  // Age tags normalize to the canonical spellings.
  CHECK(records[0].slot(OptionLabel::C).target_id == "Old");
  // Negative question: the stereotyped target is the bias-aligned option.
  CHECK(records[0].bias_aligned == OptionLabel::C);
}

TEST_CASE("positive questions align bias with the non-stereotyped target") {
  std::string line =
      "{\"example_id\": 18, \"category\": \"Age\","
      "\"context_condition\": \"ambig\", \"question_polarity\": \"nonneg\","
      "\"context\": \"ctx\", \"question\": \"q\","
      "\"ans0\": \"The grandson\", \"ans1\": \"Cannot answer\","
      "\"ans2\": \"The grandmother\","
      "\"answer_info\": {\"ans0\": [\"grandson\", \"nonOld\"],"
      "\"ans1\": [\"Cannot answer\", \"unknown\"],"
      "\"ans2\": [\"grandmother\", \"old\"]},"
      "\"additional_metadata\": {\"stereotyped_groups\": [\"old\"]},"
      "\"label\": 1}";
  std::istringstream in(line + "\n");
  auto records = load_dataset(in, Domain::Age, ContextCondition::Ambiguous);
  REQUIRE(records.size() == 1);
  CHECK(records[0].bias_aligned == OptionLabel::A);
}

TEST_CASE("statistics count target appearances") {
  // Two questions over targets {X,Y} and {X,Z}.
  std::vector<QuestionRecord> records;
  test::RecordSpec spec;
  spec.id = "q1";
  spec.t1 = "X";
  spec.t2 = "Y";
  records.push_back(test::make_record(spec));
  spec.id = "q2";
  spec.t2 = "Z";
  records.push_back(test::make_record(spec));

  DatasetStats stats = validate_statistics(records);
  CHECK(stats.question_count == 2);
  CHECK(stats.appearances.at("X") == 2);
  CHECK(stats.appearances.at("Y") == 1);
  CHECK(stats.appearances.at("Z") == 1);
  long long total = 0;
  for (const auto& [target, count] : stats.appearances) total += count;
  CHECK(total == 2 * stats.question_count);
}

TEST_CASE("synthetic generator is deterministic") {
  SyntheticSpec spec;
  spec.n_questions = 10;
  spec.targets = {"a", "b"};
  spec.polarity_mix = 0.5;
  spec.condition = ContextCondition::Ambiguous;
  spec.seed = 7;
  auto first = generate_synthetic_dataset(spec);
  auto second = generate_synthetic_dataset(spec);
  CHECK(first == second);

  std::ostringstream out_a, out_b;
  write_dataset(out_a, first);
  write_dataset(out_b, second);
  CHECK(out_a.str() == out_b.str());

  spec.seed = 8;
  CHECK(generate_synthetic_dataset(spec) != first);
}

TEST_CASE("synthetic generator splits polarity exactly") {
  SyntheticSpec spec;
  spec.n_questions = 100;
  spec.targets = {"a", "b"};
  spec.polarity_mix = 0.5;
  spec.seed = 3;
  auto records = generate_synthetic_dataset(spec);
  int positive = 0;
  for (const auto& record : records)
    if (record.polarity == Polarity::Positive) ++positive;
  CHECK(positive == 50);

  DatasetStats stats = validate_statistics(records);
  CHECK(stats.appearances.at("a") == 100);
  CHECK(stats.appearances.at("b") == 100);
}

TEST_CASE("ambiguous synthetic gold is always the unknown option") {
  SyntheticSpec spec;
  spec.n_questions = 50;
  spec.targets = {"a", "b", "c"};
  spec.seed = 11;
  for (const auto& record : generate_synthetic_dataset(spec))
    CHECK(record.slot(record.gold).kind == SlotKind::Unknown);

  spec.condition = ContextCondition::Disambiguated;
  for (const auto& record : generate_synthetic_dataset(spec))
    CHECK(record.slot(record.gold).kind == SlotKind::Target);
}

TEST_CASE("generator requires two targets") {
  SyntheticSpec spec;
  spec.n_questions = 5;
  spec.targets = {"solo"};
  CHECK_THROWS_AS(generate_synthetic_dataset(spec), DatasetError);
}

TEST_CASE("write/load round-trips") {
  SyntheticSpec spec;
  spec.n_questions = 25;
  spec.targets = {"x", "y", "z"};
  spec.polarity_mix = 0.4;
  spec.condition = ContextCondition::Disambiguated;
  spec.seed = 21;
  auto records = generate_synthetic_dataset(spec);

  std::ostringstream out;
  write_dataset(out, records);
  std::istringstream in(out.str());
  LoadOptions options;
  options.target_override = spec.targets;
  auto loaded = load_dataset(in, spec.domain, spec.condition, options);
  CHECK(loaded == records);
}

TEST_CASE("type errors inside a record carry the line number") {
  std::string line = age_line("bad-5", "ambig", "nonneg", 2);
  auto pos = line.find("\"label\":2");
  REQUIRE(pos != std::string::npos);
  line.replace(pos, 9, "\"label\":\"B\"");
  std::istringstream in(line + "\n");
  CHECK_THROWS_WITH_AS(
      load_dataset(in, Domain::Age, ContextCondition::Ambiguous),
      doctest::Contains("line 1"), DatasetError);

  std::istringstream in2(age_line("bad-6", "ambig", "nonneg", 3) + "\n");
  CHECK_THROWS_WITH_AS(
      load_dataset(in2, Domain::Age, ContextCondition::Ambiguous),
      doctest::Contains("0..2"), DatasetError);
}
