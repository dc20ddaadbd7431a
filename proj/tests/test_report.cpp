#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "percept/report.hpp"

using namespace percept;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("percept_report_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

ScoreEvent event(const std::string& persona, const std::string& target,
                 Rational value, Polarity polarity = Polarity::Positive) {
  return ScoreEvent{persona, target, value, "q", polarity,
                    ContextCondition::Ambiguous};
}

/// Scenario fixture whose default persona reproduces the published sample
/// row: target biases 0.19 and -0.11.
AggregatedReport sample_report() {
  DatasetStats stats;
  stats.appearances["nonOld"] = 100;
  stats.appearances["Old"] = 100;
  stats.question_count = 100;
  std::vector<ScoreEvent> events;
  std::vector<Observation> observations;
  auto plant = [&](const std::string& persona, long long nonold_sum,
                   long long old_sum) {
    events.push_back(event(persona, "nonOld", Rational(nonold_sum)));
    events.push_back(event(persona, "Old", Rational(old_sum)));
    observations.push_back({persona, true, false, false});
  };
  plant("default", 19, -11);
  plant("kid", 13, -11);
  plant("elder", -8, 14);
  auto acc = accumulate(events, observations, stats);
  MetricsReport report = build_report(acc, "gpt-like", Domain::Age,
                                      ContextCondition::Ambiguous, 0);
  return aggregate_iterations({report})[0];
}

}  // namespace

TEST_CASE("metric cells drop the leading zero") {
  CHECK(format_metric(Rational(3, 20), Rational::Round::HalfEven) == ".15");
  CHECK(format_metric(Rational(0), Rational::Round::HalfEven) == ".00");
  CHECK(format_metric(Rational(-3, 100), Rational::Round::HalfEven) == "-.03");
  MetricSummary summary{Rational(3, 20), 0.02};
  CHECK(format_table_cell(summary, Rational::Round::HalfEven) == ".15 (.02)");
  MetricSummary zero{Rational(0), 0.0};
  CHECK(format_table_cell(zero, Rational::Round::HalfEven) == ".00 (.00)");
}

TEST_CASE("matrix cells scale by 100 with one decimal") {
  CHECK(format_matrix_cell(Rational(19, 100), Rational::Round::HalfEven) ==
        "19.0");
  CHECK(format_matrix_cell(Rational(-11, 100), Rational::Round::HalfEven) ==
        "-11.0");
  CHECK(format_matrix_cell(Rational(1, 8), Rational::Round::HalfEven) ==
        "12.5");
  CHECK(format_matrix_cell(Rational(0), Rational::Round::HalfEven) == "0.0");
}

TEST_CASE("tables rows carry the default persona metrics and overall shift") {
  TempDir dir;
  auto report = sample_report();
  std::string path =
      emit_tables({report}, dir.path.string(), Rational::Round::HalfEven);
  std::string csv = slurp(path);
  CHECK(csv.find("domain,model,condition,tb_overall,bamt_overall,pb,bs,acc\n") == 0);
  CHECK(csv.find("Age,gpt-like,ambiguous,.15 (.00)") != std::string::npos);

  // Default-only scenario: the persona-shift column renders "-".
  AggregatedReport solo = report;
  solo.personas.erase("kid");
  solo.personas.erase("elder");
  solo.pb_overall.reset();
  std::string solo_path =
      emit_tables({solo}, dir.path.string() + "/solo", Rational::Round::HalfEven);
  std::string solo_csv = slurp(solo_path);
  auto line_start = solo_csv.find("Age,");
  auto line = solo_csv.substr(line_start, solo_csv.find('\n', line_start) - line_start);
  CHECK(line.find(",-,") != std::string::npos);
}

TEST_CASE("matrix grid puts the default persona first with x100 cells") {
  TempDir dir;
  auto report = sample_report();
  auto [csv_path, svg_path] =
      emit_matrix(report, dir.path.string(), Rational::Round::HalfEven);
  std::string csv = slurp(csv_path);
  std::istringstream lines(csv);
  std::string header, first_row;
  std::getline(lines, header);
  std::getline(lines, first_row);
  CHECK(header == "persona,Old,nonOld,tb_overall,bamt_overall,pb");
  // default row: TB(Old) = -11, TB(nonOld) = 19, overall 15, bamt 15, pb "-"
  CHECK(first_row == "default,-11.0,19.0,15.0,15.0,-");

  std::string svg = slurp(svg_path);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("19.0") != std::string::npos);
  CHECK(svg.find("elder") != std::string::npos);
}

TEST_CASE("heatmap shading is monotone in magnitude") {
  TempDir dir;
  // All-zero report: every cell renders the lightest shade.
  DatasetStats stats;
  stats.appearances["a"] = 10;
  stats.appearances["b"] = 10;
  stats.question_count = 10;
  auto acc = accumulate({}, {{"default", true, false, false}}, stats);
  auto aggregated = aggregate_iterations(
      {build_report(acc, "m", Domain::Age, ContextCondition::Ambiguous, 0)});
  auto [csv_path, svg_path] =
      emit_matrix(aggregated[0], dir.path.string(), Rational::Round::HalfEven);
  std::string svg = slurp(svg_path);
  size_t rects = 0, white = 0, pos = 0;
  while ((pos = svg.find("<rect", pos)) != std::string::npos) {
    ++rects;
    pos += 5;
  }
  pos = 0;
  while ((pos = svg.find("fill=\"#ffffff\"", pos)) != std::string::npos) {
    ++white;
    pos += 5;
  }
  CHECK(rects > 0);
  CHECK(white == rects);
}

TEST_CASE("decomposition rows satisfy the score identities") {
  // Target with events {+2, +2, -1} over 3 appearances.
  DatasetStats stats;
  stats.appearances["t"] = 3;
  stats.appearances["u"] = 3;
  stats.question_count = 3;
  std::vector<ScoreEvent> events = {
      event("default", "t", Rational(2)),
      event("default", "t", Rational(2)),
      event("default", "t", Rational(-1)),
  };
  auto acc = accumulate(events, {{"default", false, true, false}}, stats);
  auto aggregated = aggregate_iterations(
      {build_report(acc, "m", Domain::Age, ContextCondition::Ambiguous, 0)});

  TempDir dir;
  std::string path = emit_decomposition(aggregated[0], dir.path.string());
  std::string csv = slurp(path);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "persona,target,positive,negative,abs_tb,bamt");
  std::string line;
  int rows = 0;
  bool found_t = false;
  while (std::getline(lines, line)) {
    ++rows;
    std::istringstream cells(line);
    std::string persona, target, pos_s, neg_s, abs_tb_s, bamt_s;
    std::getline(cells, persona, ',');
    std::getline(cells, target, ',');
    std::getline(cells, pos_s, ',');
    std::getline(cells, neg_s, ',');
    std::getline(cells, abs_tb_s, ',');
    std::getline(cells, bamt_s, ',');
    double positive = std::stod(pos_s), negative = std::stod(neg_s);
    double abs_tb = std::stod(abs_tb_s), bamt = std::stod(bamt_s);
    // positive + negative = TB (signed) and positive + |negative| = BAmt.
    CHECK(std::abs(positive + negative) == doctest::Approx(abs_tb).epsilon(1e-9));
    CHECK(positive - negative == doctest::Approx(bamt).epsilon(1e-9));
    if (target == "t") {
      found_t = true;
      CHECK(positive == doctest::Approx(4.0 / 3.0));
      CHECK(negative == doctest::Approx(-1.0 / 3.0));
      CHECK(abs_tb == doctest::Approx(1.0));
      CHECK(bamt == doctest::Approx(5.0 / 3.0));
    } else {
      // Unscored target: all-zero row.
      CHECK(positive == 0.0);
      CHECK(negative == 0.0);
      CHECK(abs_tb == 0.0);
      CHECK(bamt == 0.0);
    }
  }
  CHECK(rows == 2);
  CHECK(found_t);
}

TEST_CASE("emission is deterministic") {
  TempDir dir_a, dir_b;
  auto report = sample_report();
  auto paths_a = emit_report_bundle({report}, dir_a.path.string(),
                                    Rational::Round::HalfEven);
  auto paths_b = emit_report_bundle({report}, dir_b.path.string(),
                                    Rational::Round::HalfEven);
  CHECK(slurp(paths_a.tables_csv) == slurp(paths_b.tables_csv));
  REQUIRE(paths_a.matrix_csvs.size() == paths_b.matrix_csvs.size());
  for (size_t i = 0; i < paths_a.matrix_csvs.size(); ++i) {
    CHECK(slurp(paths_a.matrix_csvs[i]) == slurp(paths_b.matrix_csvs[i]));
    CHECK(slurp(paths_a.matrix_svgs[i]) == slurp(paths_b.matrix_svgs[i]));
  }
  CHECK(slurp(paths_a.scatter_csv) == slurp(paths_b.scatter_csv));

  // Re-emission over the same directory is also byte-identical.
  std::string before = slurp(paths_a.tables_csv);
  emit_report_bundle({report}, dir_a.path.string(), Rational::Round::HalfEven);
  CHECK(slurp(paths_a.tables_csv) == before);
}

TEST_CASE("scatter and correlation files") {
  TempDir dir;
  std::vector<AggregatedReport> reports;
  // Three scenarios on an exact negative line (bamt rising, accuracy falling).
  for (int i = 0; i < 3; ++i) {
    DatasetStats stats;
    stats.appearances["a"] = 10;
    stats.appearances["b"] = 10;
    stats.question_count = 10;
    std::vector<ScoreEvent> events;
    std::vector<Observation> observations;
    for (int k = 0; k < i * 2; ++k) {
      events.push_back(event("default", "a", Rational(2)));
      events.push_back(event("default", "b", Rational(-1)));
      observations.push_back({"default", false, true, false});
    }
    for (int k = i * 2; k < 10; ++k)
      observations.push_back({"default", true, false, false});
    auto acc = accumulate(events, observations, stats);
    auto report = build_report(acc, "model-" + std::to_string(i), Domain::Age,
                               ContextCondition::Ambiguous, 0);
    reports.push_back(aggregate_iterations({report})[0]);
  }
  auto [scatter_path, corr_path] = emit_scatter(reports, dir.path.string());
  std::string scatter = slurp(scatter_path);
  CHECK(scatter.find("model,domain,condition,bamt_overall,accuracy\n") == 0);
  CHECK(scatter.find("model-0") != std::string::npos);
  std::string corr = slurp(corr_path);
  CHECK(corr.find("n_points,pearson_r\n") == 0);
  CHECK(corr.find("3,-1.000000") != std::string::npos);
}

TEST_CASE("reports serialize to json and back") {
  DatasetStats stats;
  stats.appearances["a"] = 7;
  stats.appearances["b"] = 7;
  stats.question_count = 7;
  std::vector<ScoreEvent> events = {
      event("default", "a", Rational(2)),
      event("default", "b", Rational(-1)),
      event("p", "a", Rational(-2), Polarity::Negative),
      event("p", "b", Rational(1), Polarity::Negative),
  };
  std::vector<Observation> observations = {{"default", false, true, true},
                                           {"p", false, true, false}};
  auto acc = accumulate(events, observations, stats);
  auto report = build_report(acc, "m", Domain::Religion,
                             ContextCondition::Disambiguated, 3);

  std::string json = reports_to_json({report});
  auto decoded = reports_from_json(json);
  REQUIRE(decoded.size() == 1);
  CHECK(decoded[0] == report);

  auto aggregated = aggregate_iterations({report});
  std::string agg_json = aggregated_to_json(aggregated);
  auto agg_decoded = aggregated_from_json(agg_json);
  REQUIRE(agg_decoded.size() == 1);
  CHECK(agg_decoded[0].personas.at("p").tb_overall.mean ==
        aggregated[0].personas.at("p").tb_overall.mean);
  CHECK(agg_decoded[0].model_id == "m");
  CHECK(agg_decoded[0].iterations == 1);
}

TEST_CASE("in-group scenario yields a positive matrix diagonal") {
  DatasetStats stats;
  stats.appearances["a"] = 10;
  stats.appearances["b"] = 10;
  stats.question_count = 10;
  std::vector<ScoreEvent> events;
  std::vector<Observation> observations;
  for (const std::string persona : {"a", "b"}) {
    const std::string other = persona == "a" ? "b" : "a";
    for (int i = 0; i < 4; ++i) {
      events.push_back(event(persona, persona, Rational(2)));
      events.push_back(event(persona, other, Rational(-1)));
      observations.push_back({persona, false, true, false});
    }
  }
  observations.push_back({"default", true, false, false});
  auto acc = accumulate(events, observations, stats);
  auto aggregated = aggregate_iterations(
      {build_report(acc, "m", Domain::Age, ContextCondition::Ambiguous, 0)});

  TempDir dir;
  auto [csv_path, svg_path] =
      emit_matrix(aggregated[0], dir.path.string(), Rational::Round::HalfEven);
  std::istringstream lines(slurp(csv_path));
  std::string line;
  std::getline(lines, line);
  CHECK(line == "persona,a,b,tb_overall,bamt_overall,pb");
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string persona, cell_a, cell_b;
    std::getline(cells, persona, ',');
    std::getline(cells, cell_a, ',');
    std::getline(cells, cell_b, ',');
    if (persona == "a") {
      CHECK(std::stod(cell_a) > 0.0);
      CHECK(std::stod(cell_b) < 0.0);
    } else if (persona == "b") {
      CHECK(std::stod(cell_b) > 0.0);
      CHECK(std::stod(cell_a) < 0.0);
    }
  }
}
