#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "percept/dataset.hpp"
#include "percept/orchestrator.hpp"
#include "percept/report.hpp"

namespace fs = std::filesystem;
using namespace percept;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int cmd_synth(const std::string& out_path, int n, const std::string& targets,
              double mix, const std::string& condition,
              const std::string& domain, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_questions = n;
  std::stringstream ss(targets);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) spec.targets.push_back(item);
  spec.polarity_mix = mix;
  auto cond = parse_condition(condition);
  if (!cond) throw std::runtime_error("unknown condition '" + condition + "'");
  spec.condition = *cond;
  auto dom = parse_domain(domain);
  if (!dom) throw std::runtime_error("unknown domain '" + domain + "'");
  spec.domain = *dom;
  spec.seed = seed;

  auto records = generate_synthetic_dataset(spec);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  write_dataset(out, records);
  std::cout << "wrote " << records.size() << " questions to " << out_path
            << "\n";
  return 0;
}

int cmd_stats(const std::string& dataset_path, const std::string& domain,
              const std::string& condition, const std::string& targets) {
  auto dom = parse_domain(domain);
  if (!dom) throw std::runtime_error("unknown domain '" + domain + "'");
  auto cond = parse_condition(condition);
  if (!cond) throw std::runtime_error("unknown condition '" + condition + "'");
  LoadOptions options;
  std::vector<std::string> override_list;
  if (!targets.empty()) {
    std::stringstream ss(targets);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) override_list.push_back(item);
    options.target_override = override_list;
  }
  auto records = load_dataset_file(dataset_path, *dom, *cond, options);
  auto stats = validate_statistics(records);
  std::cout << "questions: " << stats.question_count << "\n";
  long long total = 0;
  for (const auto& [target, count] : stats.appearances) {
    std::cout << "  " << target << ": " << count << "\n";
    total += count;
  }
  std::cout << "sum of appearances: " << total << " (= 2 x "
            << stats.question_count << ")\n";
  return total == 2 * stats.question_count ? 0 : 1;
}

int cmd_run(const std::string& manifest_path, std::optional<long> limit) {
  RunManifest manifest = RunManifest::load_file(manifest_path);
  RunOptions options;
  options.progress = &std::cerr;
  if (limit) options.max_new_entries = *limit;
  RunResult result = run(manifest, options);
  std::cout << "completed " << result.completed << ", skipped "
            << result.skipped << ", failed " << result.failed << "\n"
            << "log: " << result.log_path << "\n";
  return result.failed == 0 ? 0 : 1;
}

int cmd_score(const std::string& manifest_path, std::string log_path,
              std::string out_dir) {
  RunManifest manifest = RunManifest::load_file(manifest_path);
  if (log_path.empty()) log_path = manifest.log_path();
  if (out_dir.empty()) out_dir = manifest.output_dir + "/reports";
  auto reports = score_log_file(log_path, manifest);
  auto aggregated = aggregate_iterations(reports);
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/iterations.json", std::ios::binary);
    out << reports_to_json(reports);
  }
  {
    std::ofstream out(out_dir + "/aggregated.json", std::ios::binary);
    out << aggregated_to_json(aggregated);
  }
  std::cout << "scored " << reports.size() << " scenario iterations into "
            << out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& reports_path, std::string out_dir,
               const std::string& rounding) {
  auto aggregated = aggregated_from_json(read_file(reports_path));
  if (out_dir.empty())
    out_dir = fs::path(reports_path).parent_path().string() + "/bundle";
  Rational::Round mode = rounding == "half_away"
                             ? Rational::Round::HalfAwayFromZero
                             : Rational::Round::HalfEven;
  ReportPaths paths = emit_report_bundle(aggregated, out_dir, mode);
  std::cout << "tables: " << paths.tables_csv << "\n"
            << "matrices: " << paths.matrix_csvs.size() << " grids\n"
            << "scatter: " << paths.scatter_csv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona-perception evaluation harness"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_out = "synthetic.jsonl";
  int synth_n = 100;
  std::string synth_targets = "nonOld,Old";
  double synth_mix = 0.5;
  std::string synth_condition = "ambiguous";
  std::string synth_domain = "Age";
  std::uint64_t synth_seed = 0;
  synth->add_option("-o,--out", synth_out, "Output path");
  synth->add_option("-n,--questions", synth_n, "Number of questions");
  synth->add_option("--targets", synth_targets, "Comma-separated target ids");
  synth->add_option("--mix", synth_mix, "Fraction of positive questions");
  synth->add_option("--condition", synth_condition,
                    "ambiguous or disambiguated");
  synth->add_option("--domain", synth_domain, "Domain tag for the records");
  synth->add_option("--seed", synth_seed, "Generator seed");

  // stats
  auto* stats = app.add_subcommand("stats", "Validate a dataset slice");
  std::string stats_dataset, stats_domain = "Age",
                             stats_condition = "ambiguous", stats_targets;
  stats->add_option("dataset", stats_dataset, "Dataset jsonl path")->required();
  stats->add_option("--domain", stats_domain, "Domain to load");
  stats->add_option("--condition", stats_condition, "Condition to load");
  stats->add_option("--targets", stats_targets,
                    "Comma-separated target override");

  // run
  auto* run_cmd = app.add_subcommand("run", "Execute a manifest");
  std::string run_manifest;
  long run_limit = -1;
  run_cmd->add_option("manifest", run_manifest, "Manifest path")->required();
  run_cmd->add_option("--limit", run_limit,
                      "Stop after this many new responses");

  // score
  auto* score = app.add_subcommand("score", "Score a response log");
  std::string score_manifest, score_log_path, score_out;
  score->add_option("manifest", score_manifest, "Manifest path")->required();
  score->add_option("--log", score_log_path,
                    "Response log (default: manifest output)");
  score->add_option("-o,--out", score_out, "Report directory");

  // report
  auto* report = app.add_subcommand("report", "Emit presentation files");
  std::string report_reports, report_out, report_rounding = "half_even";
  report->add_option("reports", report_reports, "aggregated.json path")
      ->required();
  report->add_option("-o,--out", report_out, "Bundle directory");
  report->add_option("--rounding", report_rounding,
                     "half_even or half_away");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth(synth_out, synth_n, synth_targets, synth_mix,
                       synth_condition, synth_domain, synth_seed);
    if (stats->parsed())
      return cmd_stats(stats_dataset, stats_domain, stats_condition,
                       stats_targets);
    if (run_cmd->parsed())
      return cmd_run(run_manifest,
                     run_limit >= 0 ? std::optional<long>(run_limit)
                                    : std::nullopt);
    if (score->parsed())
      return cmd_score(score_manifest, score_log_path, score_out);
    if (report->parsed())
      return cmd_report(report_reports, report_out, report_rounding);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
