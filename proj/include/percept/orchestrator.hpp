#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "percept/dataset.hpp"
#include "percept/domains.hpp"
#include "percept/gateway.hpp"
#include "percept/metrics.hpp"
#include "percept/persona.hpp"
#include "percept/rational.hpp"

namespace percept {

enum class PersonaScope { DefaultOnly, Full };

struct ModelSpec {
  std::string id;
  /// "http", "scripted" or "synthetic"; backend-specific keys documented in
  /// docs/formats.md.
  std::string backend = "scripted";
  SamplingParams sampling = SamplingParams::hosted_default();
  bool supports_system_role = true;

  // http
  HttpBackendConfig http;
  // scripted
  std::optional<std::string> fixture_path;
  std::optional<std::string> default_text;
  // synthetic
  PreferenceMatrix matrix;
  bool uniform_incorrect = false;
};

/// Full experiment matrix description.
struct RunManifest {
  std::vector<ModelSpec> models;
  std::vector<Domain> domains;
  std::vector<ContextCondition> conditions;
  PersonaScope persona_scope = PersonaScope::DefaultOnly;
  int iterations = 5;
  ScoringConfig scoring;
  /// dataset_paths[domain][condition] -> jsonl file.
  std::map<Domain, std::map<ContextCondition, std::string>> dataset_paths;
  std::uint64_t seed = 0;
  int concurrency = 4;
  std::string output_dir = "out";
  bool reasoning = false;
  bool fail_fast = false;
  Rational::Round rounding = Rational::Round::HalfEven;
  std::optional<std::string> cache_path;
  std::optional<std::string> catalog_path;
  std::optional<std::string> templates_path;
  /// Per-domain target lists for datasets whose targets are not in the
  /// catalog (synthetic fixtures).
  std::map<Domain, std::vector<std::string>> target_overrides;

  static RunManifest load_file(const std::string& path);
  static RunManifest from_json_text(const std::string& text);
  void validate() const;

  /// Digest over the response-affecting fields; stamped into every log entry
  /// so resumes against a changed experiment are rejected.
  std::string digest() const;

  std::string log_path() const { return output_dir + "/responses.jsonl"; }
  const Catalogs& catalogs() const;
  const PromptTemplateSet& templates() const;

 private:
  mutable std::shared_ptr<Catalogs> loaded_catalogs_;
  mutable std::shared_ptr<PromptTemplateSet> loaded_templates_;
};

struct ResponseLogEntry {
  std::string manifest_digest;
  std::string model_id;
  Domain domain = Domain::Age;
  ContextCondition condition = ContextCondition::Ambiguous;
  std::string persona_id;
  int iteration = 0;
  std::string question_id;
  std::string prompts_digest;
  std::string prompt_mode;  // "system" or "inline"
  long long timestamp_ms = 0;
  std::string text;

  std::string to_json_line() const;
  static ResponseLogEntry from_json_line(const std::string& line);
};

struct RunOptions {
  /// Stop after this many newly produced entries (used to exercise resume).
  std::optional<long> max_new_entries;
  /// Injectable clock for reproducible timestamps.
  std::function<long long()> clock;
  std::ostream* progress = nullptr;
};

struct RunResult {
  long completed = 0;
  long skipped = 0;
  long failed = 0;
  std::string log_path;
};

/// Drives the experiment matrix, appending one log entry per cell in a fixed
/// enumeration order. Cells already present in the log are skipped, so an
/// interrupted run resumes into a byte-identical log. Backend calls run
/// concurrently up to `manifest.concurrency`; writes are serialized in order.
RunResult run(const RunManifest& manifest, const RunOptions& options = {});

/// Deterministic re-scoring of an existing log; no backend access.
std::vector<MetricsReport> score_log(const std::vector<ResponseLogEntry>& log,
                                     const RunManifest& manifest);
std::vector<MetricsReport> score_log_file(const std::string& path,
                                          const RunManifest& manifest);

std::vector<ResponseLogEntry> read_response_log(const std::string& path,
                                                bool truncate_partial_tail = false);

/// Mean and sample standard deviation of one metric across iterations.
struct MetricSummary {
  Rational mean;
  double stddev = 0.0;  // n-1 normalization; 0 for a single iteration

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct AggregatedTargetCells {
  MetricSummary tb, bamt, pos_share, neg_share, prop_pos, prop_neutral,
      prop_neg;
};

struct AggregatedPersona {
  std::map<std::string, AggregatedTargetCells> targets;
  MetricSummary tb_overall, bamt_overall, accuracy, bias_score;
  std::optional<MetricSummary> pb;
};

struct AggregatedReport {
  std::string model_id;
  Domain domain = Domain::Age;
  ContextCondition condition = ContextCondition::Ambiguous;
  int iterations = 0;
  std::map<std::string, AggregatedPersona> personas;
  std::optional<MetricSummary> pb_overall;
};

/// Element-wise mean/std across iterations of the same scenario; reports are
/// grouped by (model, domain, condition).
std::vector<AggregatedReport> aggregate_iterations(
    const std::vector<MetricsReport>& reports);

}  // namespace percept
