#include "percept/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "percept/digest.hpp"
#include "percept/jsonl.hpp"

namespace percept {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Manifest

namespace {

SamplingParams sampling_from_json(const json& j) {
  SamplingParams p;
  if (j.contains("profile")) {
    std::string profile = j.at("profile").get<std::string>();
    if (profile == "hosted")
      p = SamplingParams::hosted_default();
    else if (profile == "open_weights")
      p = SamplingParams::open_weights_default();
    else
      throw std::invalid_argument("unknown sampling profile '" + profile + "'");
  }
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.max_new_tokens = j.value("max_new_tokens", p.max_new_tokens);
  p.repetition_penalty = j.value("repetition_penalty", p.repetition_penalty);
  p.presence_penalty = j.value("presence_penalty", p.presence_penalty);
  p.frequency_penalty = j.value("frequency_penalty", p.frequency_penalty);
  return p;
}

Rational weight_from_json(const json& j) {
  if (j.is_number_integer()) return Rational{j.get<long long>()};
  if (j.is_string()) return Rational::parse(j.get<std::string>());
  throw std::invalid_argument(
      "scoring weights must be integers or exact decimal strings");
}

ModelSpec model_from_json(const json& j) {
  ModelSpec spec;
  spec.id = j.at("id").get<std::string>();
  spec.backend = j.value("backend", std::string("scripted"));
  if (j.contains("sampling")) spec.sampling = sampling_from_json(j.at("sampling"));
  spec.supports_system_role = j.value("supports_system_role", true);
  if (spec.backend == "http") {
    spec.http.url = j.at("url").get<std::string>();
    spec.http.api_key_env = j.value("api_key_env", spec.http.api_key_env);
    spec.http.supports_system_role = spec.supports_system_role;
    spec.http.max_attempts = j.value("max_attempts", spec.http.max_attempts);
    spec.http.timeout_seconds = j.value("timeout_seconds", spec.http.timeout_seconds);
    spec.http.max_in_flight = j.value("max_in_flight", spec.http.max_in_flight);
    spec.http.requests_per_interval =
        j.value("requests_per_interval", spec.http.requests_per_interval);
    if (j.contains("interval_ms"))
      spec.http.interval =
          std::chrono::milliseconds(j.at("interval_ms").get<long long>());
    if (j.contains("backoff_base_ms"))
      spec.http.backoff_base =
          std::chrono::milliseconds(j.at("backoff_base_ms").get<long long>());
  } else if (spec.backend == "scripted") {
    if (j.contains("fixture"))
      spec.fixture_path = j.at("fixture").get<std::string>();
    if (j.contains("default_text"))
      spec.default_text = j.at("default_text").get<std::string>();
  } else if (spec.backend == "synthetic") {
    spec.matrix.compliance = j.value("compliance", 1.0);
    spec.uniform_incorrect = j.value("mode", std::string("preference")) ==
                             "uniform_incorrect";
    if (j.contains("bias"))
      for (auto& [persona, row] : j.at("bias").items())
        for (auto& [target, value] : row.items())
          spec.matrix.bias[persona][target] = value.get<double>();
  } else {
    throw std::invalid_argument("unknown backend '" + spec.backend + "'");
  }
  return spec;
}

}  // namespace

RunManifest RunManifest::from_json_text(const std::string& text) {
  json j = json::parse(text);
  RunManifest manifest;
  for (const auto& m : j.at("models")) manifest.models.push_back(model_from_json(m));
  for (const auto& d : j.at("domains")) {
    auto domain = parse_domain(d.get<std::string>());
    if (!domain)
      throw std::invalid_argument("unknown domain '" + d.get<std::string>() + "'");
    manifest.domains.push_back(*domain);
  }
  for (const auto& c : j.at("conditions")) {
    auto condition = parse_condition(c.get<std::string>());
    if (!condition)
      throw std::invalid_argument("unknown condition '" + c.get<std::string>() + "'");
    manifest.conditions.push_back(*condition);
  }
  std::string scope = j.value("persona_scope", std::string("default_only"));
  if (scope == "default_only")
    manifest.persona_scope = PersonaScope::DefaultOnly;
  else if (scope == "full")
    manifest.persona_scope = PersonaScope::Full;
  else
    throw std::invalid_argument("persona_scope must be 'default_only' or 'full'");
  manifest.iterations = j.value("iterations", 5);
  if (j.contains("scoring")) {
    const auto& s = j.at("scoring");
    if (s.contains("reward")) manifest.scoring.reward = weight_from_json(s.at("reward"));
    if (s.contains("penalty")) manifest.scoring.penalty = weight_from_json(s.at("penalty"));
    if (s.contains("counter")) manifest.scoring.counter = weight_from_json(s.at("counter"));
  }
  for (auto& [domain_name, conditions] : j.at("datasets").items()) {
    auto domain = parse_domain(domain_name);
    if (!domain)
      throw std::invalid_argument("unknown dataset domain '" + domain_name + "'");
    for (auto& [condition_name, path] : conditions.items()) {
      auto condition = parse_condition(condition_name);
      if (!condition)
        throw std::invalid_argument("unknown dataset condition '" +
                                    condition_name + "'");
      manifest.dataset_paths[*domain][*condition] = path.get<std::string>();
    }
  }
  manifest.seed = j.value("seed", 0ULL);
  manifest.concurrency = j.value("concurrency", 4);
  manifest.output_dir = j.value("output_dir", std::string("out"));
  manifest.reasoning = j.value("reasoning", false);
  manifest.fail_fast = j.value("fail_fast", false);
  std::string rounding = j.value("rounding", std::string("half_even"));
  if (rounding == "half_even")
    manifest.rounding = Rational::Round::HalfEven;
  else if (rounding == "half_away")
    manifest.rounding = Rational::Round::HalfAwayFromZero;
  else
    throw std::invalid_argument("rounding must be 'half_even' or 'half_away'");
  if (j.contains("cache_path"))
    manifest.cache_path = j.at("cache_path").get<std::string>();
  if (j.contains("catalog_path"))
    manifest.catalog_path = j.at("catalog_path").get<std::string>();
  if (j.contains("templates_path"))
    manifest.templates_path = j.at("templates_path").get<std::string>();
  if (j.contains("target_overrides"))
    for (auto& [domain_name, targets] : j.at("target_overrides").items()) {
      auto domain = parse_domain(domain_name);
      if (!domain)
        throw std::invalid_argument("unknown override domain '" + domain_name + "'");
      for (const auto& t : targets)
        manifest.target_overrides[*domain].push_back(t.get<std::string>());
    }
  manifest.validate();
  return manifest;
}

RunManifest RunManifest::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

void RunManifest::validate() const {
  if (models.empty()) throw std::invalid_argument("manifest lists no models");
  if (domains.empty()) throw std::invalid_argument("manifest lists no domains");
  if (conditions.empty())
    throw std::invalid_argument("manifest lists no conditions");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  const int n_templates =
      static_cast<int>(templates().persona_templates.size());
  if (persona_scope == PersonaScope::Full && iterations > n_templates)
    throw std::invalid_argument(
        "iterations cannot exceed the number of persona prompt templates (" +
        std::to_string(n_templates) + ") when persona scope is full");
  if (concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
  scoring.validate();
  for (Domain domain : domains)
    for (ContextCondition condition : conditions) {
      auto dit = dataset_paths.find(domain);
      if (dit == dataset_paths.end() ||
          dit->second.find(condition) == dit->second.end())
        throw std::invalid_argument("manifest lacks a dataset for " +
                                    to_string(domain) + "/" +
                                    to_string(condition));
    }
}

const Catalogs& RunManifest::catalogs() const {
  if (!catalog_path) return Catalogs::builtin();
  if (!loaded_catalogs_)
    loaded_catalogs_ = std::make_shared<Catalogs>(Catalogs::load_file(*catalog_path));
  return *loaded_catalogs_;
}

const PromptTemplateSet& RunManifest::templates() const {
  if (!templates_path) return default_templates();
  if (!loaded_templates_)
    loaded_templates_ =
        std::make_shared<PromptTemplateSet>(load_templates_file(*templates_path));
  return *loaded_templates_;
}

std::string RunManifest::digest() const {
  Fnv64 h;
  for (const auto& model : models) {
    h.feed(model.id);
    h.feed(model.backend);
    h.feed(model.sampling.temperature);
    h.feed(model.sampling.top_p);
    h.feed(static_cast<long long>(model.sampling.max_new_tokens));
    h.feed(model.supports_system_role ? 1LL : 0LL);
  }
  for (Domain domain : domains) h.feed(to_string(domain));
  for (ContextCondition condition : conditions) h.feed(to_string(condition));
  h.feed(persona_scope == PersonaScope::Full ? "full" : "default_only");
  h.feed(static_cast<long long>(iterations));
  for (const auto& [domain, by_condition] : dataset_paths)
    for (const auto& [condition, path] : by_condition) {
      h.feed(to_string(domain));
      h.feed(to_string(condition));
      h.feed(path);
    }
  h.feed(static_cast<long long>(seed));
  h.feed(reasoning ? 1LL : 0LL);
  if (catalog_path) h.feed(*catalog_path);
  if (templates_path) h.feed(*templates_path);
  return h.hex();
}

// ---------------------------------------------------------------------------
// Log entries

std::string ResponseLogEntry::to_json_line() const {
  nlohmann::ordered_json j;
  j["manifest"] = manifest_digest;
  j["model"] = model_id;
  j["domain"] = to_string(domain);
  j["condition"] = to_string(condition);
  j["persona"] = persona_id;
  j["iteration"] = iteration;
  j["question"] = question_id;
  j["prompts_digest"] = prompts_digest;
  j["mode"] = prompt_mode;
  j["ts"] = timestamp_ms;
  j["text"] = text;
  return j.dump();
}

ResponseLogEntry ResponseLogEntry::from_json_line(const std::string& line) {
  json j = json::parse(line);
  ResponseLogEntry entry;
  entry.manifest_digest = j.at("manifest").get<std::string>();
  entry.model_id = j.at("model").get<std::string>();
  auto domain = parse_domain(j.at("domain").get<std::string>());
  auto condition = parse_condition(j.at("condition").get<std::string>());
  if (!domain || !condition)
    throw std::runtime_error("log entry with unknown domain/condition");
  entry.domain = *domain;
  entry.condition = *condition;
  entry.persona_id = j.at("persona").get<std::string>();
  entry.iteration = j.at("iteration").get<int>();
  entry.question_id = j.at("question").get<std::string>();
  entry.prompts_digest = j.value("prompts_digest", std::string());
  entry.prompt_mode = j.value("mode", std::string("system"));
  entry.timestamp_ms = j.value("ts", 0LL);
  entry.text = j.at("text").get<std::string>();
  return entry;
}

std::vector<ResponseLogEntry> read_response_log(const std::string& path,
                                                bool truncate_partial_tail) {
  std::vector<ResponseLogEntry> entries;
  if (!fs::exists(path)) return entries;
  auto lines = read_jsonl_lines(path, truncate_partial_tail, [&](std::size_t bytes) {
    std::cerr << "warning: dropped " << bytes
              << " bytes of partial trailing line in " << path << "\n";
  });
  entries.reserve(lines.size());
  for (const auto& [line_no, line] : lines) {
    try {
      entries.push_back(ResponseLogEntry::from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("response log " + path + " line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Run

namespace {

struct CellKey {
  std::string model_id;
  Domain domain;
  ContextCondition condition;
  std::string persona_id;
  int iteration;
  std::string question_id;

  auto operator<=>(const CellKey&) const = default;
};

CellKey key_of(const ResponseLogEntry& entry) {
  return {entry.model_id, entry.domain,    entry.condition,
          entry.persona_id, entry.iteration, entry.question_id};
}

std::unique_ptr<Backend> make_backend(const ModelSpec& spec) {
  if (spec.backend == "http") {
    HttpBackendConfig config = spec.http;
    config.supports_system_role = spec.supports_system_role;
    return std::make_unique<HttpBackend>(config);
  }
  if (spec.backend == "scripted") {
    auto backend = std::make_unique<ScriptedBackend>();
    if (spec.fixture_path) backend->load_fixture_file(*spec.fixture_path);
    if (spec.default_text) backend->set_default_text(*spec.default_text);
    return backend;
  }
  auto mode = spec.uniform_incorrect ? SyntheticBackend::Mode::UniformIncorrect
                                     : SyntheticBackend::Mode::Preference;
  return std::make_unique<SyntheticBackend>(spec.matrix, mode);
}

std::string prompts_digest(const std::optional<std::string>& system,
                           const std::string& user) {
  Fnv64 h;
  h.feed(system ? *system : std::string("\x01"));
  h.feed(user);
  return h.hex();
}

}  // namespace

using DatasetIndex =
    std::map<std::pair<Domain, ContextCondition>, std::vector<QuestionRecord>>;

static DatasetIndex load_manifest_datasets(const RunManifest& manifest) {
  DatasetIndex datasets;
  const Catalogs& catalogs = manifest.catalogs();
  for (Domain domain : manifest.domains) {
    for (ContextCondition condition : manifest.conditions) {
      LoadOptions options;
      options.catalogs = &catalogs;
      if (auto it = manifest.target_overrides.find(domain);
          it != manifest.target_overrides.end())
        options.target_override = it->second;
      datasets[{domain, condition}] = load_dataset_file(
          manifest.dataset_paths.at(domain).at(condition), domain, condition,
          options);
    }
  }
  return datasets;
}

RunResult run(const RunManifest& manifest, const RunOptions& options) {
  manifest.validate();
  fs::create_directories(manifest.output_dir);
  const std::string manifest_digest = manifest.digest();
  const std::string log_path = manifest.log_path();

  // Resume: collect keys already in the log; reject logs of other manifests.
  std::set<CellKey> done;
  for (const auto& entry : read_response_log(log_path, true)) {
    if (entry.manifest_digest != manifest_digest)
      throw std::runtime_error(
          "existing log " + log_path +
          " was produced by a different manifest; refusing to resume");
    done.insert(key_of(entry));
  }

  DatasetIndex datasets = load_manifest_datasets(manifest);
  const Catalogs& catalogs = manifest.catalogs();
  const PromptTemplateSet& templates = manifest.templates();

  auto now_ms = options.clock ? options.clock : []() -> long long {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };

  // Shared caches/backends per model.
  std::unique_ptr<ResponseCache> cache;
  if (manifest.cache_path)
    cache = std::make_unique<ResponseCache>(*manifest.cache_path);
  std::map<std::string, std::unique_ptr<Backend>> backends;
  std::map<std::string, std::unique_ptr<ModelGateway>> gateways;
  for (const auto& model : manifest.models) {
    backends[model.id] = make_backend(model);
    gateways[model.id] =
        std::make_unique<ModelGateway>(*backends[model.id], cache.get());
  }

  struct Cell {
    const ModelSpec* model;
    Domain domain;
    ContextCondition condition;
    const PersonaSpec* persona;
    int iteration;
    const QuestionRecord* question;
  };

  // Fixed enumeration order defines the log order.
  std::vector<Cell> cells;
  for (const auto& model : manifest.models)
    for (Domain domain : manifest.domains) {
      const auto& personas = persona_catalog(domain, catalogs);
      for (ContextCondition condition : manifest.conditions)
        for (const auto& persona : personas) {
          if (manifest.persona_scope == PersonaScope::DefaultOnly &&
              !persona.is_default)
            continue;
          for (int iteration = 0; iteration < manifest.iterations; ++iteration)
            for (const auto& question : datasets.at({domain, condition}))
              cells.push_back({&model, domain, condition, &persona, iteration,
                               &question});
        }
    }

  JsonlWriter writer(log_path);
  RunResult result;
  result.log_path = log_path;
  std::unique_ptr<JsonlWriter> error_writer;

  struct Produced {
    ResponseLogEntry entry;
    std::exception_ptr error;
  };

  const int template_count =
      static_cast<int>(templates.persona_templates.size());
  auto produce = [&](const Cell& cell) -> Produced {
    Produced produced;
    try {
      ChatRequest request;
      request.model_id = cell.model->id;
      request.system_prompt = render_system_prompt(
          *cell.persona, cell.iteration % template_count, templates);
      request.user_prompt =
          render_user_prompt(*cell.question, manifest.reasoning, templates);
      request.sampling = cell.model->sampling;
      request.iteration = cell.iteration;

      QueryContext query{request, cell.persona->id, cell.question};
      RawResponse response = gateways.at(cell.model->id)->complete(query);

      ResponseLogEntry entry;
      entry.manifest_digest = manifest_digest;
      entry.model_id = cell.model->id;
      entry.domain = cell.domain;
      entry.condition = cell.condition;
      entry.persona_id = cell.persona->id;
      entry.iteration = cell.iteration;
      entry.question_id = cell.question->id;
      entry.prompts_digest =
          prompts_digest(request.system_prompt, request.user_prompt);
      entry.prompt_mode = !request.system_prompt ? "none"
                          : cell.model->supports_system_role ? "system"
                                                             : "inline";
      entry.timestamp_ms = now_ms();
      entry.text = response.text;
      produced.entry = std::move(entry);
    } catch (...) {
      produced.error = std::current_exception();
    }
    return produced;
  };

  // Cells still to produce, in enumeration order.
  std::vector<const Cell*> pending;
  for (const auto& cell : cells) {
    CellKey key{cell.model->id, cell.domain,    cell.condition,
                cell.persona->id, cell.iteration, cell.question->id};
    if (done.count(key))
      ++result.skipped;
    else
      pending.push_back(&cell);
  }
  if (options.max_new_entries &&
      pending.size() > static_cast<size_t>(*options.max_new_entries))
    pending.resize(static_cast<size_t>(*options.max_new_entries));

  // Worker pool with strictly in-order writes: the log layout never depends
  // on scheduling, so resumed runs reproduce uninterrupted logs byte for
  // byte. Back-pressure keeps at most a small window of results buffered.
  const size_t window = static_cast<size_t>(manifest.concurrency) * 4 + 1;
  std::mutex mutex;
  std::condition_variable produced_cv, space_cv;
  std::map<size_t, Produced> ready;
  std::atomic<size_t> next_index{0};
  size_t next_to_write = 0;

  auto worker = [&] {
    for (;;) {
      size_t index = next_index.fetch_add(1);
      if (index >= pending.size()) return;
      {
        std::unique_lock lock(mutex);
        space_cv.wait(lock, [&] { return index < next_to_write + window; });
      }
      Produced produced = produce(*pending[index]);
      {
        std::lock_guard lock(mutex);
        ready.emplace(index, std::move(produced));
      }
      produced_cv.notify_all();
    }
  };
  std::vector<std::thread> workers;
  const int n_workers = static_cast<int>(
      std::min<size_t>(static_cast<size_t>(manifest.concurrency),
                       pending.size()));
  for (int i = 0; i < n_workers; ++i) workers.emplace_back(worker);

  std::exception_ptr abort;
  for (size_t index = 0; index < pending.size(); ++index) {
    Produced produced;
    {
      std::unique_lock lock(mutex);
      produced_cv.wait(lock, [&] { return ready.count(index) > 0; });
      produced = std::move(ready.at(index));
      ready.erase(index);
      next_to_write = index + 1;
    }
    space_cv.notify_all();
    const Cell* cell = pending[index];
    if (produced.error) {
      ++result.failed;
      try {
        std::rethrow_exception(produced.error);
      } catch (const std::exception& e) {
        if (manifest.fail_fast) {
          abort = std::current_exception();
          break;
        }
        if (!error_writer)
          error_writer = std::make_unique<JsonlWriter>(manifest.output_dir +
                                                       "/errors.jsonl");
        nlohmann::ordered_json j;
        j["model"] = cell->model->id;
        j["domain"] = to_string(cell->domain);
        j["condition"] = to_string(cell->condition);
        j["persona"] = cell->persona->id;
        j["iteration"] = cell->iteration;
        j["question"] = cell->question->id;
        j["error"] = e.what();
        error_writer->append(j.dump());
      }
      continue;
    }
    writer.append(produced.entry.to_json_line());
    ++result.completed;
    if (options.progress && result.completed % 500 == 0)
      *options.progress << "completed " << result.completed << " cells\n";
  }
  if (abort) {
    // Unblock and drain the pool before propagating.
    next_index.store(pending.size());
    {
      std::lock_guard lock(mutex);
      next_to_write = pending.size();
    }
    space_cv.notify_all();
  }
  for (auto& thread : workers) thread.join();
  if (abort) std::rethrow_exception(abort);
  return result;
}

// ---------------------------------------------------------------------------
// Scoring

std::vector<MetricsReport> score_log(const std::vector<ResponseLogEntry>& log,
                                     const RunManifest& manifest) {
  DatasetIndex datasets = load_manifest_datasets(manifest);
  std::map<std::pair<Domain, ContextCondition>,
           std::map<std::string, const QuestionRecord*>>
      by_id;
  for (const auto& [key, records] : datasets)
    for (const auto& record : records) by_id[key][record.id] = &record;

  struct ScenarioKey {
    std::string model_id;
    Domain domain;
    ContextCondition condition;
    int iteration;
    auto operator<=>(const ScenarioKey&) const = default;
  };

  std::map<ScenarioKey, PerceptionAccumulator> accumulators;
  std::set<CellKey> seen;
  for (const auto& entry : log) {
    auto dataset_it = by_id.find({entry.domain, entry.condition});
    if (dataset_it == by_id.end())
      throw std::runtime_error("log entry for unloaded slice " +
                               to_string(entry.domain) + "/" +
                               to_string(entry.condition));
    auto record_it = dataset_it->second.find(entry.question_id);
    if (record_it == dataset_it->second.end())
      throw std::runtime_error("orphan log entry: question '" +
                               entry.question_id + "' not in dataset");
    if (!seen.insert(key_of(entry)).second)
      throw std::runtime_error("duplicate log entry for question '" +
                               entry.question_id + "'");

    ScenarioKey key{entry.model_id, entry.domain, entry.condition,
                    entry.iteration};
    auto [acc_it, inserted] = accumulators.try_emplace(key);
    if (inserted)
      acc_it->second.add_stats(
          validate_statistics(datasets.at({entry.domain, entry.condition})));

    const QuestionRecord& record = *record_it->second;
    InterpretedAnswer answer = extract_choice(entry.text, record);
    std::vector<ScoreEvent> events =
        score_response(record, answer, entry.persona_id, manifest.scoring);
    acc_it->second.add_response(record, answer, entry.persona_id, events);
  }

  std::vector<MetricsReport> reports;
  reports.reserve(accumulators.size());
  for (const auto& [key, acc] : accumulators)
    reports.push_back(build_report(acc, key.model_id, key.domain,
                                   key.condition, key.iteration));
  return reports;
}

std::vector<MetricsReport> score_log_file(const std::string& path,
                                          const RunManifest& manifest) {
  return score_log(read_response_log(path), manifest);
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

MetricSummary summarize(const std::vector<Rational>& values) {
  MetricSummary summary;
  Rational sum;
  for (const auto& v : values) sum += v;
  summary.mean = sum / Rational{static_cast<long long>(values.size())};
  if (values.size() > 1) {
    Rational ss;
    for (const auto& v : values) {
      Rational d = v - summary.mean;
      ss += d * d;
    }
    summary.stddev = std::sqrt(
        (ss / Rational{static_cast<long long>(values.size() - 1)}).to_double());
  }
  return summary;
}

}  // namespace

std::vector<AggregatedReport> aggregate_iterations(
    const std::vector<MetricsReport>& reports) {
  struct GroupKey {
    std::string model_id;
    Domain domain;
    ContextCondition condition;
    auto operator<=>(const GroupKey&) const = default;
  };
  std::map<GroupKey, std::vector<const MetricsReport*>> groups;
  for (const auto& report : reports)
    groups[{report.model_id, report.domain, report.condition}].push_back(&report);

  std::vector<AggregatedReport> aggregated;
  for (const auto& [key, group] : groups) {
    const MetricsReport& first = *group.front();
    for (const MetricsReport* report : group) {
      if (report->personas.size() != first.personas.size())
        throw MetricsError("inconsistent scenario keys across iterations");
      for (const auto& [persona_id, metrics] : report->personas) {
        auto it = first.personas.find(persona_id);
        if (it == first.personas.end() ||
            it->second.targets.size() != metrics.targets.size())
          throw MetricsError("inconsistent scenario keys across iterations");
      }
    }

    AggregatedReport agg;
    agg.model_id = key.model_id;
    agg.domain = key.domain;
    agg.condition = key.condition;
    agg.iterations = static_cast<int>(group.size());

    auto collect = [&](auto&& getter) {
      std::vector<Rational> values;
      values.reserve(group.size());
      for (const MetricsReport* report : group) values.push_back(getter(*report));
      return summarize(values);
    };

    for (const auto& [persona_id, metrics] : first.personas) {
      AggregatedPersona persona;
      const std::string id = persona_id;
      persona.tb_overall = collect(
          [&](const MetricsReport& r) { return r.personas.at(id).tb_overall; });
      persona.bamt_overall = collect([&](const MetricsReport& r) {
        return r.personas.at(id).bamt_overall;
      });
      persona.accuracy = collect(
          [&](const MetricsReport& r) { return r.personas.at(id).accuracy; });
      persona.bias_score = collect(
          [&](const MetricsReport& r) { return r.personas.at(id).bias_score; });
      if (metrics.pb)
        persona.pb = collect(
            [&](const MetricsReport& r) { return *r.personas.at(id).pb; });
      for (const auto& [target_id, cells] : metrics.targets) {
        AggregatedTargetCells agg_cells;
        const std::string tid = target_id;
        auto target_metric = [&](auto member) {
          return collect([&, member](const MetricsReport& r) {
            return r.personas.at(id).targets.at(tid).*member;
          });
        };
        agg_cells.tb = target_metric(&TargetCells::tb);
        agg_cells.bamt = target_metric(&TargetCells::bamt);
        agg_cells.pos_share = target_metric(&TargetCells::pos_share);
        agg_cells.neg_share = target_metric(&TargetCells::neg_share);
        agg_cells.prop_pos = target_metric(&TargetCells::prop_pos);
        agg_cells.prop_neutral = target_metric(&TargetCells::prop_neutral);
        agg_cells.prop_neg = target_metric(&TargetCells::prop_neg);
        persona.targets[target_id] = std::move(agg_cells);
      }
      agg.personas[persona_id] = std::move(persona);
    }
    if (first.pb_overall)
      agg.pb_overall = collect(
          [&](const MetricsReport& r) { return r.pb_overall.value_or(Rational{}); });
    aggregated.push_back(std::move(agg));
  }
  return aggregated;
}

}  // namespace percept
