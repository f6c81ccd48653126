#include "taskforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <set>
#include <sstream>
#include <thread>

#include "taskforge/corpus.hpp"
#include "taskforge/digest.hpp"
#include "taskforge/prompting.hpp"
#include "taskforge/sampler.hpp"

namespace taskforge {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void PipelineConfig::validate() const {
  if (inputs.empty() && !input_dir) throw ConfigError("no input files or input directory given");
  if (input_dir && !fs::is_directory(*input_dir)) throw ConfigError("input directory " + input_dir->string() + " does not exist");
  if (!(curation.threshold >= 1.0 && curation.threshold <= 10.0)) {
    throw ConfigError("threshold must lie in [1, 10], got " + json(curation.threshold).dump());
  }
  if (curation.plans_per_group < 1) throw ConfigError("plans_per_group must be >= 1");
  if (curation.scores_per_plan < 1) throw ConfigError("scores_per_plan must be >= 1");
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  if (max_groups && *max_groups == 0) throw ConfigError("max_groups must be positive");
  if (template_dir && !fs::is_directory(*template_dir)) {
    throw ConfigError("template directory " + template_dir->string() + " does not exist");
  }
  try {
    gateway.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::vector<fs::path> PipelineConfig::resolve_inputs() const {
  std::vector<fs::path> out = inputs;
  if (input_dir) {
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(*input_dir)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && !name.starts_with(".")) found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

void PipelineConfig::merge_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{
      "inputs",         "input_dir",       "out",         "seed",          "backend",     "base_url",
      "api_key_env",    "model",           "temperature", "max_tokens",    "max_retries", "backoff_ms",
      "max_in_flight",  "timeout_ms",      "cache",       "threshold",     "plans_per_group",
      "scores_per_plan", "parse_retries",  "score_retries", "max_groups",  "concurrency", "template_dir",
      "resume"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("inputs")) inputs = j["inputs"].get<std::vector<fs::path>>();
    if (j.contains("input_dir")) input_dir = j["input_dir"].get<std::string>();
    if (j.contains("out")) out_dir = j["out"].get<std::string>();
    if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
    if (j.contains("backend")) gateway.backend = backend_kind_from_string(j["backend"].get<std::string>());
    if (j.contains("base_url")) gateway.base_url = j["base_url"].get<std::string>();
    if (j.contains("api_key_env")) gateway.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("model")) gateway.model = j["model"].get<std::string>();
    if (j.contains("temperature")) gateway.temperature = j["temperature"].get<double>();
    if (j.contains("max_tokens")) gateway.max_tokens = j["max_tokens"].get<int>();
    if (j.contains("max_retries")) gateway.max_retries = j["max_retries"].get<int>();
    if (j.contains("backoff_ms")) {
      gateway.backoff.clear();
      for (const auto ms : j["backoff_ms"].get<std::vector<long long>>()) {
        gateway.backoff.emplace_back(ms);
      }
    }
    if (j.contains("timeout_ms")) gateway.timeout = std::chrono::milliseconds(j["timeout_ms"].get<long long>());
    if (j.contains("cache")) cache = j["cache"].get<bool>();
    if (j.contains("threshold")) curation.threshold = j["threshold"].get<double>();
    if (j.contains("plans_per_group")) curation.plans_per_group = j["plans_per_group"].get<std::size_t>();
    if (j.contains("scores_per_plan")) curation.scores_per_plan = j["scores_per_plan"].get<std::size_t>();
    if (j.contains("parse_retries")) curation.parse_retries = j["parse_retries"].get<std::size_t>();
    if (j.contains("score_retries")) curation.score_retries = j["score_retries"].get<std::size_t>();
    if (j.contains("max_groups")) {
      if (j["max_groups"].is_null()) {
        max_groups.reset();
      } else {
        max_groups = j["max_groups"].get<std::size_t>();
      }
    }
    if (j.contains("concurrency")) {
      concurrency = j["concurrency"].get<std::size_t>();
      gateway.max_in_flight = concurrency;
    }
    if (j.contains("max_in_flight")) gateway.max_in_flight = j["max_in_flight"].get<std::size_t>();
    if (j.contains("template_dir")) template_dir = j["template_dir"].get<std::string>();
    if (j.contains("resume")) resume = j["resume"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

PipelineConfig PipelineConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  PipelineConfig config;
  config.merge_json(j);
  // Relative paths in a config file are relative to the file itself.
  const auto base = path.parent_path();
  auto rebase = [&](fs::path& p) {
    if (p.is_relative()) p = base / p;
  };
  for (auto& p : config.inputs) rebase(p);
  if (config.input_dir) rebase(*config.input_dir);
  if (j.contains("out")) rebase(config.out_dir);
  if (config.template_dir) rebase(*config.template_dir);
  return config;
}

json PipelineConfig::to_json() const {
  std::vector<long long> backoff_ms;
  for (const auto d : gateway.backoff) backoff_ms.push_back(d.count());
  json j{{"inputs", inputs},
         {"out", out_dir},
         {"seed", seed},
         {"backend", to_string(gateway.backend)},
         {"base_url", gateway.base_url},
         {"api_key_env", gateway.api_key_env},
         {"model", gateway.model},
         {"temperature", gateway.temperature},
         {"max_tokens", gateway.max_tokens},
         {"max_retries", gateway.max_retries},
         {"backoff_ms", backoff_ms},
         {"max_in_flight", gateway.max_in_flight},
         {"timeout_ms", gateway.timeout.count()},
         {"cache", cache},
         {"threshold", curation.threshold},
         {"plans_per_group", curation.plans_per_group},
         {"scores_per_plan", curation.scores_per_plan},
         {"parse_retries", curation.parse_retries},
         {"score_retries", curation.score_retries},
         {"max_groups", max_groups ? json(*max_groups) : json(nullptr)},
         {"concurrency", concurrency},
         {"template_dir", template_dir ? json(template_dir->string()) : json(nullptr)},
         {"resume", resume}};
  if (input_dir) j["input_dir"] = input_dir->string();
  return j;
}

namespace {

struct Templates {
  PromptTemplate generation = PromptTemplate::default_generation();
  PromptTemplate scoring = PromptTemplate::default_scoring();
};

Templates load_templates(const PipelineConfig& config) {
  Templates t;
  if (!config.template_dir) return t;
  try {
    if (const auto p = *config.template_dir / "generation.txt"; fs::exists(p)) {
      t.generation = PromptTemplate::from_file(PromptKind::generation, p);
    }
    if (const auto p = *config.template_dir / "scoring.txt"; fs::exists(p)) {
      t.scoring = PromptTemplate::from_file(PromptKind::scoring, p);
    }
  } catch (const TemplateError& e) {
    throw ConfigError(e.what());
  }
  return t;
}

std::string digest_of(const json& j) { return sha256_hex(j.dump()); }

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadable(path);
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.finish_hex();
}

StageDigests digests_with_templates(const PipelineConfig& config, const std::vector<fs::path>& inputs,
                                    const Templates& templates) {
  StageDigests d;
  json files = json::array();
  for (const auto& p : inputs) files.push_back({p.filename().string(), file_digest(p)});
  d.ingest = digest_of({{"stage", "ingest"}, {"files", files}});
  d.groups = digest_of({{"stage", "groups"},
                        {"up", d.ingest},
                        {"seed", config.seed},
                        {"max_groups", config.max_groups ? json(*config.max_groups) : json(nullptr)}});
  json gen{{"stage", "generations"},
           {"up", d.groups},
           {"backend", to_string(config.gateway.backend)},
           {"model", config.gateway.model},
           {"temperature", config.gateway.temperature},
           {"max_tokens", config.gateway.max_tokens},
           {"plans_per_group", config.curation.plans_per_group},
           {"parse_retries", config.curation.parse_retries},
           {"template", templates.generation.body()}};
  if (config.gateway.backend == BackendKind::remote) gen["base_url"] = config.gateway.base_url;
  d.generations = digest_of(gen);
  d.scores = digest_of({{"stage", "scores"},
                        {"up", d.generations},
                        {"scores_per_plan", config.curation.scores_per_plan},
                        {"score_retries", config.curation.score_retries},
                        {"template", templates.scoring.body()}});
  d.curated = digest_of({{"stage", "curated"}, {"up", d.scores}, {"threshold", config.curation.threshold}});
  return d;
}

}  // namespace

StageDigests stage_digests(const PipelineConfig& config, const std::vector<fs::path>& inputs) {
  return digests_with_templates(config, inputs, load_templates(config));
}

// ---------------------------------------------------------------------------
// Run

namespace {

constexpr std::array<const char*, 5> kStageOrder{"ingest", "groups", "generations", "scores", "curated"};

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return out.str();
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

class EventLog {
 public:
  explicit EventLog(const fs::path& path) : out_(path, std::ios::app) {
    if (!out_) throw IoError("cannot open event log " + path.string());
  }
  void operator()(const json& record) {
    std::lock_guard lock(mutex_);
    out_ << record.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
  std::mutex mutex_;
};

// Persistent per-stage bookkeeping: digest, completion flag, stage extras.
class StageState {
 public:
  explicit StageState(fs::path path) : path_(std::move(path)) {}

  void load() {
    std::ifstream in(path_);
    if (!in) return;
    try {
      state_ = json::parse(in);
    } catch (const json::exception&) {
      state_ = json::object();
    }
    if (!state_.is_object()) state_ = json::object();
  }

  bool complete(const std::string& stage, const std::string& digest) const {
    const auto it = state_.find(stage);
    return it != state_.end() && it->value("digest", "") == digest && it->value("complete", false);
  }
  bool digest_matches(const std::string& stage, const std::string& digest) const {
    const auto it = state_.find(stage);
    return it != state_.end() && it->value("digest", "") == digest;
  }
  json extra(const std::string& stage) const {
    const auto it = state_.find(stage);
    return it != state_.end() ? it->value("extra", json::object()) : json::object();
  }
  void set(const std::string& stage, const std::string& digest, bool complete, json extra = json::object()) {
    state_[stage] = {{"digest", digest}, {"complete", complete}, {"extra", std::move(extra)}};
    save();
  }
  void erase(const std::string& stage) {
    state_.erase(stage);
    save();
  }

 private:
  void save() const { write_text_atomic(path_, state_.dump(2) + "\n"); }

  fs::path path_;
  json state_ = json::object();
};

bool is_group_level_failure(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const TransportError&) {
    return true;
  } catch (const RateLimitedExhausted&) {
    return true;
  } catch (const MalformedResponse&) {
    return true;
  } catch (...) {
    return false;
  }
}

std::string describe(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    return e.kind() + ": " + e.what();
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

// Runs fn(i) for i in [0, count) on up to `workers` threads. Group-level
// failures are collected per item; any other exception stops the pool from
// starting new items and is rethrown after all workers join.
template <class Fn>
std::vector<std::pair<std::size_t, std::string>> run_pool(std::size_t count, std::size_t workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mutex;
  std::vector<std::pair<std::size_t, std::string>> failures;
  std::exception_ptr fatal;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        auto ep = std::current_exception();
        std::lock_guard lock(mutex);
        if (is_group_level_failure(ep)) {
          failures.emplace_back(i, describe(ep));
        } else {
          if (!fatal) fatal = ep;
          abort = true;
        }
      }
    }
  };
  {
    std::vector<std::jthread> threads;
    const std::size_t n = std::max<std::size_t>(1, std::min(workers, count));
    for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);
  std::sort(failures.begin(), failures.end());
  return failures;
}

json generation_to_json(const DraftCandidate& d) {
  return {{"index", d.index},
          {"plan", d.generation.plan},
          {"paragraph", d.generation.paragraph},
          {"task_raw", d.generation.task_raw},
          {"labels", d.generation.labels}};
}

DraftCandidate draft_from_json(const json& j) {
  return DraftCandidate{j.at("index").get<std::size_t>(),
                        GenerationResult{j.at("plan").get<std::string>(), j.at("paragraph").get<std::string>(),
                                         j.at("task_raw").get<std::string>(),
                                         j.at("labels").get<std::vector<std::string>>()}};
}

// Latest record per group_id wins.
std::map<std::size_t, json> index_by_group(const std::vector<json>& records) {
  std::map<std::size_t, json> out;
  for (const auto& r : records) out[r.at("group_id").get<std::size_t>()] = r;
  return out;
}

PretrainDataset dataset_from_instances(std::vector<ScoredInstance> instances) {
  std::vector<TaskGroup> groups;
  for (auto& inst : instances) {
    if (groups.empty() || groups.back().task.key != inst.task.key) {
      groups.push_back(TaskGroup{inst.task, {}});
    }
    groups.back().instances.push_back(std::move(inst));
  }
  return assemble(std::move(groups));
}

}  // namespace

std::string render_summary(const Manifest& manifest, const RunStats& stats) {
  std::ostringstream out;
  out << "corpus      ingested " << manifest.corpus.ingested << ", after dedup " << manifest.corpus.deduplicated << '\n';
  out << "groups      sampled " << manifest.groups.sampled << ", generated " << manifest.groups.generated
      << ", parsed " << manifest.groups.parsed << ", scored " << manifest.groups.scored << ", selected "
      << manifest.groups.selected << '\n';
  out << "dropped    ";
  if (stats.drop_reasons.empty()) out << " none";
  for (const auto& [reason, n] : stats.drop_reasons) out << ' ' << reason << '=' << n;
  out << '\n';
  out << "instances   " << manifest.total_instances;
  if (manifest.empty) {
    out << " (empty dataset)\n";
  } else {
    out << ", mean paragraph words " << std::fixed << std::setprecision(2) << manifest.mean_paragraph_words << '\n';
  }
  out << "tasks\n";
  for (const auto& [name, n] : report_distribution(manifest)) out << "  " << std::setw(6) << n << "  " << name << '\n';
  out << "backend     calls " << stats.backend_calls << ", cache hits " << stats.cache_hits << '\n';
  out << "stages      run:";
  for (const auto& s : stats.stages_run) out << ' ' << s;
  out << "  skipped:";
  for (const auto& s : stats.stages_skipped) out << ' ' << s;
  out << '\n';
  out << "dataset     sha256 " << manifest.dataset_digest << '\n';
  return out.str();
}

RunResult run(const PipelineConfig& config, std::unique_ptr<Backend> backend) {
  RunResult result;
  std::string stage = "config";

  std::vector<fs::path> inputs;
  Templates templates;
  StageDigests digests;
  try {
    config.validate();
    inputs = config.resolve_inputs();
    if (inputs.empty()) throw ConfigError("no input files found");
    templates = load_templates(config);
    digests = digests_with_templates(config, inputs, templates);
  } catch (const Error& e) {
    result.exit_status = 2;
    result.diagnostic = "[config] " + std::string(e.what());
    return result;
  } catch (const fs::filesystem_error& e) {
    result.exit_status = 2;
    result.diagnostic = "[config] " + std::string(e.what());
    return result;
  }

  try {
    const fs::path out = config.out_dir;
    const fs::path ckpt_dir = out / "checkpoints";
    fs::create_directories(out / "logs");
    if (!config.resume) fs::remove_all(ckpt_dir);
    fs::create_directories(ckpt_dir);
    // A manifest on disk always belongs to a successful run.
    fs::remove(out / "manifest.json");

    EventLog events(out / "logs" / ("events-" + utc_stamp() + ".jsonl"));
    events({{"event", "run_start"}, {"config_digest", digests.curated}, {"resume", config.resume}});
    write_text_atomic(out / "config.json", config.to_json().dump(2) + "\n");

    CheckpointStore checkpoints(ckpt_dir);
    StageState state(ckpt_dir / "state.json");
    state.load();

    const std::array<const std::string*, 5> stage_digest{&digests.ingest, &digests.groups, &digests.generations,
                                                         &digests.scores, &digests.curated};
    // The first stage whose recorded digest differs invalidates itself and everything downstream.
    for (std::size_t s = 0; s < kStageOrder.size(); ++s) {
      if (state.digest_matches(kStageOrder[s], *stage_digest[s])) continue;
      for (std::size_t t = s; t < kStageOrder.size(); ++t) {
        state.erase(kStageOrder[t]);
        if (CheckpointStore::valid_stage(kStageOrder[t])) checkpoints.clear(kStageOrder[t]);
      }
      break;
    }

    auto mark_skipped = [&](const char* name) {
      result.stats.stages_skipped.emplace_back(name);
      events({{"event", "stage_skipped"}, {"stage", name}});
    };
    auto mark_run = [&](const char* name) {
      result.stats.stages_run.emplace_back(name);
      events({{"event", "stage_done"}, {"stage", name}});
    };

    // ingest
    stage = "ingest";
    SentenceStore store;
    std::size_t ingested_count = 0;
    const auto store_path = out / "store.jsonl";
    if (state.complete("ingest", digests.ingest) && fs::exists(store_path)) {
      const auto extra = state.extra("ingest");
      std::vector<SourceEntry> manifest;
      for (const auto& e : extra.at("sources")) {
        manifest.push_back(SourceEntry{e.at("tag").get<std::string>(), e.at("ingested").get<std::size_t>(),
                                       e.at("dropped").get<std::size_t>()});
      }
      std::ifstream in(store_path, std::ios::binary);
      store = read_store_jsonl(in, std::move(manifest));
      ingested_count = extra.at("ingested").get<std::size_t>();
      mark_skipped("ingest");
    } else {
      const auto raw = ingest(inputs);
      ingested_count = raw.size();
      store = deduplicate(raw);
      write_text_atomic(store_path, store_to_jsonl(store));
      json sources = json::array();
      for (const auto& e : store.source_manifest()) {
        sources.push_back({{"tag", e.tag}, {"ingested", e.ingested}, {"dropped", e.dropped}});
      }
      state.set("ingest", digests.ingest, true, {{"ingested", ingested_count}, {"sources", sources}});
      mark_run("ingest");
    }

    // sample
    stage = "groups";
    std::vector<SampleGroup> groups;
    if (state.complete("groups", digests.groups)) {
      for (const auto& r : checkpoints.read("groups")) groups.push_back(r.get<SampleGroup>());
      mark_skipped("groups");
    } else {
      checkpoints.clear("groups");
      groups = sample_groups(store, config.seed, config.max_groups);
      std::vector<json> records(groups.begin(), groups.end());
      write_checkpoint(checkpoints, "groups", records);
      state.set("groups", digests.groups, true);
      mark_run("groups");
    }

    GatewayConfig gw_config = config.gateway;
    if (config.cache) gw_config.cache_dir = out / "cache";
    if (!backend) backend = make_backend(gw_config);
    Gateway gateway(gw_config, std::move(backend));
    const CurationConfig& curation = config.curation;
    EventSink sink = [&events](const json& r) { events(r); };

    // generate
    stage = "generations";
    if (state.complete("generations", digests.generations)) {
      mark_skipped("generations");
    } else {
      state.set("generations", digests.generations, false);
      const auto done = index_by_group(checkpoints.read("generations"));
      std::vector<const SampleGroup*> pending;
      for (const auto& g : groups) {
        if (!done.contains(g.group_id)) pending.push_back(&g);
      }
      const auto failures = run_pool(pending.size(), config.concurrency, [&](std::size_t i) {
        const auto& group = *pending[i];
        json record{{"group_id", group.group_id}, {"candidates", json::array()}, {"drop_reason", nullptr}};
        try {
          for (const auto& d : generate_candidates(group, store, gateway, curation, templates.generation, sink)) {
            record["candidates"].push_back(generation_to_json(d));
          }
        } catch (const AllCandidatesFailed& e) {
          record["drop_reason"] = e.kind();
          events({{"event", "group_dropped"}, {"group_id", group.group_id}, {"reason", e.kind()}});
        }
        checkpoints.append("generations", record);
      });
      if (!failures.empty()) {
        for (const auto& [i, why] : failures) {
          events({{"event", "group_failed"}, {"stage", stage}, {"group_id", pending[i]->group_id}, {"error", why}});
        }
        throw StageFailure(stage, std::to_string(failures.size()) + " group(s) failed; first: " +
                                      failures.front().second + " (rerun to resume)");
      }
      state.set("generations", digests.generations, true);
      mark_run("generations");
    }
    const auto generations = index_by_group(checkpoints.read("generations"));

    // score
    stage = "scores";
    if (state.complete("scores", digests.scores)) {
      mark_skipped("scores");
    } else {
      state.set("scores", digests.scores, false);
      const auto done = index_by_group(checkpoints.read("scores"));
      std::vector<const json*> pending;
      for (const auto& [gid, rec] : generations) {
        if (!rec.at("candidates").empty() && !done.contains(gid)) pending.push_back(&rec);
      }
      const auto failures = run_pool(pending.size(), config.concurrency, [&](std::size_t i) {
        const auto& gen = *pending[i];
        const auto gid = gen.at("group_id").get<std::size_t>();
        json record{{"group_id", gid}, {"candidates", json::array()}, {"unscorable", json::array()}};
        for (const auto& c : gen.at("candidates")) {
          const auto draft = draft_from_json(c);
          try {
            const auto plan = score_candidate(draft, gid, gateway, curation, templates.scoring, sink);
            record["candidates"].push_back({{"index", plan.index}, {"scores", plan.scores}, {"mean", plan.mean_score}});
          } catch (const Unscorable& e) {
            record["unscorable"].push_back({{"index", draft.index}, {"reason", e.what()}});
            events({{"event", "candidate_unscorable"}, {"group_id", gid}, {"candidate", draft.index}});
          }
        }
        checkpoints.append("scores", record);
      });
      if (!failures.empty()) {
        for (const auto& [i, why] : failures) {
          events({{"event", "group_failed"}, {"stage", stage}, {"group_id", pending[i]->at("group_id")}, {"error", why}});
        }
        throw StageFailure(stage, std::to_string(failures.size()) + " group(s) failed; first: " +
                                      failures.front().second + " (rerun to resume)");
      }
      state.set("scores", digests.scores, true);
      mark_run("scores");
    }
    const auto scores = index_by_group(checkpoints.read("scores"));

    // curate
    stage = "curated";
    std::vector<GroupOutcome> outcomes;
    for (const auto& [gid, gen] : generations) {
      GroupOutcome o;
      o.group_id = gid;
      if (!gen.at("drop_reason").is_null()) {
        o.drop_reason = gen.at("drop_reason").get<std::string>();
      } else if (const auto it = scores.find(gid); it != scores.end()) {
        std::map<std::size_t, DraftCandidate> drafts;
        for (const auto& c : gen.at("candidates")) {
          auto d = draft_from_json(c);
          drafts.emplace(d.index, std::move(d));
        }
        for (const auto& c : it->second.at("candidates")) {
          const auto idx = c.at("index").get<std::size_t>();
          CandidatePlan plan{idx, drafts.at(idx).generation, c.at("scores").get<std::vector<int>>(), 0.0};
          plan.mean_score = mean_of(plan.scores);
          o.candidates.push_back(std::move(plan));
        }
        std::sort(o.candidates.begin(), o.candidates.end(),
                  [](const CandidatePlan& a, const CandidatePlan& b) { return a.index < b.index; });
        if (o.candidates.empty()) o.drop_reason = "Unscorable";
      }
      outcomes.push_back(std::move(o));
    }

    PretrainDataset dataset;
    if (state.complete("curated", digests.curated)) {
      std::vector<ScoredInstance> instances;
      for (const auto& r : checkpoints.read("curated")) instances.push_back(instance_from_json(r));
      dataset = dataset_from_instances(std::move(instances));
      mark_skipped("curated");
    } else {
      checkpoints.clear("curated");
      auto curated = curate(outcomes, curation.threshold);
      std::vector<json> records;
      for (const auto& g : curated.dataset.groups) {
        for (const auto& inst : g.instances) records.push_back(to_json(inst));
      }
      write_checkpoint(checkpoints, "curated", records);
      std::string audit;
      for (const auto& a : curated.audit) audit += a.dump() + "\n";
      write_text_atomic(out / "audit.jsonl", audit);
      dataset = std::move(curated.dataset);
      state.set("curated", digests.curated, true);
      mark_run("curated");
    }

    // write + stats
    stage = "write";
    const auto dataset_digest = write_dataset(dataset, out / "dataset.txt");

    stage = "stats";
    Manifest manifest = compute_stats(dataset);
    manifest.seed = config.seed;
    manifest.config_digest = digests.curated;
    manifest.corpus = CorpusCounts{ingested_count, store.size()};
    manifest.groups.sampled = groups.size();
    manifest.groups.generated = generations.size();
    for (const auto& [gid, gen] : generations) {
      if (!gen.at("candidates").empty()) ++manifest.groups.parsed;
    }
    for (const auto& [gid, rec] : scores) {
      if (!rec.at("candidates").empty()) ++manifest.groups.scored;
    }
    manifest.groups.selected = dataset.total_instances;
    manifest.dataset_digest = dataset_digest;

    for (const auto& o : outcomes) {
      if (o.drop_reason) ++result.stats.drop_reasons[*o.drop_reason];
    }
    if (const auto below = manifest.groups.scored - manifest.groups.selected; below > 0) {
      result.stats.drop_reasons["BelowThreshold"] = below;
    }
    result.stats.backend_calls = gateway.backend_calls();
    result.stats.cache_hits = gateway.cache_hits();

    write_text_atomic(out / "manifest.json", to_json(manifest).dump(2) + "\n");
    result.summary = render_summary(manifest, result.stats);
    write_text_atomic(out / "summary.txt", result.summary);
    events({{"event", "run_done"},
            {"instances", manifest.total_instances},
            {"dataset_digest", dataset_digest},
            {"backend_calls", result.stats.backend_calls},
            {"cache_hits", result.stats.cache_hits}});

    result.manifest = std::move(manifest);
    result.exit_status = 0;
  } catch (const StageFailure& e) {
    result.exit_status = 1;
    result.diagnostic = e.what();
  } catch (const std::exception& e) {
    result.exit_status = 1;
    result.diagnostic = "[" + stage + "] " + e.what();
  }
  return result;
}

}  // namespace taskforge
