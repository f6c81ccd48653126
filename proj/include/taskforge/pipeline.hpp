#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskforge/curator.hpp"
#include "taskforge/dataset_io.hpp"
#include "taskforge/error.hpp"
#include "taskforge/llm_gateway.hpp"

namespace taskforge {

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("ConfigError", message) {}
};

class StageFailure : public Error {
 public:
  StageFailure(std::string stage, const std::string& message)
      : Error("StageFailure", "[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  std::vector<std::filesystem::path> inputs;
  std::optional<std::filesystem::path> input_dir;  // expanded into `inputs` by resolve_inputs()
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 42;
  GatewayConfig gateway;
  bool cache = true;  // cache lives under <out>/cache
  CurationConfig curation;
  std::optional<std::size_t> max_groups;
  std::size_t concurrency = 4;
  std::optional<std::filesystem::path> template_dir;
  bool resume = true;

  // Throws ConfigError.
  void validate() const;

  // Regular, non-hidden files of input_dir in byte-wise name order, appended
  // after any explicit inputs.
  std::vector<std::filesystem::path> resolve_inputs() const;

  // Applies keys from a JSON config file over the current values. Unknown
  // keys are rejected.
  void merge_json(const nlohmann::json& j);
  static PipelineConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct StageDigests {
  std::string ingest;
  std::string groups;
  std::string generations;
  std::string scores;
  std::string curated;  // covers every semantics-affecting setting
};

// Digest chain: each stage's digest folds in its upstream digest plus the
// settings that stage depends on. Input files contribute name and content
// hash, never their absolute location.
StageDigests stage_digests(const PipelineConfig& config, const std::vector<std::filesystem::path>& inputs);

struct RunStats {
  std::uint64_t backend_calls = 0;
  std::uint64_t cache_hits = 0;
  std::vector<std::string> stages_skipped;
  std::vector<std::string> stages_run;
  std::map<std::string, std::size_t> drop_reasons;
};

struct RunResult {
  int exit_status = 1;
  std::optional<Manifest> manifest;
  RunStats stats;
  std::string diagnostic;
  std::string summary;
};

// ingest -> sample -> generate -> score -> curate -> write -> stats, with
// per-stage checkpoints under <out>/checkpoints. `backend` overrides the one
// the gateway config would build (used for fault injection in tests).
RunResult run(const PipelineConfig& config, std::unique_ptr<Backend> backend = nullptr);

std::string render_summary(const Manifest& manifest, const RunStats& stats);

}  // namespace taskforge
