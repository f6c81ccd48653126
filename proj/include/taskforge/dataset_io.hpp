#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskforge/curator.hpp"
#include "taskforge/error.hpp"

namespace taskforge {

inline constexpr std::string_view kDocSeparator = "<|doc|>";

class CorruptCheckpoint : public Error {
 public:
  CorruptCheckpoint(const std::filesystem::path& path, std::size_t line)
      : Error("CorruptCheckpoint", "malformed record in " + path.string() + " at line " + std::to_string(line)) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("FormatError", message) {}
};

// Reason (plan), blank line, example (paragraph); documents separated by a
// "<|doc|>" line; trailing newline unless the dataset is empty.
std::string render_dataset(const PretrainDataset& dataset);

// Writes render_dataset() to `path` and returns the SHA-256 hex of the bytes.
std::string write_dataset(const PretrainDataset& dataset, const std::filesystem::path& path);

struct CorpusCounts {
  std::size_t ingested = 0;
  std::size_t deduplicated = 0;
};

struct GroupCounts {
  std::size_t sampled = 0;
  std::size_t generated = 0;  // generation requests completed
  std::size_t parsed = 0;     // at least one candidate parsed
  std::size_t scored = 0;     // at least one candidate fully scored
  std::size_t selected = 0;   // best candidate passed the threshold
};

struct Manifest {
  std::uint64_t seed = 0;
  std::string config_digest;
  CorpusCounts corpus;
  GroupCounts groups;
  std::map<std::string, std::size_t> task_distribution;  // display name -> count
  double mean_paragraph_words = 0.0;
  bool empty = true;
  std::size_t total_instances = 0;
  std::string dataset_digest;

  // Σ task_distribution == total_instances and the group funnel is monotone.
  bool consistent() const;
};

nlohmann::json to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);

// Fills the dataset-derived fields (task distribution, mean words, N, empty).
Manifest compute_stats(const PretrainDataset& dataset);

// Task distribution with single-occurrence tasks folded into "others".
std::vector<std::pair<std::string, std::size_t>> report_distribution(const Manifest& manifest);

// Append-only JSON-lines checkpoints, one file per stage under `dir`.
// Stages: groups, generations, scores, curated.
class CheckpointStore {
 public:
  explicit CheckpointStore(std::filesystem::path dir);

  static bool valid_stage(std::string_view stage);
  std::filesystem::path path_for(std::string_view stage) const;

  void append(std::string_view stage, const nlohmann::json& record);
  void append_all(std::string_view stage, const std::vector<nlohmann::json>& records);

  // All complete records. A final line without its newline is a torn write and
  // is ignored (and later truncated on the next append); any other malformed
  // line throws CorruptCheckpoint.
  // Logs a warning to stderr when a torn tail is skipped.
  std::vector<nlohmann::json> read(std::string_view stage) const;

  struct ReadResult {
    std::vector<nlohmann::json> records;
    bool torn_tail = false;
  };
  ReadResult read_detailed(std::string_view stage) const;

  void clear(std::string_view stage);

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
};

void write_checkpoint(CheckpointStore& store, std::string_view stage, const std::vector<nlohmann::json>& records);
std::vector<nlohmann::json> read_checkpoint(const CheckpointStore& store, std::string_view stage);

nlohmann::json to_json(const ScoredInstance& instance);
ScoredInstance instance_from_json(const nlohmann::json& j);

}  // namespace taskforge
