#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskforge/corpus.hpp"
#include "taskforge/error.hpp"
#include "taskforge/llm_gateway.hpp"
#include "taskforge/parser.hpp"
#include "taskforge/prompting.hpp"
#include "taskforge/sampler.hpp"

namespace taskforge {

class AllCandidatesFailed : public Error {
 public:
  explicit AllCandidatesFailed(std::size_t group_id)
      : Error("AllCandidatesFailed", "no parsable generation for group " + std::to_string(group_id)) {}
};
class Unscorable : public Error {
 public:
  explicit Unscorable(const std::string& reason) : Error("Unscorable", reason) {}
};
class EmptyCandidateList : public Error {
 public:
  EmptyCandidateList() : Error("EmptyCandidateList", "select_best needs at least one candidate") {}
};
class DuplicateTaskKey : public Error {
 public:
  explicit DuplicateTaskKey(const std::string& key)
      : Error("DuplicateTaskKey", "task key '" + key + "' appears in more than one group") {}
};

struct CurationConfig {
  std::size_t plans_per_group = 2;  // k
  std::size_t scores_per_plan = 5;  // n
  double threshold = 7.0;
  std::size_t parse_retries = 2;  // extra generation attempts per candidate slot
  std::size_t score_retries = 2;  // extra scoring attempts per score slot

  void validate() const;
};

struct DraftCandidate {
  std::size_t index = 0;  // 0-based generation order within the group
  GenerationResult generation;
};

struct CandidatePlan {
  std::size_t index = 0;
  GenerationResult generation;
  std::vector<int> scores;
  double mean_score = 0.0;
};

struct ScoredInstance {
  std::size_t group_id = 0;
  std::string example;  // paragraph
  std::string plan;
  TaskKey task;
  std::vector<std::string> labels;
  double mean_score = 0.0;
  std::vector<int> scores;

  friend bool operator==(const ScoredInstance&, const ScoredInstance&) = default;
};

struct CuratedSet {
  std::vector<ScoredInstance> instances;
};

struct TaskGroup {
  TaskKey task;
  std::vector<ScoredInstance> instances;
};

struct PretrainDataset {
  std::vector<TaskGroup> groups;
  std::size_t total_instances = 0;
};

// Structured audit/event sink; records are JSON objects.
using EventSink = std::function<void(const nlohmann::json&)>;

double mean_of(std::span<const int> scores);

// k independent generation requests for the group's prompt. A candidate slot
// whose answer does not parse is re-requested up to `parse_retries` times and
// then counted as missing. Throws AllCandidatesFailed when nothing parsed.
std::vector<DraftCandidate> generate_candidates(const SampleGroup& group, const SentenceStore& store,
                                                Gateway& gateway, const CurationConfig& config,
                                                const PromptTemplate& tmpl = PromptTemplate::default_generation(),
                                                const EventSink& events = {});

// n independent scoring requests on the paragraph alone. Throws Unscorable if
// any slot still fails after `score_retries` re-requests.
CandidatePlan score_candidate(const DraftCandidate& candidate, std::size_t group_id, Gateway& gateway,
                              const CurationConfig& config,
                              const PromptTemplate& tmpl = PromptTemplate::default_scoring(),
                              const EventSink& events = {});

// Highest mean wins; the earliest candidate wins an exact tie.
const CandidatePlan& select_best(std::span<const CandidatePlan> candidates);

CuratedSet filter_select(std::span<const ScoredInstance> instances, double threshold = 7.0);

// Groups ordered by task key (byte-wise), members by ascending group_id. A
// group's display name is that of its lowest-group_id member.
std::vector<TaskGroup> group_by_task(const CuratedSet& selected);

PretrainDataset assemble(std::vector<TaskGroup> groups);

// Everything a finished group contributes to curation.
struct GroupOutcome {
  std::size_t group_id = 0;
  std::vector<CandidatePlan> candidates;  // scorable candidates only
  std::optional<std::string> drop_reason;
};

struct CurationResult {
  std::vector<ScoredInstance> scored;  // one selected instance per surviving group, by group_id
  CuratedSet selected;
  PretrainDataset dataset;
  std::vector<nlohmann::json> audit;
};

ScoredInstance to_instance(std::size_t group_id, const CandidatePlan& plan);

// Selection, threshold filtering, grouping by task and assembly over a
// set of finished groups. Input order does not matter.
CurationResult curate(std::span<const GroupOutcome> outcomes, double threshold);

}  // namespace taskforge
