#include "taskforge/curator.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace taskforge {
namespace {

void emit(const EventSink& events, nlohmann::json record) {
  if (events) events(record);
}

void check_threshold(double threshold) {
  if (!(threshold >= 1.0 && threshold <= 10.0)) throw InvalidArgument("threshold must lie in [1, 10]");
}

}  // namespace

void CurationConfig::validate() const {
  if (plans_per_group < 1) throw InvalidArgument("plans_per_group must be >= 1");
  if (scores_per_plan < 1) throw InvalidArgument("scores_per_plan must be >= 1");
  check_threshold(threshold);
}

double mean_of(std::span<const int> scores) {
  if (scores.empty()) throw InvalidArgument("mean of no scores");
  const long long sum = std::accumulate(scores.begin(), scores.end(), 0LL);
  return static_cast<double>(sum) / static_cast<double>(scores.size());
}

std::vector<DraftCandidate> generate_candidates(const SampleGroup& group, const SentenceStore& store,
                                                Gateway& gateway, const CurationConfig& config,
                                                const PromptTemplate& tmpl, const EventSink& events) {
  if (config.plans_per_group < 1) throw InvalidArgument("plans_per_group must be >= 1");
  const auto prompt = render_generation_prompt(group, store, tmpl);

  std::vector<DraftCandidate> drafts;
  for (std::size_t c = 0; c < config.plans_per_group; ++c) {
    for (std::size_t attempt = 0; attempt <= config.parse_retries; ++attempt) {
      const auto replica = "candidate=" + std::to_string(c) + ";attempt=" + std::to_string(attempt);
      const auto response = gateway.complete(gateway.make_request(prompt.text, replica));
      try {
        drafts.push_back(DraftCandidate{c, parse_generation(response.content)});
        break;
      } catch (const ParseError& e) {
        emit(events, {{"event", "generation_parse_failed"},
                      {"group_id", group.group_id},
                      {"candidate", c},
                      {"attempt", attempt},
                      {"error", e.kind()},
                      {"message", e.what()}});
      }
    }
  }
  if (drafts.empty()) throw AllCandidatesFailed(group.group_id);
  return drafts;
}

CandidatePlan score_candidate(const DraftCandidate& candidate, std::size_t group_id, Gateway& gateway,
                              const CurationConfig& config, const PromptTemplate& tmpl, const EventSink& events) {
  if (config.scores_per_plan < 1) throw InvalidArgument("scores_per_plan must be >= 1");
  const auto prompt = render_score_prompt(candidate.generation.paragraph, tmpl);

  CandidatePlan plan{candidate.index, candidate.generation, {}, 0.0};
  for (std::size_t slot = 0; slot < config.scores_per_plan; ++slot) {
    std::optional<int> score;
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= config.score_retries && !score; ++attempt) {
      const auto replica = "score=" + std::to_string(slot) + ";attempt=" + std::to_string(attempt);
      const auto response = gateway.complete(gateway.make_request(prompt.text, replica));
      try {
        score = parse_score(response.content);
      } catch (const ParseError& e) {
        last_error = e.kind();
        emit(events, {{"event", "score_parse_failed"},
                      {"group_id", group_id},
                      {"candidate", candidate.index},
                      {"slot", slot},
                      {"attempt", attempt},
                      {"error", e.kind()},
                      {"message", e.what()}});
      }
    }
    if (!score) {
      throw Unscorable("group " + std::to_string(group_id) + " candidate " + std::to_string(candidate.index) +
                       " score slot " + std::to_string(slot) + ": " + last_error);
    }
    plan.scores.push_back(*score);
  }
  plan.mean_score = mean_of(plan.scores);
  return plan;
}

const CandidatePlan& select_best(std::span<const CandidatePlan> candidates) {
  if (candidates.empty()) throw EmptyCandidateList();
  const CandidatePlan* best = &candidates.front();
  for (const auto& c : candidates.subspan(1)) {
    if (c.mean_score > best->mean_score) best = &c;
  }
  return *best;
}

CuratedSet filter_select(std::span<const ScoredInstance> instances, double threshold) {
  check_threshold(threshold);
  CuratedSet out;
  std::copy_if(instances.begin(), instances.end(), std::back_inserter(out.instances),
               [threshold](const ScoredInstance& i) { return i.mean_score >= threshold; });
  return out;
}

std::vector<TaskGroup> group_by_task(const CuratedSet& selected) {
  std::map<std::string, std::vector<ScoredInstance>> by_key;
  for (const auto& inst : selected.instances) by_key[inst.task.key].push_back(inst);

  std::vector<TaskGroup> groups;
  groups.reserve(by_key.size());
  for (auto& [key, members] : by_key) {
    std::stable_sort(members.begin(), members.end(),
                     [](const ScoredInstance& a, const ScoredInstance& b) { return a.group_id < b.group_id; });
    TaskKey task{key, members.front().task.display};
    groups.push_back(TaskGroup{std::move(task), std::move(members)});
  }
  return groups;
}

PretrainDataset assemble(std::vector<TaskGroup> groups) {
  std::set<std::string> keys;
  PretrainDataset dataset;
  for (const auto& g : groups) {
    if (!keys.insert(g.task.key).second) throw DuplicateTaskKey(g.task.key);
    dataset.total_instances += g.instances.size();
  }
  dataset.groups = std::move(groups);
  return dataset;
}

ScoredInstance to_instance(std::size_t group_id, const CandidatePlan& plan) {
  return ScoredInstance{group_id,
                        plan.generation.paragraph,
                        plan.generation.plan,
                        normalize_task_name(plan.generation.task_raw),
                        plan.generation.labels,
                        plan.mean_score,
                        plan.scores};
}

CurationResult curate(std::span<const GroupOutcome> outcomes, double threshold) {
  check_threshold(threshold);
  std::vector<const GroupOutcome*> ordered;
  for (const auto& o : outcomes) ordered.push_back(&o);
  std::sort(ordered.begin(), ordered.end(),
            [](const GroupOutcome* a, const GroupOutcome* b) { return a->group_id < b->group_id; });

  CurationResult result;
  for (const auto* outcome : ordered) {
    if (outcome->candidates.empty()) {
      result.audit.push_back({{"group_id", outcome->group_id},
                              {"dropped", outcome->drop_reason.value_or("no scorable candidate")}});
      continue;
    }
    const auto& best = select_best(outcome->candidates);
    auto instance = to_instance(outcome->group_id, best);
    for (const auto& c : outcome->candidates) {
      const bool selected = &c == &best;
      result.audit.push_back({{"group_id", outcome->group_id},
                              {"candidate", c.index},
                              {"scores", c.scores},
                              {"mean", c.mean_score},
                              {"selected", selected},
                              {"filtered", selected && !(c.mean_score >= threshold)},
                              {"task_key", normalize_task_name(c.generation.task_raw).key}});
    }
    result.scored.push_back(std::move(instance));
  }
  result.selected = filter_select(result.scored, threshold);
  result.dataset = assemble(group_by_task(result.selected));
  return result;
}

}  // namespace taskforge
