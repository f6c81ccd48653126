#include "taskforge/dataset_io.hpp"

#include <array>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>

#include "taskforge/digest.hpp"
#include "taskforge/text.hpp"

namespace taskforge {

std::string render_dataset(const PretrainDataset& dataset) {
  std::string out;
  bool first = true;
  for (const auto& group : dataset.groups) {
    for (const auto& inst : group.instances) {
      std::string doc = inst.plan + "\n\n" + inst.example;
      for (const auto line : text::split_lines(doc)) {
        if (line == kDocSeparator) {
          throw FormatError("group " + std::to_string(inst.group_id) + " contains the document separator line");
        }
      }
      if (!first) {
        out += '\n';
        out += kDocSeparator;
        out += '\n';
      }
      out += doc;
      first = false;
    }
  }
  if (!out.empty()) out += '\n';
  return out;
}

std::string write_dataset(const PretrainDataset& dataset, const std::filesystem::path& path) {
  const auto bytes = render_dataset(dataset);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
  return sha256_hex(bytes);
}

bool Manifest::consistent() const {
  const std::size_t tally = std::accumulate(task_distribution.begin(), task_distribution.end(), std::size_t{0},
                                            [](std::size_t acc, const auto& kv) { return acc + kv.second; });
  return tally == total_instances && groups.selected <= groups.scored && groups.scored <= groups.parsed &&
         groups.parsed <= groups.generated && groups.generated <= groups.sampled &&
         corpus.deduplicated <= corpus.ingested;
}

nlohmann::json to_json(const Manifest& m) {
  return {{"seed", m.seed},
          {"config_digest", m.config_digest},
          {"corpus", {{"ingested", m.corpus.ingested}, {"deduplicated", m.corpus.deduplicated}}},
          {"groups",
           {{"sampled", m.groups.sampled},
            {"generated", m.groups.generated},
            {"parsed", m.groups.parsed},
            {"scored", m.groups.scored},
            {"selected", m.groups.selected}}},
          {"task_distribution", m.task_distribution},
          {"mean_paragraph_words", m.mean_paragraph_words},
          {"empty", m.empty},
          {"total_instances", m.total_instances},
          {"dataset_digest", m.dataset_digest}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.corpus.ingested = j.at("corpus").at("ingested").get<std::size_t>();
  m.corpus.deduplicated = j.at("corpus").at("deduplicated").get<std::size_t>();
  const auto& g = j.at("groups");
  m.groups = GroupCounts{g.at("sampled").get<std::size_t>(), g.at("generated").get<std::size_t>(),
                         g.at("parsed").get<std::size_t>(), g.at("scored").get<std::size_t>(),
                         g.at("selected").get<std::size_t>()};
  m.task_distribution = j.at("task_distribution").get<std::map<std::string, std::size_t>>();
  m.mean_paragraph_words = j.at("mean_paragraph_words").get<double>();
  m.empty = j.at("empty").get<bool>();
  m.total_instances = j.at("total_instances").get<std::size_t>();
  m.dataset_digest = j.at("dataset_digest").get<std::string>();
  return m;
}

Manifest compute_stats(const PretrainDataset& dataset) {
  Manifest m;
  std::size_t words = 0;
  std::size_t count = 0;
  for (const auto& group : dataset.groups) {
    m.task_distribution[group.task.display] += group.instances.size();
    for (const auto& inst : group.instances) {
      words += text::count_words(inst.example);
      ++count;
    }
  }
  m.total_instances = count;
  m.empty = count == 0;
  m.mean_paragraph_words = count == 0 ? 0.0 : static_cast<double>(words) / static_cast<double>(count);
  return m;
}

std::vector<std::pair<std::string, std::size_t>> report_distribution(const Manifest& manifest) {
  std::vector<std::pair<std::string, std::size_t>> rows;
  std::size_t others = 0;
  for (const auto& [name, n] : manifest.task_distribution) {
    if (n == 1) {
      ++others;
    } else {
      rows.emplace_back(name, n);
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (others > 0) rows.emplace_back("others", others);
  return rows;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::array<std::string_view, 4> kStages{"groups", "generations", "scores", "curated"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

CheckpointStore::CheckpointStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

bool CheckpointStore::valid_stage(std::string_view stage) {
  return std::find(kStages.begin(), kStages.end(), stage) != kStages.end();
}

std::filesystem::path CheckpointStore::path_for(std::string_view stage) const {
  if (!valid_stage(stage)) throw InvalidArgument("unknown checkpoint stage '" + std::string(stage) + "'");
  return dir_ / (std::string(stage) + ".jsonl");
}

void CheckpointStore::append(std::string_view stage, const nlohmann::json& record) {
  append_all(stage, {record});
}

void CheckpointStore::append_all(std::string_view stage, const std::vector<nlohmann::json>& records) {
  const auto path = path_for(stage);
  std::lock_guard lock(mutex_);
  if (std::filesystem::exists(path)) {
    const auto content = read_file(path);
    if (!content.empty() && content.back() != '\n') {
      const auto keep = content.rfind('\n');
      std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
  out.flush();
  if (!out) throw IoError("failed appending to " + path.string());
}

CheckpointStore::ReadResult CheckpointStore::read_detailed(std::string_view stage) const {
  const auto path = path_for(stage);
  ReadResult result;
  const auto content = read_file(path);
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < content.size()) {
    const auto nl = content.find('\n', start);
    if (nl == std::string::npos) {
      result.torn_tail = true;
      break;
    }
    ++line_no;
    const std::string_view line(content.data() + start, nl - start);
    start = nl + 1;
    if (text::trim(line).empty()) continue;
    try {
      result.records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error&) {
      throw CorruptCheckpoint(path, line_no);
    }
  }
  return result;
}

std::vector<nlohmann::json> CheckpointStore::read(std::string_view stage) const {
  auto result = read_detailed(stage);
  if (result.torn_tail) {
    std::cerr << "warning: ignoring torn final record in " << path_for(stage).string() << '\n';
  }
  return std::move(result.records);
}

void CheckpointStore::clear(std::string_view stage) {
  const auto path = path_for(stage);
  std::lock_guard lock(mutex_);
  std::filesystem::remove(path);
}

void write_checkpoint(CheckpointStore& store, std::string_view stage, const std::vector<nlohmann::json>& records) {
  store.append_all(stage, records);
}

std::vector<nlohmann::json> read_checkpoint(const CheckpointStore& store, std::string_view stage) {
  return store.read(stage);
}

nlohmann::json to_json(const ScoredInstance& inst) {
  return {{"group_id", inst.group_id},     {"example", inst.example},       {"plan", inst.plan},
          {"task_key", inst.task.key},     {"task", inst.task.display},     {"labels", inst.labels},
          {"mean_score", inst.mean_score}, {"scores", inst.scores}};
}

ScoredInstance instance_from_json(const nlohmann::json& j) {
  ScoredInstance inst;
  inst.group_id = j.at("group_id").get<std::size_t>();
  inst.example = j.at("example").get<std::string>();
  inst.plan = j.at("plan").get<std::string>();
  inst.task = TaskKey{j.at("task_key").get<std::string>(), j.at("task").get<std::string>()};
  inst.labels = j.at("labels").get<std::vector<std::string>>();
  inst.mean_score = j.at("mean_score").get<double>();
  inst.scores = j.at("scores").get<std::vector<int>>();
  return inst;
}

}  // namespace taskforge
