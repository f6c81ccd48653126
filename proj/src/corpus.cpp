#include "taskforge/corpus.hpp"

#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "taskforge/text.hpp"

namespace taskforge {

SentenceStore::SentenceStore(std::vector<Sentence> sentences, std::vector<SourceEntry> manifest)
    : sentences_(std::move(sentences)), manifest_(std::move(manifest)) {
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    if (sentences_[i].id != i) throw InvalidArgument("sentence ids must be dense and ordered");
  }
}

const Sentence& SentenceStore::at(std::size_t id) const {
  if (id >= sentences_.size()) throw UnknownSentenceId(id);
  return sentences_[id];
}

SentenceStore ingest(std::span<const std::filesystem::path> paths) {
  std::vector<Sentence> sentences;
  std::vector<SourceEntry> manifest;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in || std::filesystem::is_directory(path)) throw FileUnreadable(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw FileUnreadable(path);

    std::string_view view = content;
    if (view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);

    SourceEntry entry{path.filename().string(), 0, 0};
    std::size_t line_no = 0;
    for (const auto line : text::split_lines(view)) {
      ++line_no;
      if (text::find_invalid_utf8(line)) throw EncodingError(path, line_no);
      std::string normalized = text::collapse_whitespace(line);
      if (normalized.empty()) {
        ++entry.dropped;
        continue;
      }
      sentences.push_back(Sentence{sentences.size(), std::move(normalized), entry.tag});
      ++entry.ingested;
    }
    manifest.push_back(std::move(entry));
  }
  return SentenceStore(std::move(sentences), std::move(manifest));
}

SentenceStore deduplicate(const SentenceStore& store) {
  std::vector<Sentence> kept;
  kept.reserve(store.size());
  std::unordered_set<std::string_view> seen;
  std::unordered_map<std::string, std::size_t> dup_by_source;
  for (const auto& s : store.sentences()) {
    if (!seen.insert(s.text).second) {
      ++dup_by_source[s.source];
      continue;
    }
    kept.push_back(Sentence{kept.size(), s.text, s.source});
  }
  auto manifest = store.source_manifest();
  for (auto& entry : manifest) {
    if (auto it = dup_by_source.find(entry.tag); it != dup_by_source.end()) {
      entry.dropped += it->second;
      // Files sharing a name are attributed once.
      dup_by_source.erase(it);
    }
  }
  return SentenceStore(std::move(kept), std::move(manifest));
}

void write_store_jsonl(const SentenceStore& store, std::ostream& out) {
  for (const auto& s : store.sentences()) {
    nlohmann::json j = {{"id", s.id}, {"text", s.text}, {"source", s.source}};
    out << j.dump() << '\n';
  }
}

std::string store_to_jsonl(const SentenceStore& store) {
  std::ostringstream out;
  write_store_jsonl(store, out);
  return out.str();
}

SentenceStore read_store_jsonl(std::istream& in, std::vector<SourceEntry> manifest) {
  std::vector<Sentence> sentences;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    sentences.push_back(Sentence{j.at("id").get<std::size_t>(), j.at("text").get<std::string>(),
                                 j.at("source").get<std::string>()});
  }
  return SentenceStore(std::move(sentences), std::move(manifest));
}

}  // namespace taskforge
