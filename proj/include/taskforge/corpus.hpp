#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "taskforge/error.hpp"

namespace taskforge {

class FileUnreadable : public Error {
 public:
  explicit FileUnreadable(const std::filesystem::path& path)
      : Error("FileUnreadable", "cannot read " + path.string()), path_(path) {}
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

class EncodingError : public Error {
 public:
  EncodingError(const std::filesystem::path& path, std::size_t line)
      : Error("EncodingError",
              "invalid UTF-8 in " + path.string() + " at line " + std::to_string(line)),
        path_(path),
        line_(line) {}
  const std::filesystem::path& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::filesystem::path path_;
  std::size_t line_;
};

class UnknownSentenceId : public Error {
 public:
  explicit UnknownSentenceId(std::size_t id)
      : Error("UnknownSentenceId", "unknown sentence id " + std::to_string(id)), id_(id) {}
  std::size_t id() const noexcept { return id_; }

 private:
  std::size_t id_;
};

struct Sentence {
  std::size_t id = 0;
  std::string text;
  std::string source;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct SourceEntry {
  std::string tag;
  std::size_t ingested = 0;  // non-blank lines read
  std::size_t dropped = 0;   // blank lines, plus duplicates once deduplicated

  friend bool operator==(const SourceEntry&, const SourceEntry&) = default;
};

// The cleaned corpus. Sentence ids are always the dense range 0..size()-1.
class SentenceStore {
 public:
  SentenceStore() = default;
  SentenceStore(std::vector<Sentence> sentences, std::vector<SourceEntry> manifest);

  std::size_t size() const noexcept { return sentences_.size(); }
  bool empty() const noexcept { return sentences_.empty(); }
  const Sentence& at(std::size_t id) const;
  const std::vector<Sentence>& sentences() const noexcept { return sentences_; }
  const std::vector<SourceEntry>& source_manifest() const noexcept { return manifest_; }

  friend bool operator==(const SentenceStore&, const SentenceStore&) = default;

 private:
  std::vector<Sentence> sentences_;
  std::vector<SourceEntry> manifest_;
};

// One sentence per non-blank line, in file order then line order. Whitespace
// is trimmed and collapsed; duplicates are kept. The source tag is the file name.
SentenceStore ingest(std::span<const std::filesystem::path> paths);

// Keeps the first occurrence of each exact text and renumbers ids densely.
SentenceStore deduplicate(const SentenceStore& store);

// JSON-lines, one {"id","text","source"} record per sentence.
void write_store_jsonl(const SentenceStore& store, std::ostream& out);
std::string store_to_jsonl(const SentenceStore& store);

// Inverse of write_store_jsonl; the source manifest is not part of the
// JSON-lines form and is supplied separately.
SentenceStore read_store_jsonl(std::istream& in, std::vector<SourceEntry> manifest = {});

}  // namespace taskforge
