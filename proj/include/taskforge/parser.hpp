#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "taskforge/error.hpp"

namespace taskforge {

class ParseError : public Error {
 public:
  using Error::Error;
};

class MissingSection : public ParseError {
 public:
  explicit MissingSection(std::string section)
      : ParseError("MissingSection", "missing section " + section), section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

class DuplicateSection : public ParseError {
 public:
  explicit DuplicateSection(std::string section)
      : ParseError("DuplicateSection", "duplicate section " + section), section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

class EmptySection : public ParseError {
 public:
  explicit EmptySection(std::string section)
      : ParseError("EmptySection", "empty section " + section), section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

class ScoreLineMissing : public ParseError {
 public:
  ScoreLineMissing() : ParseError("ScoreLineMissing", "no coherency score line") {}
};

class ScoreOutOfRange : public ParseError {
 public:
  explicit ScoreOutOfRange(long long score)
      : ParseError("ScoreOutOfRange", "coherency score " + std::to_string(score) + " outside [1, 10]"),
        score_(score) {}
  long long score() const noexcept { return score_; }

 private:
  long long score_;
};

class EmptyAfterNormalization : public ParseError {
 public:
  EmptyAfterNormalization() : ParseError("EmptyAfterNormalization", "task name is empty after normalization") {}
};

struct GenerationResult {
  std::string plan;
  std::string paragraph;
  std::string task_raw;
  std::vector<std::string> labels;

  friend bool operator==(const GenerationResult&, const GenerationResult&) = default;
};

struct TaskKey {
  std::string key;      // lowercase grouping key
  std::string display;  // cleaned original casing

  friend bool operator==(const TaskKey&, const TaskKey&) = default;
};

// Splits a four-section answer. Headers ("Plan:", "Paragraph:", "Task:",
// "Labels:") are matched case-insensitively at the start of a line, in any
// order; text after the colon on the header line belongs to the section.
// Task and Labels lose enclosing square brackets; Labels is split per line
// with "1." / "1)" / "-" / "*" markers removed.
GenerationResult parse_generation(std::string_view text);

// Canonical four-section rendering; parse_generation inverts it for
// well-formed results.
std::string render_generation(const GenerationResult& result);

// Scans lines from the last to the first for "Thus the coherency score is <s>"
// (case-insensitive, optional trailing period) and returns s, which must be in [1, 10].
int parse_score(std::string_view text);

TaskKey normalize_task_name(std::string_view task_raw);

}  // namespace taskforge
