#include "taskforge/parser.hpp"

#include <algorithm>
#include <array>
#include <optional>

#include "taskforge/prompting.hpp"
#include "taskforge/text.hpp"

namespace taskforge {
namespace {

enum Section : std::size_t { kPlan = 0, kParagraph, kTask, kLabels, kSectionCount };

constexpr std::array<std::string_view, kSectionCount> kHeaderWords{"Plan", "Paragraph", "Task", "Labels"};

struct HeaderMatch {
  Section section;
  std::string_view rest;  // text after the colon on the same line
};

std::optional<HeaderMatch> match_header(std::string_view line) {
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
  for (std::size_t s = 0; s < kSectionCount; ++s) {
    const auto word = kHeaderWords[s];
    if (line.size() > word.size() && text::istarts_with_ascii(line, word) && line[word.size()] == ':') {
      return HeaderMatch{static_cast<Section>(s), line.substr(word.size() + 1)};
    }
  }
  return std::nullopt;
}

// True when s[0] opens a bracket that is closed exactly by the last character.
bool enclosed_by(std::string_view s, char open, char close) {
  if (s.size() < 2 || s.front() != open || s.back() != close) return false;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == open) {
      ++depth;
    } else if (s[i] == close) {
      --depth;
      if (depth == 0 && i + 1 != s.size()) return false;
    }
  }
  return depth == 0;
}

std::string_view strip_square(std::string_view s) {
  s = text::trim(s);
  if (enclosed_by(s, '[', ']')) s = text::trim(s.substr(1, s.size() - 2));
  return s;
}

std::string_view strip_list_marker(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] >= '0' && s[i] <= '9')) {
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i < s.size() && (s[i] == '.' || s[i] == ')')) {
      ++i;
    } else {
      return s;
    }
  } else if (s.starts_with("-") || s.starts_with("*")) {
    i = 1;
  } else if (s.starts_with("\xE2\x80\xA2")) {  // U+2022 bullet
    i = 3;
  } else {
    return s;
  }
  if (i == s.size()) return {};
  if (s[i] != ' ' && s[i] != '\t') return s;
  return text::trim(s.substr(i));
}

bool strip_enclosing_quotes(std::string& s) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 5> kPairs{{
      {"\"", "\""},
      {"'", "'"},
      {"`", "`"},
      {"\xE2\x80\x9C", "\xE2\x80\x9D"},  // “ ”
      {"\xE2\x80\x98", "\xE2\x80\x99"},  // ‘ ’
  }};
  for (const auto& [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      s = s.substr(open.size(), s.size() - open.size() - close.size());
      return true;
    }
  }
  return false;
}

}  // namespace

GenerationResult parse_generation(std::string_view input) {
  std::array<std::optional<std::string>, kSectionCount> sections;
  std::optional<Section> current;

  for (const auto line : text::split_lines(input)) {
    if (const auto header = match_header(line)) {
      auto& slot = sections[header->section];
      if (slot) throw DuplicateSection(std::string(kHeaderWords[header->section]));
      slot = std::string(header->rest);
      current = header->section;
      continue;
    }
    if (!current) continue;  // preamble before the first header
    auto& body = *sections[*current];
    body += '\n';
    body += line;
  }

  for (std::size_t s = 0; s < kSectionCount; ++s) {
    if (!sections[s]) throw MissingSection(std::string(kHeaderWords[s]));
  }

  GenerationResult result;
  result.plan = std::string(text::trim(*sections[kPlan]));
  result.paragraph = std::string(text::trim(*sections[kParagraph]));
  result.task_raw = std::string(strip_square(*sections[kTask]));
  if (result.plan.empty()) throw EmptySection("Plan");
  if (result.paragraph.empty()) throw EmptySection("Paragraph");
  if (result.task_raw.empty()) throw EmptySection("Task");
  normalize_task_name(result.task_raw);  // throws EmptyAfterNormalization

  for (const auto line : text::split_lines(strip_square(*sections[kLabels]))) {
    const auto label = strip_square(strip_list_marker(text::trim(line)));
    if (!label.empty()) result.labels.emplace_back(label);
  }
  return result;
}

std::string render_generation(const GenerationResult& result) {
  std::string out = "Plan:\n" + result.plan + "\nParagraph:\n" + result.paragraph + "\nTask:\n" + result.task_raw +
                    "\nLabels:";
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    out += "\n" + std::to_string(i + 1) + ". " + result.labels[i];
  }
  out += '\n';
  return out;
}

int parse_score(std::string_view input) {
  const auto lines = text::split_lines(input);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string_view line = text::trim(*it);
    if (!text::istarts_with_ascii(line, kScoreConclusion)) continue;
    line.remove_prefix(kScoreConclusion.size());
    if (line.empty() || (line.front() != ' ' && line.front() != '\t')) continue;
    line = text::trim(line);
    if (line.ends_with('.')) line.remove_suffix(1);
    if (line.empty() || line.find_first_not_of("0123456789") != std::string_view::npos) continue;
    // Anything past nine digits is reported saturated.
    long long value = 0;
    for (const char c : line) value = std::min(value * 10 + (c - '0'), 999'999'999LL);
    if (value < 1 || value > 10) throw ScoreOutOfRange(value);
    return static_cast<int>(value);
  }
  throw ScoreLineMissing();
}

TaskKey normalize_task_name(std::string_view task_raw) {
  std::string display = text::collapse_whitespace(task_raw);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [open, close] : {std::pair{'[', ']'}, std::pair{'(', ')'}, std::pair{'{', '}'}}) {
      if (enclosed_by(display, open, close)) {
        display = display.substr(1, display.size() - 2);
        changed = true;
      }
    }
    if (strip_enclosing_quotes(display)) changed = true;
    while (!display.empty() && (display.back() == '.' || display.back() == ',' || display.back() == ';' ||
                                display.back() == ':')) {
      display.pop_back();
      changed = true;
    }
    std::string collapsed = text::collapse_whitespace(display);
    if (collapsed != display) {
      display = std::move(collapsed);
      changed = true;
    }
  }
  if (display.empty()) throw EmptyAfterNormalization();
  // Case folding is ASCII-only; non-ASCII letters keep their case in the key.
  return TaskKey{text::to_lower_ascii(display), display};
}

}  // namespace taskforge
