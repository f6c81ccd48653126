#pragma once

#include <random>
#include <string>
#include <vector>

#include "taskforge/parser.hpp"

namespace taskforge::testing {

// Random well-formed GenerationResult values: no content line starts with a
// section header, labels carry no list markers or enclosing brackets, and
// nothing has leading or trailing whitespace.
class GenerationResultGenerator {
 public:
  explicit GenerationResultGenerator(std::uint64_t seed) : rng_(seed) {}

  GenerationResult next() {
    GenerationResult g;
    const std::size_t plan_lines = 1 + pick(6);
    for (std::size_t i = 0; i < plan_lines; ++i) {
      if (i) g.plan += '\n';
      if (coin()) g.plan += std::to_string(i + 1) + ". ";
      g.plan += sentence(1 + pick(10));
    }
    const std::size_t para_lines = 1 + pick(3);
    for (std::size_t i = 0; i < para_lines; ++i) {
      if (i) g.paragraph += coin() ? "\n" : "\n\n";
      g.paragraph += sentence(3 + pick(40));
    }
    g.task_raw = title(1 + pick(4));
    const std::size_t n_labels = pick(6);
    for (std::size_t i = 0; i < n_labels; ++i) g.labels.push_back(title(1 + pick(3)));
    return g;
  }

 private:
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool coin() { return rng_() & 1; }

  std::string word() {
    static const std::vector<std::string> words{
        "the",    "book",  "bird",   "you",      "want",   "read",   "again", "police", "street", "movie",
        "plan",   "task",  "labels", "paragraph", "story",  "café",   "naïve", "日本",    "it's",   "don't",
        "3D",     "I.D.",  "(maybe)", "[note]",  "well,",  "yes!",   "why?",  "x-ray",  "50%",    "a/b",
        "e.g.",   "{s}",   "\"quoted\"", "Jean",  "Atenco", "Gina's", "—",     "1998",   "etc.",   "ok:"};
    return words[pick(words.size())];
  }

  std::string sentence(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += pick(8) == 0 ? "  " : " ";
      s += word();
    }
    return s;
  }

  std::string title(std::size_t n) {
    static const std::vector<std::string> words{"Text",     "Classification", "Sentiment", "Analysis",
                                                "Named",    "Entity",         "Question",  "Answering",
                                                "Intent",   "Détection",      "Topic",     "Yes/No",
                                                "Emotion",  "Police",         "Mentioned", "Regret"};
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += words[pick(words.size())];
    }
    return s;
  }

  std::mt19937_64 rng_;
};

}  // namespace taskforge::testing
