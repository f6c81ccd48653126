#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "taskforge/corpus.hpp"
#include "taskforge/error.hpp"
#include "taskforge/sampler.hpp"

namespace taskforge {

enum class PromptKind { generation, scoring };

inline constexpr std::string_view kInputPlaceholder = "{input}";
inline constexpr std::string_view kParagraphPlaceholder = "{paragraph}";

// Marker the scoring instruction asks the model to end with; also what the
// mock backend and the score parser key on.
inline constexpr std::string_view kScoreConclusion = "Thus the coherency score is";

class EmptyParagraph : public Error {
 public:
  EmptyParagraph() : Error("EmptyParagraph", "cannot score an empty paragraph") {}
};

class TemplateError : public Error {
 public:
  explicit TemplateError(const std::string& message) : Error("TemplateError", message) {}
};

class PromptTemplate {
 public:
  // Throws TemplateError unless `body` holds the kind's placeholder exactly once.
  PromptTemplate(PromptKind kind, std::string body);

  static PromptTemplate default_generation();
  static PromptTemplate default_scoring();
  static PromptTemplate from_file(PromptKind kind, const std::filesystem::path& path);

  PromptKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  std::string_view placeholder() const noexcept;
  const std::string& body() const noexcept { return body_; }

  std::string substitute(std::string_view value) const;

 private:
  PromptKind kind_;
  std::string body_;
  std::size_t placeholder_pos_;
};

struct RenderedPrompt {
  std::string text;
  PromptKind kind = PromptKind::generation;
  std::size_t group_id = 0;
  std::optional<std::size_t> plan_index;  // scoring prompts only
};

// "\n1. <text>\n2. <text>..." for the group's sentences, in group order.
std::string format_sentence_list(const SampleGroup& group, const SentenceStore& store);

RenderedPrompt render_generation_prompt(const SampleGroup& group, const SentenceStore& store,
                                        const PromptTemplate& tmpl = PromptTemplate::default_generation());

RenderedPrompt render_score_prompt(std::string_view paragraph,
                                   const PromptTemplate& tmpl = PromptTemplate::default_scoring());

}  // namespace taskforge
