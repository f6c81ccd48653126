#include "taskforge/prompting.hpp"

#include <fstream>
#include <iterator>

#include "taskforge/text.hpp"

namespace taskforge {
namespace {

constexpr std::string_view kGenerationBody =
    "Use the given sentences to create an example paragraph of an NLU task and its corresponding labels. "
    "The 5 sentences are: {input}.\n"
    "Make a plan then write and determine. Your output should be of the following format:\n"
    "Plan:\n"
    "Your plan here.\n"
    "Paragraph:\n"
    "Your paragraph here.\n"
    "Task:\n"
    "[Only the task name here, without additional information.]\n"
    "Labels:\n"
    "[Only the labels here, without additional information.]";

constexpr std::string_view kScoringBody =
    "Analyze the following paragraph, then at the last line conclude \"Thus the coherency score is {s}\", "
    "where s is an integer from 1 to 10.\n"
    "\n"
    "{paragraph}";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace

PromptTemplate::PromptTemplate(PromptKind kind, std::string body) : kind_(kind), body_(std::move(body)) {
  const auto ph = placeholder();
  const auto n = count_occurrences(body_, ph);
  if (n != 1) {
    throw TemplateError(std::string(name()) + " template must contain " + std::string(ph) + " exactly once, found " +
                        std::to_string(n));
  }
  if (text::find_invalid_utf8(body_)) {
    throw TemplateError(std::string(name()) + " template is not valid UTF-8");
  }
  placeholder_pos_ = body_.find(ph);
}

PromptTemplate PromptTemplate::default_generation() {
  return PromptTemplate(PromptKind::generation, std::string(kGenerationBody));
}

PromptTemplate PromptTemplate::default_scoring() {
  return PromptTemplate(PromptKind::scoring, std::string(kScoringBody));
}

PromptTemplate PromptTemplate::from_file(PromptKind kind, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("cannot read template " + path.string());
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  // Editors add a final newline; the built-in templates have none.
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
  return PromptTemplate(kind, std::move(body));
}

std::string_view PromptTemplate::name() const noexcept {
  return kind_ == PromptKind::generation ? "generation" : "scoring";
}

std::string_view PromptTemplate::placeholder() const noexcept {
  return kind_ == PromptKind::generation ? kInputPlaceholder : kParagraphPlaceholder;
}

std::string PromptTemplate::substitute(std::string_view value) const {
  std::string out;
  out.reserve(body_.size() + value.size());
  out.append(body_, 0, placeholder_pos_);
  out.append(value);
  out.append(body_, placeholder_pos_ + placeholder().size());
  return out;
}

std::string format_sentence_list(const SampleGroup& group, const SentenceStore& store) {
  std::string out;
  for (std::size_t i = 0; i < group.sentence_ids.size(); ++i) {
    out += '\n';
    out += std::to_string(i + 1);
    out += ". ";
    out += store.at(group.sentence_ids[i]).text;
  }
  return out;
}

RenderedPrompt render_generation_prompt(const SampleGroup& group, const SentenceStore& store,
                                        const PromptTemplate& tmpl) {
  if (tmpl.kind() != PromptKind::generation) throw TemplateError("expected a generation template");
  return RenderedPrompt{tmpl.substitute(format_sentence_list(group, store)), PromptKind::generation, group.group_id,
                        std::nullopt};
}

RenderedPrompt render_score_prompt(std::string_view paragraph, const PromptTemplate& tmpl) {
  if (tmpl.kind() != PromptKind::scoring) throw TemplateError("expected a scoring template");
  if (text::trim(paragraph).empty()) throw EmptyParagraph();
  return RenderedPrompt{tmpl.substitute(paragraph), PromptKind::scoring, 0, std::nullopt};
}

}  // namespace taskforge
