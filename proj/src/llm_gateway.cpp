#include "taskforge/llm_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include "taskforge/digest.hpp"
#include "taskforge/parser.hpp"
#include "taskforge/prompting.hpp"
#include "taskforge/text.hpp"

namespace taskforge {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
  }
  return "user";
}

std::string_view to_string(BackendKind kind) { return kind == BackendKind::remote ? "remote" : "mock"; }

BackendKind backend_kind_from_string(std::string_view s) {
  if (s == "remote") return BackendKind::remote;
  if (s == "mock") return BackendKind::mock;
  throw InvalidArgument("unknown backend '" + std::string(s) + "' (expected remote or mock)");
}

void ChatRequest::validate() const {
  if (messages.empty()) throw InvalidRequest("request has no messages");
  bool has_user = false;
  for (const auto& m : messages) {
    if (m.content.empty()) throw InvalidRequest("message content is empty");
    has_user = has_user || m.role == Role::user;
  }
  if (!has_user) throw InvalidRequest("request has no user message");
  if (!(temperature >= 0.0)) throw InvalidRequest("temperature must be >= 0");
  if (max_tokens <= 0) throw InvalidRequest("max_tokens must be positive");
  if (model.empty()) throw InvalidRequest("model is empty");
}

ChatRequest ChatRequest::single_user(std::string content, std::string replica) {
  ChatRequest r;
  r.messages.push_back(ChatMessage{Role::user, std::move(content)});
  r.replica = std::move(replica);
  return r;
}

nlohmann::json canonical_request(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return {{"model", request.model},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens},
          {"replica", request.replica}};
}

std::string cache_key(const ChatRequest& request) { return sha256_hex(canonical_request(request).dump()); }

nlohmann::json wire_body(const ChatRequest& request) {
  auto body = canonical_request(request);
  body.erase("replica");
  return body;
}

nlohmann::json to_json(const ChatResponse& response) {
  return {{"content", response.content},
          {"finish_reason", response.finish_reason},
          {"prompt_tokens", response.prompt_tokens},
          {"completion_tokens", response.completion_tokens},
          {"backend", to_string(response.backend)}};
}

ChatResponse response_from_json(const nlohmann::json& j) {
  ChatResponse r;
  r.content = j.at("content").get<std::string>();
  r.finish_reason = j.at("finish_reason").get<std::string>();
  r.prompt_tokens = j.at("prompt_tokens").get<std::uint64_t>();
  r.completion_tokens = j.at("completion_tokens").get<std::uint64_t>();
  r.backend = backend_kind_from_string(j.at("backend").get<std::string>());
  return r;
}

// ---------------------------------------------------------------------------
// Mock backend

const std::vector<std::string>& mock_task_pool() {
  static const std::vector<std::string> pool{
      "Text Classification",      "Sentiment Analysis",         "Named Entity Recognition",
      "Question Answering",       "Intent Detection",           "Topic Classification",
      "Emotion Detection",        "Dialogue Act Classification", "Coreference Resolution",
      "Natural Language Inference", "Paraphrase Identification", "Summarization",
  };
  return pool;
}

namespace {

const std::vector<std::vector<std::string>>& mock_label_pool() {
  static const std::vector<std::vector<std::string>> pool{
      {"Question", "Statement", "Request", "Greeting", "Opinion"},
      {"Positive", "Negative", "Neutral", "Mixed"},
      {"Person", "Location", "Organization", "Object", "Event"},
      {"Answerable", "Unanswerable", "Yes", "No"},
      {"Request Information", "Give Instruction", "Express Feeling", "Offer Help"},
      {"Family", "Reading", "Play", "Food", "Travel"},
      {"Joy", "Surprise", "Frustration", "Curiosity", "Regret"},
      {"Question", "Answer", "Acknowledgement", "Directive"},
      {"Same Entity", "Different Entity"},
      {"Entailment", "Contradiction", "Neutral"},
      {"Paraphrase", "Not Paraphrase"},
      {"Main Idea", "Supporting Detail", "Conclusion"},
  };
  return pool;
}

constexpr std::string_view kOpeners[] = {
    "Here is a short scene built from everyday talk.",
    "This paragraph follows a single afternoon at home.",
    "The following conversation happens while a family gets ready for the day.",
    "In this example, a parent and a child talk about what they see around them.",
    "Consider the following exchange between two friends.",
};

constexpr std::string_view kClosers[] = {
    "Together these lines show how the speakers stay on one topic.",
    "By the end, everyone knows what comes next.",
    "The moment ends quietly, and the conversation moves on.",
    "Each remark builds on the one before it.",
    "",
};

constexpr std::string_view kAnalysisHigh =
    "The paragraph connects its sentences through a shared setting and a clear sequence of events. "
    "Transitions are natural and the task is easy to recognize.";
constexpr std::string_view kAnalysisMid =
    "The paragraph mostly holds together, although some sentences feel loosely attached to the main thread.";
constexpr std::string_view kAnalysisLow =
    "The sentences read as separate fragments; the paragraph lacks a consistent topic or flow.";

bool looks_like_generation_prompt(std::string_view content) {
  bool seen[4] = {false, false, false, false};
  constexpr std::string_view headers[] = {"Plan:", "Paragraph:", "Task:", "Labels:"};
  for (const auto line : text::split_lines(content)) {
    const auto t = text::trim(line);
    for (int h = 0; h < 4; ++h) {
      if (text::iequals_ascii(t, headers[h])) seen[h] = true;
    }
  }
  return seen[0] && seen[1] && seen[2] && seen[3];
}

std::vector<std::string> extract_numbered_sentences(std::string_view content) {
  std::vector<std::string> out;
  for (const auto line : text::split_lines(content)) {
    const auto t = text::trim(line);
    if (text::iequals_ascii(t, "Plan:")) break;
    if (t.size() > 3 && t[0] >= '1' && t[0] <= '9' && t[1] == '.' && t[2] == ' ') {
      std::string s(text::trim(t.substr(3)));
      // The default template closes the list with its own period; drop it when
      // the sentence already ends in terminal punctuation (but keep ellipses).
      if (s.size() >= 2 && s.back() == '.') {
        const char prev = s[s.size() - 2];
        if (prev == '?' || prev == '!' || (prev == '.' && !s.ends_with("..."))) s.pop_back();
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string short_quote(std::string_view sentence) {
  const auto words = text::split_words(sentence);
  std::string out;
  for (std::size_t i = 0; i < words.size() && i < 6; ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  if (words.size() > 6) out += " ...";
  return out;
}

std::string mock_generation(std::string_view content, std::uint64_t h) {
  auto sentences = extract_numbered_sentences(content);
  if (sentences.empty()) sentences.push_back("Nothing was said.");

  const auto& tasks = mock_task_pool();
  const std::size_t task_idx = h % tasks.size();
  const auto& labels_pool = mock_label_pool()[task_idx];

  std::ostringstream plan;
  plan << "1. Introduce the scene suggested by \"" << short_quote(sentences.front()) << "\"";
  std::size_t step = 2;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    plan << '\n' << step++ << ". Weave in sentence " << (i + 1) << " so it follows from what came before";
  }
  plan << '\n' << step << ". Decide which " << tasks[task_idx] << " labels describe the paragraph";

  std::string paragraph(kOpeners[(h >> 8) % std::size(kOpeners)]);
  for (const auto& s : sentences) paragraph += " " + s;
  const auto closer = kClosers[(h >> 16) % std::size(kClosers)];
  if (!closer.empty()) paragraph += " " + std::string(closer);

  const std::size_t n_labels = 2 + (h >> 24) % 3;
  const std::size_t first = (h >> 32) % labels_pool.size();
  std::ostringstream out;
  out << "Plan:\n" << plan.str() << "\n\nParagraph:\n" << paragraph << "\n\nTask:\n[" << tasks[task_idx] << "]\n\nLabels:\n";
  for (std::size_t i = 0; i < n_labels && i < labels_pool.size(); ++i) {
    out << (i + 1) << ". " << labels_pool[(first + i) % labels_pool.size()] << '\n';
  }
  return out.str();
}

std::string mock_scoring(std::uint64_t h) {
  const int score = 1 + static_cast<int>(h % 10);
  const std::string_view analysis = score >= 7 ? kAnalysisHigh : score >= 4 ? kAnalysisMid : kAnalysisLow;
  return std::string(analysis) + "\n" + std::string(kScoreConclusion) + " " + std::to_string(score);
}

}  // namespace

ChatResponse mock_complete(const ChatRequest& request) {
  request.validate();
  std::string prompt;
  for (const auto& m : request.messages) {
    if (m.role != Role::user) continue;
    if (!prompt.empty()) prompt += '\n';
    prompt += m.content;
  }
  std::string hash_input = prompt;
  if (!request.replica.empty()) {
    hash_input += '\x1e';
    hash_input += request.replica;
  }
  const std::uint64_t h = sha256_u64(hash_input);

  ChatResponse r;
  if (looks_like_generation_prompt(prompt)) {
    r.content = mock_generation(prompt, h);
  } else if (prompt.find(kScoreConclusion) != std::string::npos) {
    r.content = mock_scoring(h);
  } else {
    throw UnrecognizedPromptShape();
  }
  r.finish_reason = "stop";
  r.prompt_tokens = text::count_words(prompt);
  r.completion_tokens = text::count_words(r.content);
  r.backend = BackendKind::mock;
  return r;
}

ChatResponse MockBackend::complete(const ChatRequest& request) { return mock_complete(request); }

// ---------------------------------------------------------------------------
// Remote backend

RemoteBackend::RemoteBackend(RemoteOptions options, std::unique_ptr<HttpTransport> transport)
    : options_(std::move(options)), transport_(transport ? std::move(transport) : make_httplib_transport()) {}

ChatResponse RemoteBackend::complete(const ChatRequest& request) {
  request.validate();
  const char* key = std::getenv(options_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') throw AuthMissing(options_.api_key_env);

  std::string url = options_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";

  const std::map<std::string, std::string> headers{{"Authorization", std::string("Bearer ") + key},
                                                   {"Content-Type", "application/json"}};
  const auto result = transport_->post(url, headers, wire_body(request).dump(), options_.timeout);
  if (result.status == 0) throw TransientFailure(0, "no response: " + result.error);
  if (result.status == 429 || result.status >= 500) {
    throw TransientFailure(result.status, "HTTP " + std::to_string(result.status));
  }
  if (result.status != 200) {
    throw TransportError("HTTP " + std::to_string(result.status) + ": " + result.body.substr(0, 300));
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(result.body);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("response is not JSON: ") + e.what());
  }
  try {
    const auto& choice = j.at("choices").at(0);
    ChatResponse r;
    r.finish_reason = choice.value("finish_reason", std::string("stop"));
    const auto& content = choice.at("message").at("content");
    if (content.is_null()) {
      if (r.finish_reason == "stop") throw MalformedResponse("finish_reason is stop but content is null");
    } else {
      r.content = content.get<std::string>();
    }
    if (const auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
      r.prompt_tokens = usage->value("prompt_tokens", std::uint64_t{0});
      r.completion_tokens = usage->value("completion_tokens", std::uint64_t{0});
    }
    r.backend = BackendKind::remote;
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("unexpected response shape: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Gateway

void GatewayConfig::validate() const {
  if (max_in_flight < 1) throw InvalidArgument("max_in_flight must be >= 1");
  if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
  if (max_tokens <= 0) throw InvalidArgument("max_tokens must be positive");
  if (model.empty()) throw InvalidArgument("model must be non-empty");
  if (backend == BackendKind::remote && base_url.empty()) throw InvalidArgument("base_url must be non-empty");
}

std::unique_ptr<Backend> make_backend(const GatewayConfig& config) {
  if (config.backend == BackendKind::mock) return std::make_unique<MockBackend>();
  return std::make_unique<RemoteBackend>(RemoteOptions{config.base_url, config.api_key_env, config.timeout});
}

Gateway::Gateway(GatewayConfig config, std::unique_ptr<Backend> backend)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  config_.validate();
  if (!backend_) throw InvalidArgument("gateway needs a backend");
  if (config_.cache_dir) std::filesystem::create_directories(*config_.cache_dir);
}

Gateway::Gateway(GatewayConfig config) : Gateway(config, make_backend(config)) {}

ChatRequest Gateway::make_request(std::string prompt, std::string replica) const {
  ChatRequest r = ChatRequest::single_user(std::move(prompt), std::move(replica));
  r.model = config_.model;
  r.temperature = config_.temperature;
  r.max_tokens = config_.max_tokens;
  return r;
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  request.validate();
  std::string key;
  if (config_.cache_dir) {
    key = cache_key(request);
    if (auto hit = cache_lookup(key)) {
      std::lock_guard lock(mutex_);
      ++cache_hits_;
      return *hit;
    }
  }
  auto response = call_with_retries(request);
  response.cached = false;
  if (config_.cache_dir) cache_store(key, request, response);
  return response;
}

ChatResponse Gateway::call_with_retries(const ChatRequest& request) {
  for (int attempt = 0;; ++attempt) {
    {
      std::unique_lock lock(mutex_);
      slot_free_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
      ++in_flight_;
      ++backend_calls_;
      peak_in_flight_ = std::max(peak_in_flight_, in_flight_);
    }
    struct SlotRelease {
      Gateway* self;
      ~SlotRelease() {
        {
          std::lock_guard lock(self->mutex_);
          --self->in_flight_;
        }
        self->slot_free_.notify_one();
      }
    };
    try {
      SlotRelease release{this};
      return backend_->complete(request);
    } catch (const TransientFailure& failure) {
      if (attempt >= config_.max_retries) {
        const std::string msg = "gave up after " + std::to_string(attempt + 1) + " attempts: " + failure.what();
        if (failure.rate_limited()) throw RateLimitedExhausted(msg);
        throw TransportError(msg);
      }
      if (!config_.backoff.empty()) {
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(attempt), config_.backoff.size() - 1);
        sleeper_(config_.backoff[idx]);
      }
    }
  }
}

std::optional<ChatResponse> Gateway::cache_lookup(const std::string& key) {
  const auto path = *config_.cache_dir / (key + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    auto response = response_from_json(j.at("response"));
    response.cached = true;
    return response;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are treated as misses and overwritten
  }
}

void Gateway::cache_store(const std::string& key, const ChatRequest& request, const ChatResponse& response) {
  const nlohmann::json entry{{"request", canonical_request(request)},
                             {"response", to_json(response)},
                             {"timestamp", static_cast<std::int64_t>(std::time(nullptr))}};
  const auto final_path = *config_.cache_dir / (key + ".json");
  std::lock_guard lock(cache_write_mutex_);
  const auto tmp_path = *config_.cache_dir / (key + ".json.tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp_path.string());
    out << entry.dump(2) << '\n';
  }
  std::filesystem::rename(tmp_path, final_path);
}

std::uint64_t Gateway::backend_calls() const {
  std::lock_guard lock(mutex_);
  return backend_calls_;
}

std::uint64_t Gateway::cache_hits() const {
  std::lock_guard lock(mutex_);
  return cache_hits_;
}

std::size_t Gateway::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_in_flight_;
}

}  // namespace taskforge
