#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskforge/error.hpp"

namespace taskforge {

class InvalidRequest : public Error {
 public:
  explicit InvalidRequest(const std::string& message) : Error("InvalidRequest", message) {}
};
class AuthMissing : public Error {
 public:
  explicit AuthMissing(const std::string& env_var)
      : Error("AuthMissing", "environment variable " + env_var + " is not set") {}
};
class RateLimitedExhausted : public Error {
 public:
  explicit RateLimitedExhausted(const std::string& message) : Error("RateLimitedExhausted", message) {}
};
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message) : Error("TransportError", message) {}
};
class MalformedResponse : public Error {
 public:
  explicit MalformedResponse(const std::string& message) : Error("MalformedResponse", message) {}
};
class UnrecognizedPromptShape : public Error {
 public:
  UnrecognizedPromptShape()
      : Error("UnrecognizedPromptShape", "mock backend received neither a generation nor a scoring prompt") {}
};

// A failure worth retrying: HTTP 429, 5xx, or a timeout.
class TransientFailure : public Error {
 public:
  TransientFailure(int status, const std::string& message)
      : Error("TransientFailure", message), status_(status) {}
  int status() const noexcept { return status_; }  // 0 for timeouts/connection errors
  bool rate_limited() const noexcept { return status_ == 429; }

 private:
  int status_;
};

enum class Role { system, user, assistant };
enum class BackendKind { remote, mock };

std::string_view to_string(Role role);
std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct ChatRequest {
  std::string model = "gpt-3.5-turbo";
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  int max_tokens = 1024;
  // Distinguishes deliberate repeats of the same prompt (e.g. the five
  // scoring samples). Part of the cache key and of the mock's hash input;
  // never sent over the wire.
  std::string replica;

  // Throws InvalidRequest on an empty message list, an empty content, no
  // user message, negative temperature or non-positive max_tokens.
  void validate() const;

  static ChatRequest single_user(std::string content, std::string replica = {});
};

struct ChatResponse {
  std::string content;
  std::string finish_reason;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  BackendKind backend = BackendKind::mock;
  bool cached = false;
};

// Canonical serialization of everything that affects a completion.
nlohmann::json canonical_request(const ChatRequest& request);
std::string cache_key(const ChatRequest& request);

// OpenAI-compatible chat completions body: {model, messages, temperature, max_tokens}.
nlohmann::json wire_body(const ChatRequest& request);

nlohmann::json to_json(const ChatResponse& response);
ChatResponse response_from_json(const nlohmann::json& j);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendKind kind() const noexcept = 0;
  // May throw TransientFailure; the gateway owns retries.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Deterministic offline backend. A pure function of the request content.
//
// Generation prompts (all four section headers present as lines) get a
// well-formed four-section answer whose paragraph embeds the numbered input
// sentences and whose task comes from a fixed pool, picked by prompt hash.
// Scoring prompts (containing the coherency conclusion phrase) get a short
// analysis ending in "Thus the coherency score is s", s = 1 + hash mod 10.
// The hash is the big-endian head of SHA-256 over the prompt text, with the
// request's replica tag appended after a 0x1E byte when non-empty.
class MockBackend final : public Backend {
 public:
  BackendKind kind() const noexcept override { return BackendKind::mock; }
  ChatResponse complete(const ChatRequest& request) override;
};

ChatResponse mock_complete(const ChatRequest& request);
const std::vector<std::string>& mock_task_pool();

struct HttpResult {
  int status = 0;
  std::string body;
  std::string error;  // set when no HTTP response arrived at all
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post(const std::string& url, const std::map<std::string, std::string>& headers,
                          const std::string& body, std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<HttpTransport> make_httplib_transport();

struct RemoteOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{60000};
};

// POST {base_url}/chat/completions with bearer auth from the environment.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteOptions options, std::unique_ptr<HttpTransport> transport = nullptr);
  BackendKind kind() const noexcept override { return BackendKind::remote; }
  ChatResponse complete(const ChatRequest& request) override;

 private:
  RemoteOptions options_;
  std::unique_ptr<HttpTransport> transport_;
};

struct GatewayConfig {
  BackendKind backend = BackendKind::mock;
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "gpt-3.5-turbo";
  double temperature = 1.0;
  int max_tokens = 1024;
  int max_retries = 4;
  // Delay before retry i is backoff[min(i, size-1)].
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000), std::chrono::milliseconds(2000),
                                                 std::chrono::milliseconds(4000), std::chrono::milliseconds(8000)};
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds timeout{60000};
  std::optional<std::filesystem::path> cache_dir;

  void validate() const;
};

std::unique_ptr<Backend> make_backend(const GatewayConfig& config);

// Thread-safe front door: bounds concurrent backend calls, retries transient
// failures with backoff, and serves repeated requests from a content-addressed
// on-disk cache (one {request, response, timestamp} JSON file per key).
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(GatewayConfig config, std::unique_ptr<Backend> backend);
  explicit Gateway(GatewayConfig config);

  ChatResponse complete(const ChatRequest& request);

  // A single-user-message request with the configured model and decoding settings.
  ChatRequest make_request(std::string prompt, std::string replica = {}) const;

  const GatewayConfig& config() const noexcept { return config_; }
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  std::uint64_t backend_calls() const;
  std::uint64_t cache_hits() const;
  std::size_t peak_in_flight() const;

 private:
  std::optional<ChatResponse> cache_lookup(const std::string& key);
  void cache_store(const std::string& key, const ChatRequest& request, const ChatResponse& response);
  ChatResponse call_with_retries(const ChatRequest& request);

  GatewayConfig config_;
  std::unique_ptr<Backend> backend_;
  Sleeper sleeper_;

  mutable std::mutex mutex_;
  std::condition_variable slot_free_;
  std::size_t in_flight_ = 0;
  std::size_t peak_in_flight_ = 0;
  std::uint64_t backend_calls_ = 0;
  std::uint64_t cache_hits_ = 0;
  std::mutex cache_write_mutex_;
};

}  // namespace taskforge
