#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragfce {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r) noexcept;
Role parse_role(std::string_view s);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::optional<int> max_tokens;

  /// Throws Error(InvalidArgument) when messages are empty, the first role
  /// is assistant, temperature is negative or max_tokens is not positive.
  void validate() const;

  /// Content of the first user message, or empty.
  [[nodiscard]] const std::string& first_user_content() const;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct ChatResponse {
  std::string content;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  std::chrono::milliseconds latency{0};
  bool cache_hit = false;
};

/// Call accounting across retries and stages.
struct CallCost {
  std::size_t calls = 0;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;

  void add(const ChatResponse& resp) {
    ++calls;
    prompt_tokens += resp.prompt_tokens;
    completion_tokens += resp.completion_tokens;
  }
  CallCost& operator+=(const CallCost& o) {
    calls += o.calls;
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  friend bool operator==(const CallCost&, const CallCost&) = default;
};

/// One request/response pair kept for judgment records.
struct Exchange {
  std::string stage;
  std::optional<std::size_t> segment_index;
  ChatRequest request;
  std::string response;
};

nlohmann::json request_to_json(const ChatRequest& req);
ChatRequest request_from_json(const nlohmann::json& j);

/// Compact JSON with sorted keys over (max_tokens, messages, model,
/// temperature). Stable across runs and platforms.
std::string canonical_form(const ChatRequest& req);

/// SHA-256 hex of a version tag plus the canonical form.
std::string cache_key(const ChatRequest& req);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted mock
// ---------------------------------------------------------------------------

/// Which part of the request a mock rule inspects.
enum class MockTarget { FirstUser, LastMessage, All };

/// A rule matches when every condition it sets holds. Rules are tried in
/// order and the first match wins.
struct MockRule {
  std::string prefix;
  std::vector<std::string> contains;
  std::optional<std::string> regex;
  MockTarget target = MockTarget::FirstUser;
  std::string response;

  /// "ABC*" is a prefix rule, "*ABC*" a substring rule, "*" matches all,
  /// anything else must equal the target text.
  static MockRule glob(std::string_view pattern, std::string response);

  [[nodiscard]] bool matches(const ChatRequest& req) const;
};

class ScriptedMock : public ChatBackend {
 public:
  ScriptedMock() = default;
  explicit ScriptedMock(std::vector<MockRule> rules) : rules_(std::move(rules)) {}

  /// {"rules": [{"match"?: glob, "prefix"?, "contains"?: str|[str],
  ///             "regex"?, "target"?: "first_user"|"last"|"all",
  ///             "response": str}]}
  static std::vector<MockRule> parse_script(const nlohmann::json& doc);
  static std::shared_ptr<ScriptedMock> from_file(const std::filesystem::path& path);

  void add_rule(MockRule rule);

  /// Throws Error(MockMiss) when no rule matches. Token counts are Unicode
  /// scalar counts of the prompt and the canned reply.
  ChatResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "mock"; }

  /// Every request received, in arrival order.
  [[nodiscard]] std::vector<ChatRequest> calls() const;
  [[nodiscard]] std::size_t call_count() const;
  void clear_calls();

 private:
  std::vector<MockRule> rules_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> calls_;
};

// ---------------------------------------------------------------------------
// Content-addressed response cache: <dir>/<first-2-hex>/<digest>.entry
// ---------------------------------------------------------------------------

struct CacheEntry {
  std::string key;
  ChatRequest request;
  std::string content;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  [[nodiscard]] std::filesystem::path path_for(const std::string& key) const;
  [[nodiscard]] std::optional<CacheEntry> get(const ChatRequest& req) const;
  /// Writes through a temporary file and an atomic rename.
  void put(const ChatRequest& req, const ChatResponse& resp) const;

  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

class CachingBackend : public ChatBackend {
 public:
  CachingBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<ResponseCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  ChatResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "cached(" + inner_->name() + ")"; }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

/// Serves from the cache only; an unseen request is Error(CacheMiss).
class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(std::shared_ptr<ResponseCache> cache) : cache_(std::move(cache)) {}

  ChatResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "replay"; }

 private:
  std::shared_ptr<ResponseCache> cache_;
};

/// Caps the number of concurrent in-flight calls to the wrapped backend.
class BoundedBackend : public ChatBackend {
 public:
  BoundedBackend(std::shared_ptr<ChatBackend> inner, std::size_t max_in_flight);

  ChatResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return inner_->name(); }

  [[nodiscard]] std::size_t max_in_flight() const noexcept { return limit_; }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::size_t limit_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
};

// ---------------------------------------------------------------------------
// Remote chat-completions API
// ---------------------------------------------------------------------------

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double multiplier = 2.0;
  /// Relative jitter: each delay is scaled by a factor in [1-j, 1+j].
  double jitter = 0.2;

  /// Nominal (jitter-free) delay before retry number `retry` (1-based).
  [[nodiscard]] std::chrono::milliseconds nominal_delay(int retry) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct HttpResult {
  /// 0 when the request never produced an HTTP status (timeout, refused).
  int status = 0;
  std::string body;
  std::string transport_error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post_json(const std::string& url, const std::string& body,
                               const std::vector<std::pair<std::string, std::string>>& headers,
                               std::chrono::seconds timeout) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport();

struct RemoteConfig {
  /// Full URL of the chat-completions endpoint.
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
};

class RemoteChatBackend : public ChatBackend {
 public:
  RemoteChatBackend(RemoteConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper = {});

  /// Retries timeouts, 408/429 and 5xx with exponential backoff; 401/403
  /// is Error(Authentication), 413 or a context-length complaint is
  /// Error(RequestTooLarge), other 4xx is Error(BackendRequest).
  ChatResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "remote"; }

  /// Wire body sent for a request.
  static std::string wire_body(const ChatRequest& req);

 private:
  RemoteConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

enum class BackendKind { RemoteChatApi, ScriptedMock, ReplayCacheOnly };

struct BackendConfig {
  BackendKind kind = BackendKind::ScriptedMock;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "RAGFCE_API_KEY";
  std::filesystem::path mock_script;
  std::filesystem::path cache_dir = ".ragfce-cache";
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
};

/// Remote backends are wrapped as bounded(cached(remote)); replay reads the
/// same cache directory; mocks are bounded only.
std::shared_ptr<ChatBackend> make_backend(const BackendConfig& config);

}  // namespace ragfce
