#include "ragfce/llm_client.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "ragfce/error.hpp"
#include "ragfce/text.hpp"

namespace ragfce {

using nlohmann::json;

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  throw Error(ErrorCode::InvalidArgument, "unknown role '" + std::string(s) + "'");
}

void ChatRequest::validate() const {
  if (messages.empty()) throw Error(ErrorCode::InvalidArgument, "chat request has no messages");
  if (messages.front().role == Role::Assistant) {
    throw Error(ErrorCode::InvalidArgument, "first message must be system or user");
  }
  if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  if (max_tokens && *max_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
}

const std::string& ChatRequest::first_user_content() const {
  static const std::string kEmpty;
  for (const auto& m : messages) {
    if (m.role == Role::User) return m.content;
  }
  return kEmpty;
}

json request_to_json(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    messages.push_back(json{{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  return json{{"model", req.model},
              {"messages", messages},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens ? json(*req.max_tokens) : json(nullptr)}};
}

ChatRequest request_from_json(const json& j) {
  ChatRequest req;
  req.model = j.at("model").get<std::string>();
  for (const auto& m : j.at("messages")) {
    req.messages.push_back({parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
  }
  req.temperature = j.at("temperature").get<double>();
  if (j.contains("max_tokens") && !j["max_tokens"].is_null()) req.max_tokens = j["max_tokens"].get<int>();
  return req;
}

std::string canonical_form(const ChatRequest& req) {
  // json objects keep keys sorted, and dump() is compact UTF-8.
  return request_to_json(req).dump();
}

std::string cache_key(const ChatRequest& req) {
  return text::sha256_hex("ragfce-chat-v1\n" + canonical_form(req));
}

// ---------------------------------------------------------------------------

MockRule MockRule::glob(std::string_view pattern, std::string response) {
  MockRule rule;
  rule.response = std::move(response);
  if (pattern == "*") return rule;
  const bool lead = pattern.starts_with('*');
  const bool trail = pattern.size() > 1 && pattern.ends_with('*');
  std::string body(pattern.substr(lead ? 1 : 0, pattern.size() - (lead ? 1 : 0) - (trail ? 1 : 0)));
  if (lead) {
    rule.contains.push_back(body);
  } else if (trail) {
    rule.prefix = body;
  } else {
    rule.regex = "^" + std::regex_replace(body, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)") + "$";
  }
  return rule;
}

namespace {

std::string target_text(const ChatRequest& req, MockTarget target) {
  switch (target) {
    case MockTarget::FirstUser:
      return req.first_user_content();
    case MockTarget::LastMessage:
      return req.messages.empty() ? std::string{} : req.messages.back().content;
    case MockTarget::All: {
      std::string all;
      for (const auto& m : req.messages) {
        if (!all.empty()) all += "\n";
        all += m.content;
      }
      return all;
    }
  }
  return {};
}

}  // namespace

bool MockRule::matches(const ChatRequest& req) const {
  const auto subject = target_text(req, target);
  if (!prefix.empty() && !subject.starts_with(prefix)) return false;
  for (const auto& needle : contains) {
    if (!text::contains(subject, needle)) return false;
  }
  if (regex) {
    const std::regex re(*regex, std::regex::ECMAScript);
    if (!std::regex_search(subject, re)) return false;
  }
  return true;
}

std::vector<MockRule> ScriptedMock::parse_script(const json& doc) {
  const json& rules = doc.is_array() ? doc : doc.at("rules");
  std::vector<MockRule> out;
  for (const auto& r : rules) {
    if (!r.contains("response") || !r["response"].is_string()) {
      throw Error(ErrorCode::Parse, "mock rule without a string 'response': " + r.dump());
    }
    MockRule rule = r.contains("match") ? MockRule::glob(r["match"].get<std::string>(), "") : MockRule{};
    rule.response = r["response"].get<std::string>();
    if (r.contains("prefix")) rule.prefix = r["prefix"].get<std::string>();
    if (r.contains("contains")) {
      const auto& c = r["contains"];
      if (c.is_string()) {
        rule.contains.push_back(c.get<std::string>());
      } else {
        for (const auto& s : c) rule.contains.push_back(s.get<std::string>());
      }
    }
    if (r.contains("regex")) {
      rule.regex = r["regex"].get<std::string>();
      try {
        std::regex check(*rule.regex);
      } catch (const std::regex_error& e) {
        throw Error(ErrorCode::Parse, "mock rule has invalid regex '" + *rule.regex + "': " + e.what());
      }
    }
    const auto target = r.value("target", std::string("first_user"));
    if (target == "first_user") {
      rule.target = MockTarget::FirstUser;
    } else if (target == "last") {
      rule.target = MockTarget::LastMessage;
    } else if (target == "all") {
      rule.target = MockTarget::All;
    } else {
      throw Error(ErrorCode::Parse, "mock rule has unknown target '" + target + "'");
    }
    out.push_back(std::move(rule));
  }
  return out;
}

std::shared_ptr<ScriptedMock> ScriptedMock::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open mock script " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, "mock script " + path.string() + ": " + e.what());
  }
  return std::make_shared<ScriptedMock>(parse_script(doc));
}

void ScriptedMock::add_rule(MockRule rule) {
  std::lock_guard lock(mutex_);
  rules_.push_back(std::move(rule));
}

ChatResponse ScriptedMock::complete(const ChatRequest& req) {
  req.validate();
  {
    std::lock_guard lock(mutex_);
    calls_.push_back(req);
  }
  for (const auto& rule : rules_) {
    if (!rule.matches(req)) continue;
    ChatResponse resp;
    resp.content = rule.response;
    for (const auto& m : req.messages) resp.prompt_tokens += text::scalar_count(m.content);
    resp.completion_tokens = text::scalar_count(rule.response);
    return resp;
  }
  const std::string head(text::utf8_prefix(req.first_user_content(), 80));
  throw Error(ErrorCode::MockMiss, "no mock rule matched request starting with '" + head + "'");
}

std::vector<ChatRequest> ScriptedMock::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t ScriptedMock::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_.size();
}

void ScriptedMock::clear_calls() {
  std::lock_guard lock(mutex_);
  calls_.clear();
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".entry");
}

std::optional<CacheEntry> ResponseCache::get(const ChatRequest& req) const {
  const auto key = cache_key(req);
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const auto doc = json::parse(in);
    CacheEntry e;
    e.key = doc.at("key").get<std::string>();
    e.request = request_from_json(doc.at("request"));
    const auto& r = doc.at("response");
    e.content = r.at("content").get<std::string>();
    e.prompt_tokens = r.value("prompt_tokens", std::size_t{0});
    e.completion_tokens = r.value("completion_tokens", std::size_t{0});
    // a digest collision or a hand-edited entry must not be served
    if (e.key != key || !(e.request == req)) return std::nullopt;
    return e;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const ChatRequest& req, const ChatResponse& resp) const {
  const auto key = cache_key(req);
  const auto path = path_for(key);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create cache directory " + path.parent_path().string());
  const json doc{{"format", "ragfce-cache-v1"},
                 {"key", key},
                 {"request", request_to_json(req)},
                 {"response",
                  {{"content", resp.content},
                   {"prompt_tokens", resp.prompt_tokens},
                   {"completion_tokens", resp.completion_tokens}}}};
  static std::atomic<unsigned long> counter{0};
  std::ostringstream tmp_name;
  tmp_name << key << ".tmp." << ::getpid() << "." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << "." << counter++;
  const auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write cache entry " + tmp.string());
    out << doc.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::Io, "cannot commit cache entry " + path.string());
  }
}

ChatResponse CachingBackend::complete(const ChatRequest& req) {
  req.validate();
  if (auto hit = cache_->get(req)) {
    ChatResponse resp;
    resp.content = hit->content;
    resp.prompt_tokens = hit->prompt_tokens;
    resp.completion_tokens = hit->completion_tokens;
    resp.cache_hit = true;
    return resp;
  }
  auto resp = inner_->complete(req);
  cache_->put(req, resp);
  resp.cache_hit = false;
  return resp;
}

ChatResponse ReplayBackend::complete(const ChatRequest& req) {
  req.validate();
  auto hit = cache_->get(req);
  if (!hit) throw Error(ErrorCode::CacheMiss, "no cached response for request " + cache_key(req));
  ChatResponse resp;
  resp.content = hit->content;
  resp.prompt_tokens = hit->prompt_tokens;
  resp.completion_tokens = hit->completion_tokens;
  resp.cache_hit = true;
  return resp;
}

BoundedBackend::BoundedBackend(std::shared_ptr<ChatBackend> inner, std::size_t max_in_flight)
    : inner_(std::move(inner)), limit_(max_in_flight == 0 ? 1 : max_in_flight) {}

ChatResponse BoundedBackend::complete(const ChatRequest& req) {
  {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
  }
  struct Release {
    BoundedBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return inner_->complete(req);
}

std::chrono::milliseconds RetryPolicy::nominal_delay(int retry) const {
  double ms = static_cast<double>(base_delay.count());
  for (int i = 1; i < retry; ++i) ms *= multiplier;
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

std::shared_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendKind::ScriptedMock: {
      if (config.mock_script.empty()) throw Error(ErrorCode::InvalidArgument, "mock backend needs a script");
      return std::make_shared<BoundedBackend>(ScriptedMock::from_file(config.mock_script), config.max_in_flight);
    }
    case BackendKind::ReplayCacheOnly:
      return std::make_shared<ReplayBackend>(std::make_shared<ResponseCache>(config.cache_dir));
    case BackendKind::RemoteChatApi: {
      const char* key = std::getenv(config.api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        throw Error(ErrorCode::Authentication, "environment variable " + config.api_key_env + " is not set");
      }
      RemoteConfig rc;
      rc.endpoint = config.endpoint;
      rc.api_key = key;
      rc.retry = config.retry;
      auto remote = std::make_shared<RemoteChatBackend>(rc, make_http_transport());
      auto cached = std::make_shared<CachingBackend>(remote, std::make_shared<ResponseCache>(config.cache_dir));
      return std::make_shared<BoundedBackend>(cached, config.max_in_flight);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown backend kind");
}

}  // namespace ragfce
