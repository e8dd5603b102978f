#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <random>
#include <thread>

#include "ragfce/error.hpp"
#include "ragfce/llm_client.hpp"
#include "ragfce/text.hpp"

namespace ragfce {

using nlohmann::json;

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttpResult post_json(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::seconds timeout) override {
    // split "scheme://host[:port]/path"
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "endpoint URL needs a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    HttpResult result;
    auto res = client.Post(path, h, body, "application/json");
    if (!res) {
      result.transport_error = httplib::to_string(res.error());
      return result;
    }
    result.status = res->status;
    result.body = res->body;
    return result;
  }
};

bool mentions_context_length(const std::string& body) {
  const auto lowered = text::ascii_lower(body);
  return text::contains(lowered, "context_length_exceeded") || text::contains(lowered, "maximum context length");
}

std::string snippet(const std::string& body) { return std::string(text::utf8_prefix(body, 300)); }

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

RemoteChatBackend::RemoteChatBackend(RemoteConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string RemoteChatBackend::wire_body(const ChatRequest& req) {
  json body = request_to_json(req);
  if (!req.max_tokens) body.erase("max_tokens");
  return body.dump();
}

ChatResponse RemoteChatBackend::complete(const ChatRequest& req) {
  req.validate();
  const auto body = wire_body(req);
  const std::vector<std::pair<std::string, std::string>> headers{
      {"Authorization", "Bearer " + config_.api_key}};

  thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
  std::string last_error;
  const int attempts = std::max(1, config_.retry.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) {
      const double j = config_.retry.jitter;
      std::uniform_real_distribution<double> scale(1.0 - j, 1.0 + j);
      const auto nominal = config_.retry.nominal_delay(attempt - 1);
      sleeper_(std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(nominal.count()) * scale(jitter_rng))));
    }
    const auto started = std::chrono::steady_clock::now();
    const auto res = transport_->post_json(config_.endpoint, body, headers, config_.timeout);
    const auto latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    if (res.status == 0) {
      last_error = "transport: " + res.transport_error;
      continue;
    }
    if (res.status == 401 || res.status == 403) {
      throw Error(ErrorCode::Authentication, "HTTP " + std::to_string(res.status) + ": " + snippet(res.body));
    }
    if (res.status == 413 || (res.status == 400 && mentions_context_length(res.body))) {
      throw Error(ErrorCode::RequestTooLarge, "HTTP " + std::to_string(res.status) + ": " + snippet(res.body));
    }
    if (res.status == 408 || res.status == 429 || res.status >= 500) {
      last_error = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      throw Error(ErrorCode::BackendRequest, "HTTP " + std::to_string(res.status) + ": " + snippet(res.body));
    }

    try {
      const auto doc = json::parse(res.body);
      const auto& choices = doc.at("choices");
      if (!choices.is_array() || choices.empty()) throw std::runtime_error("no choices");
      const auto& content = choices.at(0).at("message").at("content");
      if (!content.is_string() || content.get<std::string>().empty()) throw std::runtime_error("empty content");
      ChatResponse resp;
      resp.content = content.get<std::string>();
      if (doc.contains("usage") && doc["usage"].is_object()) {
        resp.prompt_tokens = doc["usage"].value("prompt_tokens", std::size_t{0});
        resp.completion_tokens = doc["usage"].value("completion_tokens", std::size_t{0});
      }
      resp.latency = latency;
      return resp;
    } catch (const std::exception& e) {
      // a malformed body from an overloaded gateway is treated as transient
      last_error = std::string("malformed response: ") + e.what();
    }
  }
  throw Error(ErrorCode::ExhaustedRetries,
              "gave up after " + std::to_string(attempts) + " attempts; last error: " + last_error);
}

}  // namespace ragfce
