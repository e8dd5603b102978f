#include <gtest/gtest.h>

#include <atomic>
#include <deque>
#include <thread>

#include "ragfce/error.hpp"
#include "ragfce/llm_client.hpp"
#include "support.hpp"

namespace ragfce {
namespace {

using nlohmann::json;
using testing::TempDir;

ChatRequest sample_request() {
  ChatRequest req;
  req.model = "gpt-4";
  req.messages = {{Role::System, "你是评估员"}, {Role::User, "判断：\"A\"\n是否一致？"}};
  return req;
}

// Digests produced by an independent implementation:
//   json.dumps(req, sort_keys=True, separators=(',', ':'), ensure_ascii=False)
//   hashlib.sha256(("ragfce-chat-v1\n" + canonical).encode()).hexdigest()
TEST(CacheKey, GoldenDigests) {
  auto req = sample_request();
  EXPECT_EQ(canonical_form(req),
            R"({"max_tokens":null,"messages":[{"content":"你是评估员","role":"system"},)"
            R"({"content":"判断：\"A\"\n是否一致？","role":"user"}],"model":"gpt-4","temperature":0.0})");
  EXPECT_EQ(cache_key(req), "f1a440c0c5038c9130cb25838ba30ddc86edf6f91da75f7ff9e73876a5bbba13");
  req.max_tokens = 256;
  req.temperature = 0.7;
  EXPECT_EQ(cache_key(req), "322b727323ab2031aaff0d93674716d10abfc2a21a0cea4e16c2eac9a7d76249");
}

TEST(CacheKey, SensitiveToEveryField) {
  const auto base = cache_key(sample_request());
  auto r = sample_request();
  r.model = "gpt-3.5";
  EXPECT_NE(cache_key(r), base);
  r = sample_request();
  r.temperature = 0.1;
  EXPECT_NE(cache_key(r), base);
  r = sample_request();
  r.max_tokens = 10;
  EXPECT_NE(cache_key(r), base);
  r = sample_request();
  r.messages[1].content += " ";
  EXPECT_NE(cache_key(r), base);
  r = sample_request();
  r.messages[0].role = Role::User;
  EXPECT_NE(cache_key(r), base);
}

TEST(ChatRequest, ValidateRejectsBadRequests) {
  auto r = sample_request();
  EXPECT_NO_THROW(r.validate());
  r.messages.clear();
  EXPECT_THROW(r.validate(), Error);
  r = sample_request();
  r.max_tokens = 0;
  EXPECT_THROW(r.validate(), Error);
}

TEST(ChatRequest, JsonRoundTrip) {
  auto r = sample_request();
  r.max_tokens = 12;
  EXPECT_EQ(request_from_json(request_to_json(r)), r);
}

TEST(ScriptedMock, GlobRulesAndOrder) {
  ScriptedMock mock;
  mock.add_rule(MockRule::glob("判断*", "prefix"));
  mock.add_rule(MockRule::glob("*一致*", "substring"));
  mock.add_rule(MockRule::glob("*", "fallback"));
  EXPECT_EQ(mock.complete(sample_request()).content, "prefix");
  auto r = sample_request();
  r.messages[1].content = "是否一致";
  EXPECT_EQ(mock.complete(r).content, "substring");
  r.messages[1].content = "hello";
  EXPECT_EQ(mock.complete(r).content, "fallback");
  EXPECT_EQ(mock.call_count(), 3u);
  EXPECT_EQ(mock.calls()[0], sample_request());
}

TEST(ScriptedMock, ExactGlobEscapesRegexCharacters) {
  ScriptedMock mock({MockRule::glob("a.b(c)", "hit")});
  auto r = sample_request();
  r.messages[1].content = "a.b(c)";
  EXPECT_EQ(mock.complete(r).content, "hit");
  r.messages[1].content = "axb(c)";
  EXPECT_THROW(mock.complete(r), Error);
}

TEST(ScriptedMock, MissIsTyped) {
  ScriptedMock mock;
  try {
    mock.complete(sample_request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MockMiss);
  }
}

TEST(ScriptedMock, ParsesScriptFile) {
  auto rules = ScriptedMock::parse_script(json::parse(R"({"rules":[
      {"prefix":"判断","contains":["A","一致"],"response":"both"},
      {"regex":"^x+$","target":"last","response":"re"}]})"));
  ScriptedMock mock(rules);
  EXPECT_EQ(mock.complete(sample_request()).content, "both");
  auto r = sample_request();
  r.messages.push_back({Role::Assistant, "xxx"});
  r.messages[1].content = "other";
  EXPECT_EQ(mock.complete(r).content, "re");
  EXPECT_THROW(ScriptedMock::parse_script(json::parse(R"({"rules":[{"prefix":"a"}]})")), Error);
  EXPECT_THROW(ScriptedMock::parse_script(json::parse(R"({"rules":[{"regex":"(","response":"x"}]})")), Error);
}

TEST(ResponseCache, PutGetAndLayout) {
  TempDir dir;
  ResponseCache cache(dir.path());
  auto req = sample_request();
  EXPECT_FALSE(cache.get(req).has_value());
  ChatResponse resp;
  resp.content = "VERDICT: CONSISTENT";
  resp.prompt_tokens = 5;
  resp.completion_tokens = 3;
  cache.put(req, resp);
  const auto key = cache_key(req);
  EXPECT_EQ(cache.path_for(key), dir.path() / key.substr(0, 2) / (key + ".entry"));
  EXPECT_TRUE(std::filesystem::exists(cache.path_for(key)));
  auto hit = cache.get(req);
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->content, resp.content);
  EXPECT_EQ(hit->prompt_tokens, 5u);
}

TEST(ResponseCache, EntryForDifferentRequestIsIgnored) {
  TempDir dir;
  ResponseCache cache(dir.path());
  auto a = sample_request();
  auto b = sample_request();
  b.model = "other";
  ChatResponse resp;
  resp.content = "x";
  cache.put(b, resp);
  // Plant b's entry under a's key: the stored request no longer matches.
  std::filesystem::create_directories(cache.path_for(cache_key(a)).parent_path());
  std::filesystem::copy_file(cache.path_for(cache_key(b)), cache.path_for(cache_key(a)));
  EXPECT_FALSE(cache.get(a).has_value());
}

TEST(CachingBackend, SecondCallIsServedFromCache) {
  TempDir dir;
  auto mock = std::make_shared<ScriptedMock>(std::vector<MockRule>{MockRule::glob("*", "ok")});
  auto cache = std::make_shared<ResponseCache>(dir.path());
  CachingBackend backend(mock, cache);
  auto first = backend.complete(sample_request());
  auto second = backend.complete(sample_request());
  EXPECT_FALSE(first.cache_hit);
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(second.content, "ok");
  EXPECT_EQ(mock->call_count(), 1u);

  ReplayBackend replay(cache);
  EXPECT_EQ(replay.complete(sample_request()).content, "ok");
  auto unseen = sample_request();
  unseen.model = "x";
  try {
    replay.complete(unseen);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CacheMiss);
  }
}

class SlowBackend : public ChatBackend {
 public:
  ChatResponse complete(const ChatRequest&) override {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return ChatResponse{"ok", 0, 0, {}, false};
  }
  [[nodiscard]] std::string name() const override { return "slow"; }
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
};

TEST(BoundedBackend, NeverExceedsLimit) {
  auto inner = std::make_shared<SlowBackend>();
  BoundedBackend bounded(inner, 2);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 3; ++k) bounded.complete(sample_request());
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_LE(inner->peak.load(), 2);
  EXPECT_GE(inner->peak.load(), 1);
}

class FakeTransport : public HttpTransport {
 public:
  HttpResult post_json(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::seconds) override {
    urls.push_back(url);
    bodies.push_back(body);
    last_headers = headers;
    if (script.empty()) return HttpResult{500, "", ""};
    auto r = script.front();
    script.pop_front();
    return r;
  }
  std::deque<HttpResult> script;
  std::vector<std::string> urls;
  std::vector<std::string> bodies;
  std::vector<std::pair<std::string, std::string>> last_headers;
};

const std::string kOkBody =
    R"({"choices":[{"message":{"role":"assistant","content":"VERDICT: CONSISTENT"}}],"usage":{"prompt_tokens":11,"completion_tokens":4}})";

struct RemoteFixture {
  std::shared_ptr<FakeTransport> transport = std::make_shared<FakeTransport>();
  std::vector<std::chrono::milliseconds> sleeps;
  RemoteChatBackend backend() {
    RemoteConfig cfg;
    cfg.endpoint = "http://localhost:9/v1/chat/completions";
    cfg.api_key = "secret";
    return RemoteChatBackend(cfg, transport, [this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }
};

TEST(RemoteBackend, ParsesSuccessAndSendsCredentials) {
  RemoteFixture f;
  f.transport->script.push_back({200, kOkBody, ""});
  auto b = f.backend();
  auto resp = b.complete(sample_request());
  EXPECT_EQ(resp.content, "VERDICT: CONSISTENT");
  EXPECT_EQ(resp.prompt_tokens, 11u);
  EXPECT_EQ(resp.completion_tokens, 4u);
  ASSERT_EQ(f.transport->bodies.size(), 1u);
  auto body = json::parse(f.transport->bodies[0]);
  EXPECT_EQ(body["model"], "gpt-4");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_FALSE(body.contains("max_tokens"));
  EXPECT_EQ(f.transport->last_headers.at(0).second, "Bearer secret");
  EXPECT_TRUE(f.sleeps.empty());
}

TEST(RemoteBackend, RetriesTransientFailuresWithBackoff) {
  RemoteFixture f;
  f.transport->script = {{429, "slow down", ""}, {0, "", "timeout"}, {503, "", ""}, {200, "not json", ""},
                         {200, kOkBody, ""}};
  auto b = f.backend();
  EXPECT_EQ(b.complete(sample_request()).content, "VERDICT: CONSISTENT");
  ASSERT_EQ(f.sleeps.size(), 4u);
  const RetryPolicy policy;
  for (std::size_t i = 0; i < f.sleeps.size(); ++i) {
    const auto nominal = policy.nominal_delay(static_cast<int>(i) + 1).count();
    EXPECT_GE(f.sleeps[i].count(), static_cast<long long>(nominal * 0.8) - 1);
    EXPECT_LE(f.sleeps[i].count(), static_cast<long long>(nominal * 1.2) + 1);
  }
  EXPECT_EQ(policy.nominal_delay(1).count(), 1000);
  EXPECT_EQ(policy.nominal_delay(3).count(), 4000);
}

TEST(RemoteBackend, GivesUpAfterMaxAttempts) {
  RemoteFixture f;
  auto b = f.backend();
  try {
    b.complete(sample_request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ExhaustedRetries);
  }
  EXPECT_EQ(f.transport->bodies.size(), 5u);
}

TEST(RemoteBackend, NonRetryableStatuses) {
  auto expect_code = [](HttpResult r, ErrorCode code) {
    RemoteFixture f;
    f.transport->script.push_back(r);
    auto b = f.backend();
    try {
      b.complete(sample_request());
      ADD_FAILURE() << "no error for status " << r.status;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << r.status;
    }
    EXPECT_EQ(f.transport->bodies.size(), 1u);
  };
  expect_code({401, "bad key", ""}, ErrorCode::Authentication);
  expect_code({403, "", ""}, ErrorCode::Authentication);
  expect_code({413, "", ""}, ErrorCode::RequestTooLarge);
  expect_code({400, R"({"error":{"code":"context_length_exceeded"}})", ""}, ErrorCode::RequestTooLarge);
  expect_code({404, "no such model", ""}, ErrorCode::BackendRequest);
}

TEST(MakeBackend, RemoteWithoutKeyIsAuthenticationError) {
  BackendConfig cfg;
  cfg.kind = BackendKind::RemoteChatApi;
  cfg.api_key_env = "RAGFCE_TEST_KEY_THAT_IS_NOT_SET";
  try {
    make_backend(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Authentication);
  }
}

TEST(MakeBackend, MockFromScript) {
  TempDir dir;
  testing::write_file(dir / "m.json", R"({"rules":[{"match":"*","response":"hi"}]})");
  BackendConfig cfg;
  cfg.kind = BackendKind::ScriptedMock;
  cfg.mock_script = dir / "m.json";
  EXPECT_EQ(make_backend(cfg)->complete(sample_request()).content, "hi");
}

}  // namespace
}  // namespace ragfce
