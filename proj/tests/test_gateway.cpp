#include <doctest.h>

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "helpers.hpp"
#include "winnow/gateway.hpp"

using namespace winnow;
using winnow::testing::CallbackBackend;
using winnow::testing::TempDir;

namespace {

GenerationRequest simple_request(const std::string& prompt) {
  GenerationRequest request;
  request.system_prompt = "system";
  request.user_prompt = prompt;
  request.max_tokens = 64;
  request.temperature = 0.0;
  return request;
}

}  // namespace

TEST_CASE("request_key is stable and sensitive to every field") {
  GenerationRequest a = simple_request("hello");
  GenerationRequest b = simple_request("hello");
  CHECK(a.request_key("m") == b.request_key("m"));
  CHECK(a.request_key("m") != a.request_key("m2"));
  b.user_prompt = "hello!";
  CHECK(a.request_key("m") != b.request_key("m"));
  b = simple_request("hello");
  b.max_tokens = 65;
  CHECK(a.request_key("m") != b.request_key("m"));
  b = simple_request("hello");
  b.temperature = 0.5;
  CHECK(a.request_key("m") != b.request_key("m"));
}

TEST_CASE("mock_oracle_score_text normalizes judged levels") {
  JudgmentSet judgments;
  judgments.add({"q1", "d1", 3});
  judgments.add({"q1", "d2", 0});
  judgments.add({"q2", "d9", 1});  // max level overall = 3

  const std::string text =
      mock_oracle_score_text("q1", {"d1", "d2", "dunjudged"}, judgments, 0.0, 1);
  CHECK(text.find("Passage [1]: 1.000") != std::string::npos);
  CHECK(text.find("Passage [2]: 0.000") != std::string::npos);
  CHECK(text.find("Passage [3]: 0.000") != std::string::npos);
}

TEST_CASE("mock oracle noise is deterministic in the seed and clamped") {
  JudgmentSet judgments;
  judgments.add({"q1", "d1", 3});
  judgments.add({"q1", "d2", 1});
  const std::string a = mock_oracle_score_text("q1", {"d1", "d2"}, judgments, 0.4, 9);
  const std::string b = mock_oracle_score_text("q1", {"d1", "d2"}, judgments, 0.4, 9);
  const std::string c = mock_oracle_score_text("q1", {"d1", "d2"}, judgments, 0.4, 10);
  CHECK(a == b);
  CHECK(a != c);
  CHECK_THROWS_AS(mock_oracle_score_text("q1", {"d1"}, judgments, 0.9, 1), Error);
}

TEST_CASE("gateway cache: second identical request is a hit with identical text") {
  TempDir dir("cache");
  auto backend = std::make_shared<CallbackBackend>(
      [](const GenerationRequest&) { return "answer one"; });
  BackendConfig config;
  config.kind = BackendKind::mock_scripted;
  config.model_name = "test-model";
  config.cache_dir = dir.path / "cache";
  Gateway gateway(backend, config);

  GenerationRequest request = simple_request("what is recall?");
  GenerationResponse first = gateway.generate(request);
  GenerationResponse second = gateway.generate(request);
  CHECK(!first.from_cache);
  CHECK(second.from_cache);
  CHECK(first.text == second.text);
  CHECK(backend->calls() == 1);
  CHECK(gateway.stats().cache_hits == 1);
  CHECK(gateway.stats().backend_calls == 1);

  // A fresh gateway over the same directory still hits.
  Gateway warm(backend, config);
  CHECK(warm.generate(request).from_cache);
  CHECK(backend->calls() == 1);
}

TEST_CASE("mock backends synthesize locally with non-negative latency") {
  JudgmentSet judgments;
  judgments.add({"q1", "d1", 2});
  BackendConfig config;
  config.kind = BackendKind::mock_oracle;
  Gateway gateway(std::make_shared<MockOracleBackend>(judgments, 0.0, 0), config);

  GenerationRequest request = simple_request("score these");
  RequestContext context;
  context.query_id = "q1";
  context.passage_ids = {"d1"};
  request.context = context;

  GenerationResponse response = gateway.generate(request);
  CHECK(response.backend_id == "mock-oracle");
  CHECK(response.latency_ms >= 0);
  CHECK(response.text.find("Passage [1]: 1.000") != std::string::npos);
}

TEST_CASE("transport failure surfaces after max_retries+1 attempts") {
  BackendConfig config;
  config.kind = BackendKind::http_chat;
  config.endpoint_url = "http://127.0.0.1:9";  // discard port; nothing listens
  config.max_retries = 2;
  config.timeout_s = 1.0;
  Gateway gateway(std::make_shared<HttpChatBackend>(config.endpoint_url, "m", 1.0, ""),
                  config);
  try {
    gateway.generate(simple_request("hello"));
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("after 3 attempts") != std::string::npos);
  }
  CHECK(gateway.stats().backend_calls == 3);
  CHECK(gateway.stats().retries == 2);
}

TEST_CASE("http_chat backend speaks the chat-completions shape") {
  httplib::Server server;
  std::string seen_auth;
  nlohmann::json seen_body;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                seen_auth = req.get_header_value("Authorization");
                seen_body = nlohmann::json::parse(req.body);
                nlohmann::json reply = {
                    {"choices",
                     {{{"message", {{"role", "assistant"}, {"content", "Passage [1]: 0.9"}}}}}}};
                res.set_content(reply.dump(), "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpChatBackend backend("http://127.0.0.1:" + std::to_string(port), "mixtral-test", 5.0,
                          "secret-token");
  const std::string text = backend.complete(simple_request("rank me"));
  CHECK(text == "Passage [1]: 0.9");
  CHECK(seen_auth == "Bearer secret-token");
  CHECK(seen_body.at("model") == "mixtral-test");
  CHECK(seen_body.at("messages").size() == 2);
  CHECK(seen_body.at("messages")[0].at("role") == "system");
  CHECK(seen_body.at("messages")[1].at("content") == "rank me");
  CHECK(seen_body.at("temperature") == 0.0);

  server.stop();
  server_thread.join();
}

TEST_CASE("non-success wire status becomes BackendError with the status") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    hits.fetch_add(1);
    res.status = 400;
    res.set_content("bad request body", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendConfig config;
  config.kind = BackendKind::http_chat;
  config.max_retries = 3;
  Gateway gateway(std::make_shared<HttpChatBackend>(
                      "http://127.0.0.1:" + std::to_string(port), "m", 5.0, ""),
                  config);
  try {
    gateway.generate(simple_request("x"));
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status == 400);
    CHECK(std::string(e.what()).find("bad request") != std::string::npos);
  }
  CHECK(hits.load() == 1);  // 4xx other than 429 is not retried

  server.stop();
  server_thread.join();
}

TEST_CASE("5xx statuses are retried") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (hits.fetch_add(1) == 0) {
      res.status = 503;
      res.set_content("overloaded", "text/plain");
    } else {
      res.set_content(R"({"choices":[{"message":{"content":"ok now"}}]})",
                      "application/json");
    }
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendConfig config;
  config.kind = BackendKind::http_chat;
  config.max_retries = 2;
  Gateway gateway(std::make_shared<HttpChatBackend>(
                      "http://127.0.0.1:" + std::to_string(port), "m", 5.0, ""),
                  config);
  CHECK(gateway.generate(simple_request("x")).text == "ok now");
  CHECK(hits.load() == 2);

  server.stop();
  server_thread.join();
}

TEST_CASE("scripted backend matches rules then falls back to the default") {
  MockScriptedBackend backend;
  backend.add_rule("apple", "fruit ranking");
  backend.set_default("no idea");
  CHECK(backend.complete(simple_request("rank the apple passages")) == "fruit ranking");
  CHECK(backend.complete(simple_request("rank the cats")) == "no idea");
}
