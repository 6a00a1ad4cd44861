#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "winnow/core.hpp"

namespace winnow {

// Pipeline-side identifiers for the items referenced by a prompt, in label
// order [1]..[k]. Never sent over the wire; mock backends use it to look up
// ground truth and audit logs use it to attribute responses.
struct RequestContext {
  enum class Task { score, rank };
  std::string query_id;
  std::vector<std::string> passage_ids;
  Task task = Task::score;
};

struct GenerationRequest {
  std::string system_prompt;
  std::string user_prompt;
  int max_tokens = 1024;
  double temperature = 0.0;
  std::optional<RequestContext> context;

  // Stable content hash over (model_name, prompts, max_tokens, temperature).
  // The context is excluded: it is derivable from the prompt text.
  std::string request_key(const std::string& model_name) const;
};

struct GenerationResponse {
  std::string text;
  std::string backend_id;
  bool from_cache = false;
  std::int64_t latency_ms = 0;
};

// A text-generation backend able to answer one request. Implementations throw
// TransportError for network-level failures and BackendError for non-success
// wire statuses; the Gateway owns retries and caching.
class TextBackend {
 public:
  virtual ~TextBackend() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const GenerationRequest& request) = 0;
};

enum class BackendKind { http_chat, mock_oracle, mock_scripted };

struct BackendConfig {
  BackendKind kind = BackendKind::http_chat;
  // http_chat: base URL of an OpenAI-compatible server, e.g.
  // "http://localhost:8080"; "/v1/chat/completions" is appended unless the
  // URL already names a chat-completions path.
  std::string endpoint_url;
  std::string model_name = "mixtral-8x7b-instruct";
  double timeout_s = 120.0;
  int max_retries = 2;
  std::optional<std::filesystem::path> cache_dir;
  // Environment variable holding the bearer token (empty value = no auth).
  std::string api_key_env = "WINNOW_API_KEY";
  // mock_oracle
  double oracle_noise = 0.0;
  std::uint64_t oracle_seed = 0;
  // mock_scripted
  std::filesystem::path script_path;
};

// Emits text in the exact shape the score parser expects: one
// "Passage [i]: <value>" line per passage. Judged pairs get
// clamp(level / max_level + uniform(-noise, noise), 0, 1); unjudged pairs get
// 0. Deterministic in (seed, query_id, passage_id), independent of call order.
std::string mock_oracle_score_text(const std::string& query_id,
                                   const std::vector<std::string>& passage_ids,
                                   const JudgmentSet& judgments, double noise,
                                   std::uint64_t seed);

// Chat-completions client for any OpenAI-compatible server.
class HttpChatBackend : public TextBackend {
 public:
  HttpChatBackend(std::string endpoint_url, std::string model_name, double timeout_s,
                  std::string bearer_token);
  std::string id() const override { return "http:" + model_name_; }
  std::string complete(const GenerationRequest& request) override;

 private:
  std::string endpoint_url_;
  std::string model_name_;
  double timeout_s_;
  std::string bearer_token_;
};

// Deterministic test double that answers from a JudgmentSet: scoring prompts
// get oracle score lines, ranking prompts get labels ordered by judged level
// (descending, stable). Requests must carry a RequestContext.
class MockOracleBackend : public TextBackend {
 public:
  MockOracleBackend(JudgmentSet judgments, double noise, std::uint64_t seed);
  std::string id() const override { return "mock-oracle"; }
  std::string complete(const GenerationRequest& request) override;

 private:
  JudgmentSet judgments_;
  double noise_;
  std::uint64_t seed_;
};

// Canned responses: the first rule whose needle occurs in the user prompt
// wins, otherwise the default response is returned.
class MockScriptedBackend : public TextBackend {
 public:
  MockScriptedBackend() = default;
  std::string id() const override { return "mock-scripted"; }
  std::string complete(const GenerationRequest& request) override;

  void add_rule(std::string needle, std::string response);
  void set_default(std::string response) { default_response_ = std::move(response); }

  // JSON file: {"default": "...", "rules": [{"contains": "...", "response": "..."}]}
  static std::shared_ptr<MockScriptedBackend> from_file(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> rules_;
  std::string default_response_;
};

// oracle_judgments is required for mock_oracle and ignored otherwise.
std::shared_ptr<TextBackend> make_backend(const BackendConfig& config,
                                          const JudgmentSet* oracle_judgments = nullptr);

struct GatewayStats {
  std::uint64_t requests = 0;       // generate() invocations
  std::uint64_t backend_calls = 0;  // completions that reached the backend
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;        // extra attempts beyond the first
};

// Adds persistent response caching and retry on top of a TextBackend.
// Safe for concurrent generate() calls; cache writes are atomic
// (temp file + rename) and serialized.
class Gateway {
 public:
  Gateway(std::shared_ptr<TextBackend> backend, BackendConfig config);

  GenerationResponse generate(const GenerationRequest& request);

  const BackendConfig& config() const { return config_; }
  TextBackend& backend() { return *backend_; }
  GatewayStats stats() const;
  void reset_stats();

 private:
  std::optional<std::string> cache_lookup(const std::string& key) const;
  void cache_store(const std::string& key, const std::string& text);

  std::shared_ptr<TextBackend> backend_;
  BackendConfig config_;
  mutable std::mutex cache_mutex_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> backend_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> retries_{0};
};

}  // namespace winnow
