#include "winnow/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "winnow/log.hpp"
#include "winnow/util.hpp"

namespace winnow {

namespace {

using nlohmann::json;

void hash_field(std::uint64_t& state, std::string_view field) {
  state = fnv1a64(std::to_string(field.size()) + ":", state);
  state = fnv1a64(field, state);
}

std::string body_excerpt(const std::string& body) {
  constexpr std::size_t limit = 200;
  if (body.size() <= limit) return body;
  return body.substr(0, limit) + "...";
}

// Uniform double in [0,1) from the top 53 bits of the engine output.
double canonical_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

std::uint64_t pair_seed(std::uint64_t seed, const std::string& query_id,
                        const std::string& passage_id) {
  std::uint64_t state = fnv1a64(std::to_string(seed));
  hash_field(state, query_id);
  hash_field(state, passage_id);
  return state;
}

}  // namespace

std::string GenerationRequest::request_key(const std::string& model_name) const {
  std::uint64_t state = 0xcbf29ce484222325ull;
  hash_field(state, model_name);
  hash_field(state, system_prompt);
  hash_field(state, user_prompt);
  hash_field(state, std::to_string(max_tokens));
  hash_field(state, format_fixed(temperature, 6));
  return to_hex(state);
}

std::string mock_oracle_score_text(const std::string& query_id,
                                   const std::vector<std::string>& passage_ids,
                                   const JudgmentSet& judgments, double noise,
                                   std::uint64_t seed) {
  if (noise < 0.0 || noise > 0.5) throw Error("oracle noise must lie in [0, 0.5]");
  const int max_level = std::max(1, judgments.max_level());
  std::ostringstream out;
  out << "Relevance assessment:\n";
  for (std::size_t i = 0; i < passage_ids.size(); ++i) {
    double value = 0.0;
    if (auto level = judgments.level(query_id, passage_ids[i])) {
      value = static_cast<double>(*level) / static_cast<double>(max_level);
      if (noise > 0.0) {
        std::mt19937_64 rng(pair_seed(seed, query_id, passage_ids[i]));
        value += (2.0 * canonical_unit(rng) - 1.0) * noise;
      }
    }
    value = std::clamp(value, 0.0, 1.0);
    out << "Passage [" << (i + 1) << "]: " << format_fixed(value, 3) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// HttpChatBackend
// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(std::string endpoint_url, std::string model_name,
                                 double timeout_s, std::string bearer_token)
    : endpoint_url_(std::move(endpoint_url)),
      model_name_(std::move(model_name)),
      timeout_s_(timeout_s),
      bearer_token_(std::move(bearer_token)) {
  if (endpoint_url_.empty()) throw Error("http_chat backend needs an endpoint URL");
}

std::string HttpChatBackend::complete(const GenerationRequest& request) {
  std::string base = endpoint_url_;
  std::string path;
  auto scheme_end = base.find("://");
  auto path_start = base.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start != std::string::npos) {
    path = base.substr(path_start);
    base = base.substr(0, path_start);
  }
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (path.find("/chat/completions") == std::string::npos) {
    if (path.size() >= 3 && path.compare(path.size() - 3, 3, "/v1") == 0) {
      path += "/chat/completions";
    } else {
      path += "/v1/chat/completions";
    }
  }

  httplib::Client client(base);
  const auto timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s_ * 1000));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!bearer_token_.empty()) {
    headers.emplace("Authorization", "Bearer " + bearer_token_);
  }

  json messages = json::array();
  if (!request.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  json body = {{"model", model_name_},
               {"messages", std::move(messages)},
               {"max_tokens", request.max_tokens},
               {"temperature", request.temperature}};

  auto result = client.Post(path, headers, body.dump(), "application/json");
  if (!result) {
    throw TransportError("POST " + base + path + " failed: " +
                         httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw BackendError(result->status, body_excerpt(result->body));
  }

  json payload;
  try {
    payload = json::parse(result->body);
  } catch (const json::exception& e) {
    throw Error("malformed chat-completions response: " + std::string(e.what()));
  }
  if (!payload.contains("choices") || !payload.at("choices").is_array() ||
      payload.at("choices").empty()) {
    throw Error("chat-completions response has no choices: " + body_excerpt(result->body));
  }
  const json& first = payload.at("choices").at(0);
  if (!first.contains("message") || !first.at("message").contains("content") ||
      !first.at("message").at("content").is_string()) {
    throw Error("chat-completions choice has no message content: " +
                body_excerpt(result->body));
  }
  return first.at("message").at("content").get<std::string>();
}

// ---------------------------------------------------------------------------
// MockOracleBackend
// ---------------------------------------------------------------------------

MockOracleBackend::MockOracleBackend(JudgmentSet judgments, double noise,
                                     std::uint64_t seed)
    : judgments_(std::move(judgments)), noise_(noise), seed_(seed) {
  if (noise_ < 0.0 || noise_ > 0.5) throw Error("oracle noise must lie in [0, 0.5]");
}

std::string MockOracleBackend::complete(const GenerationRequest& request) {
  if (!request.context) {
    throw Error("mock oracle backend requires a request context");
  }
  const RequestContext& ctx = *request.context;
  if (ctx.task == RequestContext::Task::score) {
    return mock_oracle_score_text(ctx.query_id, ctx.passage_ids, judgments_, noise_, seed_);
  }

  // Ranking: order window labels by judged level, descending; stable so
  // unjudged and equal-level passages keep their current order.
  std::vector<std::size_t> labels(ctx.passage_ids.size());
  std::iota(labels.begin(), labels.end(), 0);
  std::stable_sort(labels.begin(), labels.end(), [&](std::size_t a, std::size_t b) {
    int la = judgments_.level(ctx.query_id, ctx.passage_ids[a]).value_or(0);
    int lb = judgments_.level(ctx.query_id, ctx.passage_ids[b]).value_or(0);
    return la > lb;
  });
  std::ostringstream out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out << " > ";
    out << '[' << (labels[i] + 1) << ']';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// MockScriptedBackend
// ---------------------------------------------------------------------------

void MockScriptedBackend::add_rule(std::string needle, std::string response) {
  rules_.emplace_back(std::move(needle), std::move(response));
}

std::string MockScriptedBackend::complete(const GenerationRequest& request) {
  for (const auto& [needle, response] : rules_) {
    if (request.user_prompt.find(needle) != std::string::npos) return response;
  }
  return default_response_;
}

std::shared_ptr<MockScriptedBackend> MockScriptedBackend::from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open script file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error("bad script file " + path.string() + ": " + e.what());
  }
  auto backend = std::make_shared<MockScriptedBackend>();
  if (doc.contains("default")) backend->set_default(doc.at("default").get<std::string>());
  if (doc.contains("rules")) {
    for (const auto& rule : doc.at("rules")) {
      backend->add_rule(rule.at("contains").get<std::string>(),
                        rule.at("response").get<std::string>());
    }
  }
  return backend;
}

std::shared_ptr<TextBackend> make_backend(const BackendConfig& config,
                                          const JudgmentSet* oracle_judgments) {
  switch (config.kind) {
    case BackendKind::http_chat: {
      std::string token;
      if (!config.api_key_env.empty()) {
        if (const char* value = std::getenv(config.api_key_env.c_str())) token = value;
      }
      return std::make_shared<HttpChatBackend>(config.endpoint_url, config.model_name,
                                               config.timeout_s, std::move(token));
    }
    case BackendKind::mock_oracle: {
      if (!oracle_judgments) {
        throw Error("mock_oracle backend requires judgments (qrels)");
      }
      return std::make_shared<MockOracleBackend>(*oracle_judgments, config.oracle_noise,
                                                 config.oracle_seed);
    }
    case BackendKind::mock_scripted:
      return MockScriptedBackend::from_file(config.script_path);
  }
  throw Error("unknown backend kind");
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<TextBackend> backend, BackendConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  if (!backend_) throw Error("gateway needs a backend");
  if (config_.max_retries < 0) throw Error("max_retries must be >= 0");
  if (config_.cache_dir) std::filesystem::create_directories(*config_.cache_dir);
}

std::optional<std::string> Gateway::cache_lookup(const std::string& key) const {
  if (!config_.cache_dir) return std::nullopt;
  const auto path = *config_.cache_dir / (key + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream content;
  content << in.rdbuf();
  return content.str();
}

void Gateway::cache_store(const std::string& key, const std::string& text) {
  if (!config_.cache_dir) return;
  std::lock_guard<std::mutex> lock(cache_mutex_);
  const auto final_path = *config_.cache_dir / (key + ".txt");
  const auto tmp_path = *config_.cache_dir / (key + ".tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.good()) throw Error("cache write failed for " + final_path.string());
  }
  std::filesystem::rename(tmp_path, final_path);
}

GenerationResponse Gateway::generate(const GenerationRequest& request) {
  const auto started = std::chrono::steady_clock::now();
  auto elapsed_ms = [&started]() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - started)
        .count();
  };

  requests_.fetch_add(1);
  const std::string key = request.request_key(config_.model_name);

  if (auto cached = cache_lookup(key)) {
    cache_hits_.fetch_add(1);
    return GenerationResponse{std::move(*cached), backend_->id(), true, elapsed_ms()};
  }

  const int attempts = config_.max_retries + 1;
  for (int attempt = 1;; ++attempt) {
    try {
      backend_calls_.fetch_add(1);
      std::string text = backend_->complete(request);
      cache_store(key, text);
      return GenerationResponse{std::move(text), backend_->id(), false, elapsed_ms()};
    } catch (const TransportError& e) {
      if (attempt >= attempts) {
        throw TransportError(std::string(e.what()) + " (after " +
                             std::to_string(attempt) + " attempts)");
      }
    } catch (const BackendError& e) {
      const bool retryable = e.status == 429 || e.status >= 500;
      if (!retryable || attempt >= attempts) throw;
    }
    retries_.fetch_add(1);
    std::this_thread::sleep_for(std::chrono::milliseconds(20 * attempt));
  }
}

GatewayStats Gateway::stats() const {
  return GatewayStats{requests_.load(), backend_calls_.load(), cache_hits_.load(),
                      retries_.load()};
}

void Gateway::reset_stats() {
  requests_.store(0);
  backend_calls_.store(0);
  cache_hits_.store(0);
  retries_.store(0);
}

}  // namespace winnow
