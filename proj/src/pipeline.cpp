#include "winnow/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "winnow/log.hpp"
#include "winnow/prefilter.hpp"
#include "winnow/trec_io.hpp"
#include "winnow/util.hpp"

namespace winnow {

namespace {

using nlohmann::json;

// Index-based work distribution; the first failure wins and stops the pool.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int thread_count = std::min<int>(workers, static_cast<int>(count));
  pool.reserve(static_cast<std::size_t>(thread_count));
  for (int i = 0; i < thread_count; ++i) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

json read_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(std::string("missing ") + what + " " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error("bad " + std::string(what) + " " + path.string() + ": " + e.what());
  }
  return doc;
}

StageArtifact make_artifact(std::string stage, std::filesystem::path path) {
  std::string hash = hash_file(path);
  return StageArtifact{std::move(stage), std::move(path), std::move(hash)};
}

const Query& query_for(const QuerySet& queries, const std::string& query_id,
                       const std::filesystem::path& queries_path) {
  auto it = queries.find(query_id);
  if (it == queries.end()) {
    throw Error("no query text for " + query_id + " in " + queries_path.string());
  }
  return it->second;
}

json threshold_spec_json(const ThresholdSpec& spec) {
  json doc;
  if (spec.mode == ThresholdSpec::Mode::fixed) {
    doc["mode"] = "fixed";
    doc["value"] = spec.fixed_value;
  } else {
    doc["mode"] = "calibrate";
    doc["fraction"] = spec.fraction;
    doc["seed"] = spec.seed;
    doc["search"] = spec.search.mode == ThresholdSearch::Mode::grid ? "grid" : "hill_climb";
    doc["step"] = spec.search.step;
    doc["start"] = spec.search.start;
  }
  return doc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

std::string PipelineConfig::to_json() const {
  json backend_json = {{"model_name", backend.model_name},
                       {"timeout_s", backend.timeout_s},
                       {"max_retries", backend.max_retries}};
  switch (backend.kind) {
    case BackendKind::http_chat:
      backend_json["kind"] = "http_chat";
      backend_json["endpoint_url"] = backend.endpoint_url;
      backend_json["api_key_env"] = backend.api_key_env;
      break;
    case BackendKind::mock_oracle:
      backend_json["kind"] = "mock_oracle";
      backend_json["oracle_noise"] = backend.oracle_noise;
      backend_json["oracle_seed"] = backend.oracle_seed;
      break;
    case BackendKind::mock_scripted:
      backend_json["kind"] = "mock_scripted";
      backend_json["script_path"] = backend.script_path.string();
      break;
  }
  if (backend.cache_dir) backend_json["cache_dir"] = backend.cache_dir->string();

  json doc = {
      {"corpus", corpus_path.string()},
      {"queries", queries_path.string()},
      {"run", run_path.string()},
      {"qrels", qrels_path.string()},
      {"output_dir", output_dir.string()},
      {"policy", {{"min_relevant_level", policy.min_relevant_level}}},
      {"backend", std::move(backend_json)},
      {"scoring",
       {{"chunk_size", scoring.chunk_size},
        {"passage_word_budget", scoring.passage_word_budget},
        {"max_tokens", scoring.max_tokens},
        {"temperature", scoring.temperature},
        {"system_prompt", scoring.system_prompt},
        {"instruction_text", scoring.instruction_text},
        {"output_format_clause", scoring.output_format_clause}}},
      {"window",
       {{"window_size", window.window_size},
        {"step_size", window.step_size},
        {"passes", window.passes},
        {"passage_word_budget", window.passage_word_budget},
        {"max_tokens", window.max_tokens},
        {"temperature", window.temperature}}},
      {"threshold", threshold_spec_json(threshold)},
      {"discard_mode", discard_mode == DiscardMode::append ? "append" : "drop"},
      {"fallback_mode", fallback_mode == FallbackMode::retain ? "retain" : "strict"},
      {"top_n", top_n},
      {"retry_budget", retry_budget},
      {"workers", workers},
      {"ndcg_k", ndcg_k},
      {"run_tag", run_tag},
      {"store_raw_responses", store_raw_responses}};
  return doc.dump(2) + "\n";
}

PipelineConfig load_config(const std::filesystem::path& path) {
  json doc = read_json_file(path, "config file");
  if (!doc.is_object()) throw Error("config file " + path.string() + " is not an object");

  static const std::set<std::string> known = {
      "corpus",       "queries",      "run",         "qrels",       "output_dir",
      "policy",       "backend",      "scoring",     "window",      "threshold",
      "discard_mode", "fallback_mode", "top_n",      "retry_budget", "workers",
      "ndcg_k",       "run_tag",      "store_raw_responses"};
  for (const auto& item : doc.items()) {
    if (!known.count(item.key())) {
      logging::warn("config key '" + item.key() + "' is not recognized; ignored");
    }
  }

  PipelineConfig config;
  auto path_of = [&](const char* key, std::filesystem::path& out) {
    if (doc.contains(key)) out = doc.at(key).get<std::string>();
  };
  path_of("corpus", config.corpus_path);
  path_of("queries", config.queries_path);
  path_of("run", config.run_path);
  path_of("qrels", config.qrels_path);
  path_of("output_dir", config.output_dir);

  if (doc.contains("policy")) {
    config.policy.min_relevant_level =
        doc.at("policy").value("min_relevant_level", config.policy.min_relevant_level);
  }
  if (doc.contains("backend")) {
    const json& b = doc.at("backend");
    const std::string kind = b.value("kind", "http_chat");
    if (kind == "http_chat") config.backend.kind = BackendKind::http_chat;
    else if (kind == "mock_oracle") config.backend.kind = BackendKind::mock_oracle;
    else if (kind == "mock_scripted") config.backend.kind = BackendKind::mock_scripted;
    else throw Error("unknown backend kind '" + kind + "'");
    config.backend.endpoint_url = b.value("endpoint_url", config.backend.endpoint_url);
    config.backend.model_name = b.value("model_name", config.backend.model_name);
    config.backend.timeout_s = b.value("timeout_s", config.backend.timeout_s);
    config.backend.max_retries = b.value("max_retries", config.backend.max_retries);
    config.backend.api_key_env = b.value("api_key_env", config.backend.api_key_env);
    config.backend.oracle_noise = b.value("oracle_noise", config.backend.oracle_noise);
    config.backend.oracle_seed = b.value("oracle_seed", config.backend.oracle_seed);
    if (b.contains("script_path")) {
      config.backend.script_path = b.at("script_path").get<std::string>();
    }
    if (b.contains("cache_dir")) {
      config.backend.cache_dir = std::filesystem::path(b.at("cache_dir").get<std::string>());
    }
  }
  if (doc.contains("scoring")) {
    const json& s = doc.at("scoring");
    config.scoring.chunk_size = s.value("chunk_size", config.scoring.chunk_size);
    config.scoring.passage_word_budget =
        s.value("passage_word_budget", config.scoring.passage_word_budget);
    config.scoring.max_tokens = s.value("max_tokens", config.scoring.max_tokens);
    config.scoring.temperature = s.value("temperature", config.scoring.temperature);
    config.scoring.system_prompt = s.value("system_prompt", config.scoring.system_prompt);
    config.scoring.instruction_text =
        s.value("instruction_text", config.scoring.instruction_text);
    config.scoring.output_format_clause =
        s.value("output_format_clause", config.scoring.output_format_clause);
  }
  if (doc.contains("window")) {
    const json& w = doc.at("window");
    config.window.window_size = w.value("window_size", config.window.window_size);
    config.window.step_size = w.value("step_size", config.window.step_size);
    config.window.passes = w.value("passes", config.window.passes);
    config.window.passage_word_budget =
        w.value("passage_word_budget", config.window.passage_word_budget);
    config.window.max_tokens = w.value("max_tokens", config.window.max_tokens);
    config.window.temperature = w.value("temperature", config.window.temperature);
  }
  if (doc.contains("threshold")) {
    const json& t = doc.at("threshold");
    const std::string mode = t.value("mode", "fixed");
    if (mode == "fixed") {
      config.threshold.mode = ThresholdSpec::Mode::fixed;
      config.threshold.fixed_value = t.value("value", config.threshold.fixed_value);
    } else if (mode == "calibrate") {
      config.threshold.mode = ThresholdSpec::Mode::calibrate;
      config.threshold.fraction = t.value("fraction", config.threshold.fraction);
      config.threshold.seed = t.value("seed", config.threshold.seed);
      const std::string search = t.value("search", "grid");
      if (search == "grid") config.threshold.search.mode = ThresholdSearch::Mode::grid;
      else if (search == "hill_climb") config.threshold.search.mode = ThresholdSearch::Mode::hill_climb;
      else throw Error("unknown threshold search '" + search + "'");
      config.threshold.search.step = t.value("step", config.threshold.search.step);
      config.threshold.search.start = t.value("start", config.threshold.search.start);
    } else {
      throw Error("unknown threshold mode '" + mode + "'");
    }
  }
  if (doc.contains("discard_mode")) {
    const std::string mode = doc.at("discard_mode").get<std::string>();
    if (mode == "append") config.discard_mode = DiscardMode::append;
    else if (mode == "drop") config.discard_mode = DiscardMode::drop;
    else throw Error("unknown discard_mode '" + mode + "'");
  }
  if (doc.contains("fallback_mode")) {
    const std::string mode = doc.at("fallback_mode").get<std::string>();
    if (mode == "retain") config.fallback_mode = FallbackMode::retain;
    else if (mode == "strict") config.fallback_mode = FallbackMode::strict;
    else throw Error("unknown fallback_mode '" + mode + "'");
  }
  config.top_n = doc.value("top_n", config.top_n);
  config.retry_budget = doc.value("retry_budget", config.retry_budget);
  config.workers = doc.value("workers", config.workers);
  config.ndcg_k = doc.value("ndcg_k", config.ndcg_k);
  config.run_tag = doc.value("run_tag", config.run_tag);
  config.store_raw_responses = doc.value("store_raw_responses", config.store_raw_responses);
  return config;
}

// ---------------------------------------------------------------------------
// Artifact helpers
// ---------------------------------------------------------------------------

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot hash missing file " + path.string());
  std::ostringstream content;
  content << in.rdbuf();
  return to_hex(fnv1a64(content.str()));
}

void write_scores_jsonl(const ScoresByQuery& scores, const std::filesystem::path& path,
                        bool include_raw) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [query_id, per_query] : scores) {
    for (const auto& [passage_id, score] : per_query) {
      json line = {{"query_id", score.query_id},
                   {"passage_id", score.passage_id},
                   {"value", score.value},
                   {"fallback", score.fallback}};
      if (include_raw && score.raw_response) line["raw_response"] = *score.raw_response;
      out << line.dump() << '\n';
    }
  }
  if (!out.good()) throw Error("write failed for " + path.string());
}

ScoresByQuery read_scores_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("missing scores artifact " + path.string() + "; run the score stage first");
  }
  ScoresByQuery scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    RelevanceScore score;
    try {
      score.query_id = doc.at("query_id").get<std::string>();
      score.passage_id = doc.at("passage_id").get<std::string>();
      score.value = doc.at("value").get<double>();
      score.fallback = doc.value("fallback", false);
      if (doc.contains("raw_response")) {
        score.raw_response = doc.at("raw_response").get<std::string>();
      }
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    if (score.value < 0.0 || score.value > 1.0) {
      throw ParseError(path.string(), line_no, "score outside [0,1]");
    }
    scores[score.query_id][score.passage_id] = std::move(score);
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

Gateway make_gateway(const PipelineConfig& config) {
  if (config.backend.kind == BackendKind::mock_oracle) {
    JudgmentSet qrels = trec_io::read_qrels(config.qrels_path);
    return Gateway(make_backend(config.backend, &qrels), config.backend);
  }
  return Gateway(make_backend(config.backend), config.backend);
}

Threshold resolve_threshold(const PipelineConfig& config) {
  if (config.threshold.mode == ThresholdSpec::Mode::fixed) {
    const double value = config.threshold.fixed_value;
    if (value < 0.0 || value > 1.0) throw Error("fixed threshold must lie in [0,1]");
    return Threshold{value};
  }
  json doc = read_json_file(config.calibration_path(),
                            "calibration artifact (run the calibrate stage first):");
  return Threshold{doc.at("selected").at("threshold").get<double>()};
}

StageArtifact score_stage(const PipelineConfig& config, Gateway& gateway,
                          std::map<std::string, int>* calls_per_query) {
  const Corpus corpus = trec_io::read_corpus(config.corpus_path);
  const QuerySet queries = trec_io::read_queries(config.queries_path);
  const RunMap run = trec_io::read_run(config.run_path);

  std::vector<const RankedList*> lists;
  lists.reserve(run.size());
  for (const auto& [query_id, list] : run) lists.push_back(&list);

  std::vector<ScoringResult> results(lists.size());
  parallel_for(lists.size(), config.workers, [&](std::size_t i) {
    const RankedList& list = *lists[i];
    const Query& query = query_for(queries, list.query_id(), config.queries_path);
    results[i] = score_ranked_list(query, list.head(static_cast<std::size_t>(config.top_n)),
                                   corpus, config.scoring, gateway, config.retry_budget,
                                   /*fallback_value=*/0.0);
  });

  ScoresByQuery scores;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    if (calls_per_query) (*calls_per_query)[lists[i]->query_id()] = results[i].llm_calls;
    scores.emplace(lists[i]->query_id(), std::move(results[i].scores));
  }
  write_scores_jsonl(scores, config.scores_path(), config.store_raw_responses);
  return make_artifact("score", config.scores_path());
}

StageArtifact calibrate_stage(const PipelineConfig& config, CalibrationReport* report_out) {
  if (config.threshold.mode != ThresholdSpec::Mode::calibrate) {
    throw Error("calibrate stage invoked with a fixed threshold configuration");
  }
  const ScoresByQuery scores = read_scores_jsonl(config.scores_path());
  const JudgmentSet qrels = trec_io::read_qrels(config.qrels_path);
  const JudgmentSet sample =
      sample_judged_pairs(qrels, config.threshold.fraction, config.threshold.seed);

  CalibrationReport report =
      select_threshold(scores, sample, config.policy, config.threshold.search);
  report.sample_fraction = config.threshold.fraction;
  report.seed = config.threshold.seed;

  std::filesystem::create_directories(config.output_dir);
  std::ofstream out(config.calibration_path(), std::ios::trunc);
  if (!out) throw Error("cannot write " + config.calibration_path().string());
  out << report.to_json();
  if (!out.good()) throw Error("write failed for " + config.calibration_path().string());
  out.close();
  if (report_out) *report_out = std::move(report);
  return make_artifact("calibrate", config.calibration_path());
}

StageArtifact filter_stage(const PipelineConfig& config) {
  const RunMap run = trec_io::read_run(config.run_path);
  const ScoresByQuery scores = read_scores_jsonl(config.scores_path());
  const Threshold threshold = resolve_threshold(config);

  RunMap filtered;
  for (const auto& [query_id, full_list] : run) {
    const RankedList list = full_list.head(static_cast<std::size_t>(config.top_n));
    auto per_query = scores.find(query_id);
    if (per_query == scores.end()) {
      throw Error("scores artifact " + config.scores_path().string() +
                  " has no entries for query " + query_id);
    }
    ScoreMap effective = per_query->second;
    if (config.fallback_mode == FallbackMode::retain) {
      for (auto& [passage_id, score] : effective) {
        if (score.fallback) score.value = threshold.value;
      }
    }
    FilterOutcome outcome = apply_filter(list, effective, threshold);
    if (outcome.retained.empty()) {
      logging::warn("query " + query_id + ": no passage scored at or above " +
                    format_fixed(threshold.value, 2) +
                    "; the original list passes through unchanged (check calibration)");
      continue;
    }
    filtered.emplace(query_id, std::move(outcome.retained));
  }
  trec_io::write_run(filtered, config.run_tag + "-filtered", config.filtered_path());
  return make_artifact("filter", config.filtered_path());
}

StageArtifact rerank_stage(const PipelineConfig& config, Gateway& gateway,
                           std::map<std::string, int>* calls_per_query) {
  const Corpus corpus = trec_io::read_corpus(config.corpus_path);
  const QuerySet queries = trec_io::read_queries(config.queries_path);
  const RunMap run = trec_io::read_run(config.run_path);
  std::ifstream probe(config.filtered_path());
  if (!probe) {
    throw Error("missing filtered run artifact " + config.filtered_path().string() +
                "; run the filter stage first");
  }
  probe.close();
  const RunMap filtered = trec_io::read_run(config.filtered_path());

  std::vector<const RankedList*> originals;
  originals.reserve(run.size());
  for (const auto& [query_id, list] : run) originals.push_back(&list);

  std::vector<RankedList> outputs(originals.size());
  std::vector<int> calls(originals.size(), 0);
  parallel_for(originals.size(), config.workers, [&](std::size_t i) {
    const std::string& query_id = originals[i]->query_id();
    const RankedList original = originals[i]->head(static_cast<std::size_t>(config.top_n));
    auto retained = filtered.find(query_id);
    if (retained == filtered.end()) {
      // Filter kept nothing for this query; emit the first-stage list as-is.
      outputs[i] = original;
      return;
    }
    const Query& query = query_for(queries, query_id, config.queries_path);
    RerankResult result =
        sliding_window_rerank(query, retained->second, corpus, config.window, gateway);
    calls[i] = result.llm_calls;

    std::vector<RankEntry> combined = result.list.entries();
    if (config.discard_mode == DiscardMode::append) {
      std::set<std::string> kept;
      for (const auto& entry : combined) kept.insert(entry.passage_id);
      for (const auto& entry : original.entries()) {
        if (!kept.count(entry.passage_id)) combined.push_back(entry);
      }
    }
    for (std::size_t pos = 0; pos < combined.size(); ++pos) {
      combined[pos].score = static_cast<double>(combined.size() - pos);
    }
    outputs[i] = RankedList(query_id, std::move(combined));
  });

  RunMap reranked;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    if (calls_per_query) (*calls_per_query)[originals[i]->query_id()] = calls[i];
    reranked.emplace(originals[i]->query_id(), std::move(outputs[i]));
  }
  trec_io::write_run(reranked, config.run_tag, config.reranked_path());
  return make_artifact("rerank", config.reranked_path());
}

StageArtifact eval_stage(const PipelineConfig& config, MetricReport* report_out) {
  std::ifstream probe(config.reranked_path());
  if (!probe) {
    throw Error("missing re-ranked run artifact " + config.reranked_path().string() +
                "; run the rerank stage first");
  }
  probe.close();
  const RunMap reranked = trec_io::read_run(config.reranked_path());
  const JudgmentSet qrels = trec_io::read_qrels(config.qrels_path);
  MetricReport report = mean_ndcg(reranked, qrels, config.ndcg_k);

  std::filesystem::create_directories(config.output_dir);
  std::ofstream out(config.metrics_path(), std::ios::trunc);
  if (!out) throw Error("cannot write " + config.metrics_path().string());
  out << report.to_json();
  if (!out.good()) throw Error("write failed for " + config.metrics_path().string());
  out.close();
  if (report_out) *report_out = std::move(report);
  return make_artifact("eval", config.metrics_path());
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

std::string PipelineSummary::to_json(const PipelineConfig& config) const {
  json stages = json::array();
  for (const auto& artifact : artifacts) {
    stages.push_back({{"stage", artifact.stage},
                      {"path", artifact.path.string()},
                      {"content_hash", artifact.content_hash}});
  }
  json initial = json::object();
  for (const auto& [query_id, n] : initial_count) initial[query_id] = n;
  json retained = json::object();
  for (const auto& [query_id, n] : retained_count) retained[query_id] = n;
  json score_calls_json = json::object();
  for (const auto& [query_id, n] : score_calls) score_calls_json[query_id] = n;
  json rerank_calls_json = json::object();
  for (const auto& [query_id, n] : rerank_calls) rerank_calls_json[query_id] = n;

  json doc = {
      {"config", json::parse(config.to_json())},
      {"threshold", threshold_used.value},
      {"stages", std::move(stages)},
      {"initial_count", std::move(initial)},
      {"retained_count", std::move(retained)},
      {"llm_calls",
       {{"score", {{"total", score_calls_total}, {"per_query", std::move(score_calls_json)}}},
        {"rerank",
         {{"total", rerank_calls_total}, {"per_query", std::move(rerank_calls_json)}}}}},
      {"gateway",
       {{"requests", gateway_stats.requests},
        {"backend_calls", gateway_stats.backend_calls},
        {"cache_hits", gateway_stats.cache_hits},
        {"retries", gateway_stats.retries}}}};
  if (metrics.mean) {
    doc["mean_ndcg"] = *metrics.mean;
  } else {
    doc["mean_ndcg"] = nullptr;
  }
  doc["ndcg_k"] = metrics.k;
  if (calibration) {
    doc["calibration"] = {{"selected", calibration->selected.value},
                          {"f1", calibration->selected_prf.f1},
                          {"precision", calibration->selected_prf.precision},
                          {"recall", calibration->selected_prf.recall}};
  }
  return doc.dump(2) + "\n";
}

PipelineSummary run_pipeline(const PipelineConfig& config) {
  std::filesystem::create_directories(config.output_dir);
  Gateway gateway = make_gateway(config);
  PipelineSummary summary;

  auto guarded = [](const char* stage, auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      throw Error(std::string("stage ") + stage + " failed: " + e.what());
    }
  };

  summary.artifacts.push_back(
      guarded("score", [&] { return score_stage(config, gateway, &summary.score_calls); }));

  if (config.threshold.mode == ThresholdSpec::Mode::calibrate) {
    CalibrationReport report;
    summary.artifacts.push_back(
        guarded("calibrate", [&] { return calibrate_stage(config, &report); }));
    summary.calibration = std::move(report);
  }
  summary.threshold_used = resolve_threshold(config);

  summary.artifacts.push_back(guarded("filter", [&] { return filter_stage(config); }));
  summary.artifacts.push_back(
      guarded("rerank", [&] { return rerank_stage(config, gateway, &summary.rerank_calls); }));

  MetricReport metrics;
  summary.artifacts.push_back(guarded("eval", [&] { return eval_stage(config, &metrics); }));
  summary.metrics = std::move(metrics);

  const RunMap run = trec_io::read_run(config.run_path);
  const RunMap filtered = trec_io::read_run(config.filtered_path());
  for (const auto& [query_id, list] : run) {
    summary.initial_count[query_id] =
        std::min<std::size_t>(list.size(), static_cast<std::size_t>(config.top_n));
    auto it = filtered.find(query_id);
    summary.retained_count[query_id] = it == filtered.end() ? 0 : it->second.size();
  }
  for (const auto& [query_id, calls] : summary.score_calls) {
    (void)query_id;
    summary.score_calls_total += static_cast<std::uint64_t>(calls);
  }
  for (const auto& [query_id, calls] : summary.rerank_calls) {
    (void)query_id;
    summary.rerank_calls_total += static_cast<std::uint64_t>(calls);
  }
  summary.gateway_stats = gateway.stats();

  std::ofstream out(config.summary_path(), std::ios::trunc);
  if (!out) throw Error("cannot write " + config.summary_path().string());
  out << summary.to_json(config);
  if (!out.good()) throw Error("write failed for " + config.summary_path().string());
  return summary;
}

}  // namespace winnow
