#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "winnow/calibration.hpp"
#include "winnow/core.hpp"
#include "winnow/gateway.hpp"
#include "winnow/metrics.hpp"
#include "winnow/rerank.hpp"
#include "winnow/scoring.hpp"

namespace winnow {

struct ThresholdSpec {
  enum class Mode { fixed, calibrate };
  Mode mode = Mode::fixed;
  double fixed_value = 0.3;
  // calibrate
  double fraction = 0.08;
  std::uint64_t seed = 42;
  ThresholdSearch search;
};

// What happens to sub-threshold passages in the final run: appended after the
// re-ranked survivors in their original order (keeps runs full depth for
// external scorers), or dropped entirely.
enum class DiscardMode { append, drop };

// Score for passages the parser never recovered: retain substitutes the
// active threshold (the passage survives filtering), strict leaves 0.
enum class FallbackMode { retain, strict };

struct PipelineConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path queries_path;
  std::filesystem::path run_path;
  std::filesystem::path qrels_path;
  std::filesystem::path output_dir = "winnow-out";

  RelevancePolicy policy;
  BackendConfig backend;
  ScoringPromptTemplate scoring;
  WindowConfig window;
  ThresholdSpec threshold;
  DiscardMode discard_mode = DiscardMode::append;
  FallbackMode fallback_mode = FallbackMode::retain;
  int top_n = 100;
  int retry_budget = 1;
  int workers = 1;
  int ndcg_k = 10;
  std::string run_tag = "winnow";
  bool store_raw_responses = false;

  std::filesystem::path scores_path() const { return output_dir / "scores.jsonl"; }
  std::filesystem::path calibration_path() const { return output_dir / "calibration.json"; }
  std::filesystem::path filtered_path() const { return output_dir / "filtered.run"; }
  std::filesystem::path reranked_path() const { return output_dir / "reranked.run"; }
  std::filesystem::path metrics_path() const { return output_dir / "metrics.json"; }
  std::filesystem::path summary_path() const { return output_dir / "summary.json"; }

  std::string to_json() const;
};

// Reads a JSON config document; missing keys keep their defaults, unknown
// keys produce a warning.
PipelineConfig load_config(const std::filesystem::path& path);

struct StageArtifact {
  std::string stage;
  std::filesystem::path path;
  std::string content_hash;  // fnv1a64 of the file bytes
};

std::string hash_file(const std::filesystem::path& path);

// Relevance-score artifact (JSONL, one RelevanceScore per line).
void write_scores_jsonl(const ScoresByQuery& scores, const std::filesystem::path& path,
                        bool include_raw);
ScoresByQuery read_scores_jsonl(const std::filesystem::path& path);

// Stage entry points. Each reads its inputs from the configured paths, writes
// exactly one artifact, and returns its descriptor. They are what the CLI
// subcommands run, and run_pipeline is their composition.
StageArtifact score_stage(const PipelineConfig& config, Gateway& gateway,
                          std::map<std::string, int>* calls_per_query = nullptr);
StageArtifact calibrate_stage(const PipelineConfig& config,
                              CalibrationReport* report_out = nullptr);
StageArtifact filter_stage(const PipelineConfig& config);
StageArtifact rerank_stage(const PipelineConfig& config, Gateway& gateway,
                           std::map<std::string, int>* calls_per_query = nullptr);
StageArtifact eval_stage(const PipelineConfig& config, MetricReport* report_out = nullptr);

// Resolves the active threshold: the fixed value, or the selection recorded
// in the calibration artifact.
Threshold resolve_threshold(const PipelineConfig& config);

// Builds the gateway for the configured backend (mock_oracle backends are
// seeded with the configured qrels).
Gateway make_gateway(const PipelineConfig& config);

struct PipelineSummary {
  std::vector<StageArtifact> artifacts;
  Threshold threshold_used;
  std::optional<CalibrationReport> calibration;
  MetricReport metrics;
  std::map<std::string, std::size_t> initial_count;   // N per query
  std::map<std::string, std::size_t> retained_count;  // N' per query
  std::map<std::string, int> score_calls;
  std::map<std::string, int> rerank_calls;
  std::uint64_t score_calls_total = 0;
  std::uint64_t rerank_calls_total = 0;
  GatewayStats gateway_stats;

  std::string to_json(const PipelineConfig& config) const;
};

// Runs score -> (calibrate) -> filter -> rerank -> eval, writes summary.json,
// and returns the summary. A stage failure aborts with the stage name in the
// error; artifacts of completed stages stay on disk.
PipelineSummary run_pipeline(const PipelineConfig& config);

}  // namespace winnow
