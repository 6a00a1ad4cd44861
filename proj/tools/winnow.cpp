// winnow: LLM pre-filtering and listwise re-ranking for retrieval runs.
//
// Subcommands mirror the pipeline stages so each step can be run and
// inspected on its own:
//   score      score run passages with the configured backend
//   calibrate  pick a relevance threshold by F1 against sampled qrels
//   filter     drop sub-threshold passages from the run
//   rerank     sliding-window listwise re-rank of the retained passages
//   eval       nDCG@k of a run (or two runs side by side) against qrels
//   run        all of the above in order, plus a summary report

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "winnow/log.hpp"
#include "winnow/metrics.hpp"
#include "winnow/pipeline.hpp"
#include "winnow/trec_io.hpp"
#include "winnow/util.hpp"

namespace {

using namespace winnow;

// Nonzero exit codes, one per failed stage.
int exit_code_for(const std::string& message) {
  static const std::vector<std::pair<std::string, int>> stages = {
      {"stage score", 2},  {"stage calibrate", 3}, {"stage filter", 4},
      {"stage rerank", 5}, {"stage eval", 6}};
  for (const auto& [needle, code] : stages) {
    if (message.find(needle) != std::string::npos) return code;
  }
  return 1;
}

void add_config_options(CLI::App& cmd, PipelineConfig& config) {
  cmd.add_option("--corpus", config.corpus_path, "Corpus JSONL (id, text, optional title)");
  cmd.add_option("--queries", config.queries_path, "Queries JSONL (id, text)");
  cmd.add_option("--run", config.run_path, "First-stage TREC run file");
  cmd.add_option("--qrels", config.qrels_path, "TREC qrels file");
  cmd.add_option("--output-dir", config.output_dir, "Artifact directory");
  cmd.add_option("--min-relevant-level", config.policy.min_relevant_level,
                 "Smallest qrels level counted as relevant (1=BEIR-style, 2=TREC-style)")
      ->check(CLI::Range(1, 2));
  cmd.add_option("--top-n", config.top_n, "Passages taken from the head of each run list")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--chunk-size", config.scoring.chunk_size, "Passages per scoring prompt")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--word-budget", config.scoring.passage_word_budget,
                 "Per-passage word budget in prompts");
  cmd.add_option("--window-size", config.window.window_size, "Re-ranking window size")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--step-size", config.window.step_size, "Re-ranking window step")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--passes", config.window.passes, "Sliding-window passes")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--retry-budget", config.retry_budget,
                 "Singleton retries per unparsed passage")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--workers", config.workers, "Concurrent queries in score/rerank")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--ndcg-k", config.ndcg_k, "Evaluation cutoff")->check(CLI::PositiveNumber);
  cmd.add_option("--tag", config.run_tag, "Tag column for emitted run files");

  auto* backend = cmd.add_option_group("backend");
  backend->add_option_function<std::string>(
      "--backend",
      [&config](const std::string& kind) {
        if (kind == "http") config.backend.kind = BackendKind::http_chat;
        else if (kind == "oracle") config.backend.kind = BackendKind::mock_oracle;
        else if (kind == "scripted") config.backend.kind = BackendKind::mock_scripted;
      },
      "Backend kind: http | oracle | scripted")
      ->check(CLI::IsMember({"http", "oracle", "scripted"}));
  backend->add_option("--endpoint", config.backend.endpoint_url,
                      "OpenAI-compatible chat-completions base URL");
  backend->add_option("--model", config.backend.model_name, "Model name");
  backend->add_option("--timeout", config.backend.timeout_s, "Request timeout (seconds)");
  backend->add_option("--max-retries", config.backend.max_retries, "Retries per request")
      ->check(CLI::NonNegativeNumber);
  backend->add_option("--api-key-env", config.backend.api_key_env,
                      "Environment variable holding the bearer token");
  backend->add_option_function<std::string>(
      "--cache-dir",
      [&config](const std::string& dir) { config.backend.cache_dir = dir; },
      "Response cache directory");
  backend->add_option("--oracle-noise", config.backend.oracle_noise,
                      "Mock oracle score noise in [0, 0.5]");
  backend->add_option("--oracle-seed", config.backend.oracle_seed, "Mock oracle RNG seed");
  backend->add_option("--script", config.backend.script_path,
                      "Scripted backend response file (JSON)");

  auto* threshold = cmd.add_option_group("threshold");
  threshold->add_option_function<double>(
      "--threshold",
      [&config](double value) {
        config.threshold.mode = ThresholdSpec::Mode::fixed;
        config.threshold.fixed_value = value;
      },
      "Fixed relevance threshold in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  threshold->add_flag_function(
      "--calibrate",
      [&config](std::int64_t) { config.threshold.mode = ThresholdSpec::Mode::calibrate; },
      "Select the threshold by F1 against sampled qrels");
  threshold->add_option("--fraction", config.threshold.fraction,
                        "Fraction of qrels sampled for calibration");
  threshold->add_option("--seed", config.threshold.seed, "Calibration sampling seed");
  threshold->add_option_function<std::string>(
      "--search",
      [&config](const std::string& mode) {
        config.threshold.search.mode = mode == "grid" ? ThresholdSearch::Mode::grid
                                                      : ThresholdSearch::Mode::hill_climb;
      },
      "Threshold search: grid | hill_climb")
      ->check(CLI::IsMember({"grid", "hill_climb"}));
  threshold->add_option("--step", config.threshold.search.step, "Search step");
  threshold->add_option("--start", config.threshold.search.start, "Hill-climb start");

  cmd.add_option_function<std::string>(
      "--discard-mode",
      [&config](const std::string& mode) {
        config.discard_mode = mode == "drop" ? DiscardMode::drop : DiscardMode::append;
      },
      "Discarded passages: append below survivors | drop")
      ->check(CLI::IsMember({"append", "drop"}));
  cmd.add_option_function<std::string>(
      "--fallback-mode",
      [&config](const std::string& mode) {
        config.fallback_mode = mode == "strict" ? FallbackMode::strict : FallbackMode::retain;
      },
      "Unparseable-score handling: retain | strict")
      ->check(CLI::IsMember({"retain", "strict"}));
  cmd.add_flag("--store-raw", config.store_raw_responses,
               "Keep raw backend responses in scores.jsonl");
}

void print_summary(const PipelineSummary& summary, const PipelineConfig& config) {
  std::cout << "threshold: " << format_fixed(summary.threshold_used.value, 2);
  if (summary.calibration) {
    std::cout << " (calibrated, F1=" << format_fixed(summary.calibration->selected_prf.f1, 4)
              << " on " << format_fixed(summary.calibration->sample_fraction * 100.0, 1)
              << "% of qrels)";
  } else {
    std::cout << " (fixed)";
  }
  std::cout << '\n';

  std::size_t total_initial = 0;
  std::size_t total_retained = 0;
  for (const auto& [query_id, n] : summary.initial_count) {
    total_initial += n;
    auto it = summary.retained_count.find(query_id);
    total_retained += it == summary.retained_count.end() ? 0 : it->second;
  }
  std::cout << "passages: " << total_initial << " -> " << total_retained << " retained ("
            << summary.initial_count.size() << " queries)\n";
  std::cout << "llm calls: score=" << summary.score_calls_total
            << " rerank=" << summary.rerank_calls_total
            << " (cache hits " << summary.gateway_stats.cache_hits << ")\n";
  std::cout << "mean nDCG@" << summary.metrics.k << ": "
            << (summary.metrics.mean ? format_fixed(*summary.metrics.mean, 4)
                                     : std::string("n/a"))
            << " (graded gains: level-1 passages credited)\n";
  if (config.policy.min_relevant_level >= 2) {
    std::cout << "policy: TREC-style filtering regime (level 1 irrelevant for "
                 "threshold/F1; still gains 1 in nDCG above)\n";
  }
  for (const auto& artifact : summary.artifacts) {
    std::cout << "artifact " << artifact.stage << ": " << artifact.path.string() << '\n';
  }
  std::cout << "summary: " << config.summary_path().string() << '\n';
}

int eval_compare(const PipelineConfig& config, const std::filesystem::path& run_a,
                 const std::filesystem::path& run_b) {
  const JudgmentSet qrels = trec_io::read_qrels(config.qrels_path);
  const MetricReport a = mean_ndcg(trec_io::read_run(run_a), qrels, config.ndcg_k);
  const MetricReport b = mean_ndcg(trec_io::read_run(run_b), qrels, config.ndcg_k);

  std::cout << "query            " << "a=" << run_a.filename().string() << "  b="
            << run_b.filename().string() << '\n';
  for (const auto& [query_id, value_a] : a.per_query) {
    auto it = b.per_query.find(query_id);
    std::cout << query_id;
    for (std::size_t pad = query_id.size(); pad < 17; ++pad) std::cout << ' ';
    std::cout << format_fixed(value_a, 4) << "  ";
    std::cout << (it == b.per_query.end() ? "n/a   " : format_fixed(it->second, 4));
    if (it != b.per_query.end()) {
      std::cout << "  " << format_fixed(value_a - it->second, 4);
    }
    std::cout << '\n';
  }
  std::cout << "mean             "
            << (a.mean ? format_fixed(*a.mean, 4) : std::string("n/a")) << "  "
            << (b.mean ? format_fixed(*b.mean, 4) : std::string("n/a")) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM pre-filtering and listwise re-ranking for retrieval runs"};
  app.require_subcommand(1);

  // --config seeds the defaults; explicit flags override it.
  PipelineConfig config;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        config = load_config(argv[i + 1]);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
      }
    }
  }
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  CLI::App* cmd_run = app.add_subcommand("run", "Full pipeline: score through eval");
  CLI::App* cmd_score = app.add_subcommand("score", "Score run passages with the backend");
  CLI::App* cmd_calibrate = app.add_subcommand("calibrate", "Select a threshold by F1");
  CLI::App* cmd_filter = app.add_subcommand("filter", "Drop sub-threshold passages");
  CLI::App* cmd_rerank = app.add_subcommand("rerank", "Sliding-window listwise re-rank");
  CLI::App* cmd_eval = app.add_subcommand("eval", "nDCG of run(s) against qrels");
  for (CLI::App* cmd : {cmd_run, cmd_score, cmd_calibrate, cmd_filter, cmd_rerank, cmd_eval}) {
    add_config_options(*cmd, config);
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
  }

  std::filesystem::path eval_run_file;
  std::filesystem::path eval_baseline;
  cmd_eval->add_option("--run-file", eval_run_file,
                       "Run file to evaluate (default: the rerank artifact)");
  cmd_eval->add_option("--baseline", eval_baseline,
                       "Second run file for a side-by-side comparison");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(cmd_run)) {
      PipelineSummary summary = run_pipeline(config);
      print_summary(summary, config);
      return 0;
    }
    if (app.got_subcommand(cmd_score)) {
      Gateway gateway = make_gateway(config);
      StageArtifact artifact = score_stage(config, gateway);
      std::cout << "wrote " << artifact.path.string() << '\n';
      return 0;
    }
    if (app.got_subcommand(cmd_calibrate)) {
      if (config.threshold.mode != ThresholdSpec::Mode::calibrate) {
        config.threshold.mode = ThresholdSpec::Mode::calibrate;
      }
      CalibrationReport report;
      StageArtifact artifact = calibrate_stage(config, &report);
      std::cout << "selected threshold " << format_fixed(report.selected.value, 2)
                << " (F1=" << format_fixed(report.selected_prf.f1, 4)
                << ", P=" << format_fixed(report.selected_prf.precision, 4)
                << ", R=" << format_fixed(report.selected_prf.recall, 4) << ")\n";
      std::cout << "wrote " << artifact.path.string() << '\n';
      return 0;
    }
    if (app.got_subcommand(cmd_filter)) {
      StageArtifact artifact = filter_stage(config);
      std::cout << "wrote " << artifact.path.string() << '\n';
      return 0;
    }
    if (app.got_subcommand(cmd_rerank)) {
      Gateway gateway = make_gateway(config);
      StageArtifact artifact = rerank_stage(config, gateway);
      std::cout << "wrote " << artifact.path.string() << '\n';
      return 0;
    }
    if (app.got_subcommand(cmd_eval)) {
      if (!eval_baseline.empty()) {
        const auto primary =
            eval_run_file.empty() ? config.reranked_path() : eval_run_file;
        return eval_compare(config, primary, eval_baseline);
      }
      if (!eval_run_file.empty()) {
        const JudgmentSet qrels = trec_io::read_qrels(config.qrels_path);
        const MetricReport report =
            mean_ndcg(trec_io::read_run(eval_run_file), qrels, config.ndcg_k);
        std::cout << report.to_table();
        return 0;
      }
      MetricReport report;
      StageArtifact artifact = eval_stage(config, &report);
      std::cout << report.to_table();
      std::cout << "wrote " << artifact.path.string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.what());
  }
  return 1;
}
