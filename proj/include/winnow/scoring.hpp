#pragma once

#include <string>
#include <vector>

#include "winnow/core.hpp"
#include "winnow/gateway.hpp"

namespace winnow {

// Prompt recipe for relevance scoring. The defaults are the constants the
// pipeline is tuned for: chunks of 5 passages, scores in [0,1], a rationale
// before the score lines.
struct ScoringPromptTemplate {
  std::string system_prompt =
      "You are an intelligent assistant that evaluates how relevant text "
      "passages are to a search query.";
  std::string instruction_text =
      "Grasp and understand both the query and the passages before score "
      "generation. Then, based on your understanding and analysis quantify "
      "the relevance between the passage and the query. Give the rationale "
      "before answering.";
  std::string output_format_clause =
      "After the rationale, output one line per passage in the exact format "
      "\"Passage [i]: <score>\" where <score> is a decimal number between 0 "
      "and 1 (0 means completely irrelevant, 1 means fully relevant).";
  int chunk_size = 5;
  std::size_t passage_word_budget = 300;
  int max_tokens = 1024;
  double temperature = 0.0;
};

struct ScoreParseReport {
  std::vector<RelevanceScore> parsed;             // label order
  std::vector<std::string> unparsed_passage_ids;  // labels missing from the text
  int retries_used = 0;
};

// Renders one scoring request for a chunk of at most chunk_size passages.
// Passages appear as "[1]".."[k]" in chunk order; texts beyond the word
// budget are cut and marked. The request carries a score-task context.
GenerationRequest build_scoring_prompt(const Query& query,
                                       const std::vector<Passage>& chunk,
                                       const ScoringPromptTemplate& tmpl);

// Scans free text for "Passage [i]: <value>" lines. The last occurrence of a
// label wins; values outside [0,1] are clamped with a warning; labels never
// mentioned end up in unparsed_passage_ids.
ScoreParseReport parse_scores(const std::string& response_text,
                              const std::string& query_id,
                              const std::vector<std::string>& chunk_passage_ids);

struct ScoringResult {
  ScoreMap scores;
  std::vector<std::string> fallback_ids;  // unparseable after all retries
  int llm_calls = 0;
  int retries_used = 0;
};

// Scores every passage of the list: consecutive chunks of chunk_size, then
// singleton retries (up to retry_budget per passage) for anything the parser
// missed, then the fallback value for what still failed. Every returned value
// lies in [0,1] and the returned id set equals the list's id set.
ScoringResult score_ranked_list(const Query& query, const RankedList& list,
                                const Corpus& corpus, const ScoringPromptTemplate& tmpl,
                                Gateway& gateway, int retry_budget,
                                double fallback_value = 0.0);

}  // namespace winnow
