#pragma once

#include <vector>

#include "winnow/core.hpp"
#include "winnow/gateway.hpp"

namespace winnow {

// Sliding-window listwise re-ranking parameters. One pass walks windows of
// window_size passages from the bottom of the list to the top in steps of
// step_size, asking the backend for a relevance-ordered permutation of each
// window.
struct WindowConfig {
  int window_size = 10;
  int step_size = 5;
  int passes = 1;
  std::size_t passage_word_budget = 300;
  int max_tokens = 256;
  double temperature = 0.0;
};

// 1-based window labels in relevance order (most relevant first).
struct Permutation {
  std::vector<int> order;
};

GenerationRequest build_rerank_prompt(const Query& query,
                                      const std::vector<Passage>& window,
                                      const WindowConfig& config);

// Extracts bracketed integers in order of appearance and repairs the result
// into a true permutation of 1..window_len: out-of-range labels dropped,
// duplicates keep their first occurrence, missing labels appended ascending.
// Text with no usable labels yields the identity permutation with a warning.
Permutation parse_permutation(const std::string& response_text, int window_len);

// Window start offsets for one pass over a list of length n, from the bottom
// of the list upward; the final window always starts at 0.
std::vector<int> window_offsets(int n, const WindowConfig& config);

struct RerankResult {
  RankedList list;
  int llm_calls = 0;
};

// Re-ranks the list bottom-up. Output is a permutation of the input passages
// with ranks 1..N and synthetic descending scores (N - rank + 1). Windows of
// a single passage skip the backend call.
RerankResult sliding_window_rerank(const Query& query, const RankedList& list,
                                   const Corpus& corpus, const WindowConfig& config,
                                   Gateway& gateway);

}  // namespace winnow
