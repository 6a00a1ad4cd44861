#include "winnow/rerank.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include "winnow/log.hpp"
#include "winnow/util.hpp"

namespace winnow {

namespace {

void validate(const WindowConfig& config) {
  if (config.window_size < 1) throw Error("window_size must be >= 1");
  if (config.step_size < 1 || config.step_size > config.window_size) {
    throw Error("step_size must lie in [1, window_size]");
  }
  if (config.passes < 1) throw Error("passes must be >= 1");
}

}  // namespace

GenerationRequest build_rerank_prompt(const Query& query,
                                      const std::vector<Passage>& window,
                                      const WindowConfig& config) {
  if (window.empty()) throw Error("rerank window is empty");
  if (static_cast<int>(window.size()) > config.window_size) {
    throw Error("rerank window exceeds window_size");
  }
  const std::size_t w = window.size();

  std::ostringstream prompt;
  prompt << "I will provide you with " << w
         << " passages, each labeled with a numeric identifier. Rank the "
            "passages based on their relevance to the search query.\n\n";
  for (std::size_t i = 0; i < w; ++i) {
    bool truncated = false;
    std::string text = truncate_words(window[i].text, config.passage_word_budget, &truncated);
    prompt << '[' << (i + 1) << "] " << text;
    if (truncated) prompt << " [truncated]";
    prompt << '\n';
  }
  prompt << "\nSearch Query: " << query.text << "\n\n";
  prompt << "Rank the " << w
         << " passages above by relevance to the search query. List all "
            "identifiers in descending order of relevance, in the form "
            "[a] > [b] > [c]. Output only the ranking, with no explanation.\n";

  GenerationRequest request;
  request.system_prompt =
      "You are an intelligent assistant that ranks passages by their "
      "relevance to a search query.";
  request.user_prompt = prompt.str();
  request.max_tokens = config.max_tokens;
  request.temperature = config.temperature;
  RequestContext context;
  context.query_id = query.id;
  context.task = RequestContext::Task::rank;
  for (const auto& passage : window) context.passage_ids.push_back(passage.id);
  request.context = std::move(context);
  return request;
}

Permutation parse_permutation(const std::string& response_text, int window_len) {
  if (window_len < 1) throw Error("window length must be >= 1");
  static const std::regex label_re(R"(\[\s*(\d+)\s*\])");

  Permutation perm;
  std::vector<bool> seen(static_cast<std::size_t>(window_len), false);
  auto begin = std::sregex_iterator(response_text.begin(), response_text.end(), label_re);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    unsigned long label = 0;
    try {
      label = std::stoul((*it)[1].str());
    } catch (const std::exception&) {
      continue;  // absurdly long digit run
    }
    if (label < 1 || label > static_cast<unsigned long>(window_len)) continue;
    if (seen[label - 1]) continue;  // first occurrence wins
    seen[label - 1] = true;
    perm.order.push_back(static_cast<int>(label));
  }
  if (perm.order.empty() && window_len > 1) {
    logging::warn("no ranking labels found in response; keeping window order");
  }
  for (int label = 1; label <= window_len; ++label) {
    if (!seen[label - 1]) perm.order.push_back(label);
  }
  return perm;
}

std::vector<int> window_offsets(int n, const WindowConfig& config) {
  validate(config);
  std::vector<int> offsets;
  if (n <= 0) return offsets;
  int offset = std::max(0, n - config.window_size);
  for (;;) {
    offsets.push_back(offset);
    if (offset == 0) break;
    offset = std::max(0, offset - config.step_size);
  }
  return offsets;
}

RerankResult sliding_window_rerank(const Query& query, const RankedList& list,
                                   const Corpus& corpus, const WindowConfig& config,
                                   Gateway& gateway) {
  validate(config);
  if (list.empty()) throw Error("cannot re-rank an empty list for query " + list.query_id());

  std::vector<RankEntry> entries = list.entries();
  const int n = static_cast<int>(entries.size());
  RerankResult result;

  for (int pass = 0; pass < config.passes; ++pass) {
    for (int offset : window_offsets(n, config)) {
      const int window_len = std::min(config.window_size, n - offset);
      if (window_len < 2) continue;  // nothing to reorder

      std::vector<Passage> window;
      window.reserve(static_cast<std::size_t>(window_len));
      for (int i = 0; i < window_len; ++i) {
        const std::string& passage_id = entries[static_cast<std::size_t>(offset + i)].passage_id;
        auto it = corpus.find(passage_id);
        if (it == corpus.end()) throw Error("passage " + passage_id + " not found in corpus");
        window.push_back(it->second);
      }

      GenerationRequest request = build_rerank_prompt(query, window, config);
      GenerationResponse response = gateway.generate(request);
      ++result.llm_calls;
      Permutation perm = parse_permutation(response.text, window_len);

      std::vector<RankEntry> reordered;
      reordered.reserve(static_cast<std::size_t>(window_len));
      for (int label : perm.order) {
        reordered.push_back(entries[static_cast<std::size_t>(offset + label - 1)]);
      }
      std::copy(reordered.begin(), reordered.end(),
                entries.begin() + offset);
    }
  }

  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].score = static_cast<double>(entries.size() - i);
  }
  result.list = RankedList(list.query_id(), std::move(entries));
  return result;
}

}  // namespace winnow
