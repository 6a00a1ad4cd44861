#include "winnow/scoring.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include "winnow/log.hpp"
#include "winnow/util.hpp"

namespace winnow {

namespace {

const Passage& resolve_passage(const Corpus& corpus, const std::string& passage_id) {
  auto it = corpus.find(passage_id);
  if (it == corpus.end()) throw Error("passage " + passage_id + " not found in corpus");
  return it->second;
}

std::string render_passage_block(const std::vector<Passage>& chunk,
                                 std::size_t word_budget) {
  std::ostringstream out;
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    bool truncated = false;
    std::string text = truncate_words(chunk[i].text, word_budget, &truncated);
    out << '[' << (i + 1) << "] " << text;
    if (truncated) out << " [truncated]";
    out << '\n';
  }
  return out.str();
}

}  // namespace

GenerationRequest build_scoring_prompt(const Query& query,
                                       const std::vector<Passage>& chunk,
                                       const ScoringPromptTemplate& tmpl) {
  if (chunk.empty()) throw Error("scoring chunk is empty");
  if (static_cast<int>(chunk.size()) > tmpl.chunk_size) {
    throw Error("scoring chunk exceeds chunk_size");
  }

  std::ostringstream prompt;
  prompt << "I will provide you with " << chunk.size()
         << " passages, each labeled with a numeric identifier. Score each "
            "passage's relevance to the search query.\n\n";
  prompt << render_passage_block(chunk, tmpl.passage_word_budget);
  prompt << "\nSearch Query: " << query.text << "\n\n";
  prompt << tmpl.instruction_text << ' ' << tmpl.output_format_clause << '\n';

  GenerationRequest request;
  request.system_prompt = tmpl.system_prompt;
  request.user_prompt = prompt.str();
  request.max_tokens = tmpl.max_tokens;
  request.temperature = tmpl.temperature;
  RequestContext context;
  context.query_id = query.id;
  context.task = RequestContext::Task::score;
  for (const auto& passage : chunk) context.passage_ids.push_back(passage.id);
  request.context = std::move(context);
  return request;
}

ScoreParseReport parse_scores(const std::string& response_text,
                              const std::string& query_id,
                              const std::vector<std::string>& chunk_passage_ids) {
  static const std::regex score_line(
      R"(Passage\s*\[\s*(\d+)\s*\]\s*[:=]?\s*([+-]?(?:\d+\.?\d*|\.\d+)))",
      std::regex::icase);

  const std::size_t k = chunk_passage_ids.size();
  std::vector<bool> found(k, false);
  std::vector<double> values(k, 0.0);

  auto begin = std::sregex_iterator(response_text.begin(), response_text.end(), score_line);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const std::size_t label = std::stoul((*it)[1].str());
    if (label < 1 || label > k) continue;
    double value = 0.0;
    if (!parse_double_strict((*it)[2].str(), value)) continue;
    if (value < 0.0 || value > 1.0) {
      logging::warn("score " + (*it)[2].str() + " for passage [" + (*it)[1].str() +
                    "] of query " + query_id + " outside [0,1]; clamped");
      value = std::clamp(value, 0.0, 1.0);
    }
    // Last occurrence of a label wins.
    found[label - 1] = true;
    values[label - 1] = value;
  }

  ScoreParseReport report;
  for (std::size_t i = 0; i < k; ++i) {
    if (found[i]) {
      RelevanceScore score;
      score.query_id = query_id;
      score.passage_id = chunk_passage_ids[i];
      score.value = values[i];
      score.raw_response = response_text;
      report.parsed.push_back(std::move(score));
    } else {
      report.unparsed_passage_ids.push_back(chunk_passage_ids[i]);
    }
  }
  return report;
}

ScoringResult score_ranked_list(const Query& query, const RankedList& list,
                                const Corpus& corpus, const ScoringPromptTemplate& tmpl,
                                Gateway& gateway, int retry_budget,
                                double fallback_value) {
  if (tmpl.chunk_size < 1) throw Error("chunk_size must be >= 1");
  ScoringResult result;
  std::vector<std::string> pending;

  const auto& entries = list.entries();
  const std::size_t chunk_size = static_cast<std::size_t>(tmpl.chunk_size);
  for (std::size_t start = 0; start < entries.size(); start += chunk_size) {
    const std::size_t end = std::min(entries.size(), start + chunk_size);
    std::vector<Passage> chunk;
    std::vector<std::string> chunk_ids;
    for (std::size_t i = start; i < end; ++i) {
      chunk.push_back(resolve_passage(corpus, entries[i].passage_id));
      chunk_ids.push_back(entries[i].passage_id);
    }
    GenerationRequest request = build_scoring_prompt(query, chunk, tmpl);
    GenerationResponse response = gateway.generate(request);
    ++result.llm_calls;
    ScoreParseReport report = parse_scores(response.text, query.id, chunk_ids);
    for (auto& score : report.parsed) {
      result.scores[score.passage_id] = std::move(score);
    }
    for (auto& id : report.unparsed_passage_ids) pending.push_back(std::move(id));
  }

  // Whatever the chunk pass missed gets singleton prompts, which give the
  // model one passage of undivided attention (and a fresh cache key).
  for (const auto& passage_id : pending) {
    bool ok = false;
    for (int attempt = 0; attempt < retry_budget && !ok; ++attempt) {
      std::vector<Passage> single{resolve_passage(corpus, passage_id)};
      GenerationRequest request = build_scoring_prompt(query, single, tmpl);
      GenerationResponse response = gateway.generate(request);
      ++result.llm_calls;
      ++result.retries_used;
      ScoreParseReport report = parse_scores(response.text, query.id, {passage_id});
      if (!report.parsed.empty()) {
        result.scores[passage_id] = std::move(report.parsed.front());
        ok = true;
      }
    }
    if (!ok) {
      logging::warn("passage " + passage_id + " of query " + query.id +
                    " unparseable after retries; using fallback score");
      RelevanceScore score;
      score.query_id = query.id;
      score.passage_id = passage_id;
      score.value = std::clamp(fallback_value, 0.0, 1.0);
      score.fallback = true;
      result.scores[passage_id] = std::move(score);
      result.fallback_ids.push_back(passage_id);
    }
  }
  return result;
}

}  // namespace winnow
