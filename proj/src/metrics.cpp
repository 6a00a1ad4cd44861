#include "winnow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "winnow/log.hpp"
#include "winnow/util.hpp"

namespace winnow {

namespace {

double discount(std::size_t rank) {  // rank is 1-based
  return std::log2(static_cast<double>(rank) + 1.0);
}

}  // namespace

double ndcg_at_k(const RankedList& ranked, const JudgmentSet& judgments, int k) {
  if (k < 1) throw Error("nDCG cutoff must be >= 1");

  const std::map<std::string, int>* judged = nullptr;
  auto it = judgments.by_query().find(ranked.query_id());
  if (it != judgments.by_query().end()) judged = &it->second;

  double dcg = 0.0;
  const std::size_t depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < depth; ++i) {
    int gain = 0;
    if (judged) {
      auto g = judged->find(ranked.entries()[i].passage_id);
      if (g != judged->end()) gain = g->second;
    }
    if (gain > 0) dcg += static_cast<double>(gain) / discount(i + 1);
  }

  double idcg = 0.0;
  if (judged) {
    std::vector<int> levels;
    levels.reserve(judged->size());
    for (const auto& [passage_id, level] : *judged) levels.push_back(level);
    std::sort(levels.begin(), levels.end(), std::greater<int>());
    const std::size_t ideal_depth = std::min<std::size_t>(levels.size(),
                                                          static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ideal_depth; ++i) {
      if (levels[i] > 0) idcg += static_cast<double>(levels[i]) / discount(i + 1);
    }
  }

  if (idcg <= 0.0) return 0.0;
  return dcg / idcg;
}

MetricReport mean_ndcg(const RunMap& runs, const JudgmentSet& judgments, int k) {
  MetricReport report;
  report.k = k;
  double sum = 0.0;
  std::size_t evaluated = 0;
  for (const auto& [query_id, list] : runs) {
    auto judged = judgments.by_query().find(query_id);
    if (judged == judgments.by_query().end()) {
      logging::warn("query " + query_id + " has no judgments; excluded from evaluation");
      report.unjudged_queries.push_back(query_id);
      continue;
    }
    const bool has_relevant = std::any_of(
        judged->second.begin(), judged->second.end(),
        [](const auto& entry) { return entry.second > 0; });
    const double value = ndcg_at_k(list, judgments, k);
    report.per_query[query_id] = value;
    if (has_relevant) {
      sum += value;
      ++evaluated;
    } else {
      report.zero_idcg_queries.push_back(query_id);
    }
  }
  if (evaluated > 0) report.mean = sum / static_cast<double>(evaluated);
  return report;
}

std::string MetricReport::to_json() const {
  nlohmann::json per_query_json = nlohmann::json::object();
  for (const auto& [query_id, value] : per_query) per_query_json[query_id] = value;
  nlohmann::json doc = {{"metric", "ndcg"},
                        {"k", k},
                        {"gain_mode", gain_mode},
                        {"per_query", std::move(per_query_json)},
                        {"evaluated_queries", per_query.size() - zero_idcg_queries.size()},
                        {"zero_idcg_queries", zero_idcg_queries},
                        {"unjudged_queries", unjudged_queries}};
  if (mean) {
    doc["mean"] = *mean;
  } else {
    doc["mean"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  out << "query            ndcg@" << k << '\n';
  for (const auto& [query_id, value] : per_query) {
    out << query_id;
    for (std::size_t pad = query_id.size(); pad < 17; ++pad) out << ' ';
    out << format_fixed(value, 4) << '\n';
  }
  out << "mean             ";
  out << (mean ? format_fixed(*mean, 4) : std::string("n/a")) << '\n';
  return out.str();
}

}  // namespace winnow
