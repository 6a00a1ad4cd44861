#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "winnow/core.hpp"

namespace winnow {

struct MetricReport {
  int k = 10;
  std::string gain_mode = "linear";
  std::map<std::string, double> per_query;
  // Arithmetic mean over queries with at least one judged relevant passage;
  // absent when no query qualifies.
  std::optional<double> mean;
  // Queries whose qrels carry no positive level: reported with value 0 but
  // left out of the mean.
  std::vector<std::string> zero_idcg_queries;
  // Queries with no qrels entry at all: not evaluated.
  std::vector<std::string> unjudged_queries;

  std::string to_json() const;
  std::string to_table() const;
};

// nDCG@k with linear gains (gain = judged level, 0 for unjudged passages) and
// a log2(rank+1) discount. The ideal ranking uses every judged passage of the
// query, so relevant passages missing from the list still count against it.
// Returns 0 when the query has no judged relevant passage.
double ndcg_at_k(const RankedList& ranked, const JudgmentSet& judgments, int k);

MetricReport mean_ndcg(const RunMap& runs, const JudgmentSet& judgments, int k);

}  // namespace winnow
