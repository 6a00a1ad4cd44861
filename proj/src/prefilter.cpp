#include "winnow/prefilter.hpp"

namespace winnow {

FilterOutcome apply_filter(const RankedList& list, const ScoreMap& scores, Threshold t) {
  std::vector<RankEntry> retained;
  std::vector<RankEntry> discarded;
  for (const auto& entry : list.entries()) {
    auto it = scores.find(entry.passage_id);
    if (it == scores.end()) {
      throw Error("no relevance score for passage " + entry.passage_id + " of query " +
                  list.query_id());
    }
    if (s_pre(it->second.value, t) == 1) {
      retained.push_back(entry);
    } else {
      discarded.push_back(entry);
    }
  }
  FilterOutcome outcome;
  outcome.retained = RankedList(list.query_id(), std::move(retained));
  outcome.discarded = RankedList(list.query_id(), std::move(discarded));
  outcome.threshold_used = t;
  return outcome;
}

}  // namespace winnow
