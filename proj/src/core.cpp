#include "winnow/core.hpp"

#include <algorithm>
#include <unordered_set>

namespace winnow {

int binarize_level(int level, const RelevancePolicy& policy) {
  return level >= policy.min_relevant_level ? 1 : 0;
}

void JudgmentSet::add(const Judgment& judgment) {
  if (judgment.query_id.empty() || judgment.passage_id.empty()) {
    throw Error("judgment with empty query or passage id");
  }
  if (judgment.level < 0) {
    throw Error("negative relevance level for (" + judgment.query_id + ", " +
                judgment.passage_id + ")");
  }
  auto& per_query = levels_[judgment.query_id];
  auto it = per_query.find(judgment.passage_id);
  if (it != per_query.end()) {
    if (it->second != judgment.level) {
      throw Error("conflicting judgments for (" + judgment.query_id + ", " +
                  judgment.passage_id + "): levels " + std::to_string(it->second) +
                  " and " + std::to_string(judgment.level));
    }
    return;
  }
  per_query.emplace(judgment.passage_id, judgment.level);
  ++size_;
  max_level_ = std::max(max_level_, judgment.level);
}

std::optional<int> JudgmentSet::level(const std::string& query_id,
                                      const std::string& passage_id) const {
  auto q = levels_.find(query_id);
  if (q == levels_.end()) return std::nullopt;
  auto p = q->second.find(passage_id);
  if (p == q->second.end()) return std::nullopt;
  return p->second;
}

std::vector<Judgment> JudgmentSet::all() const {
  std::vector<Judgment> out;
  out.reserve(size_);
  for (const auto& [query_id, per_query] : levels_) {
    for (const auto& [passage_id, level] : per_query) {
      out.push_back(Judgment{query_id, passage_id, level});
    }
  }
  return out;
}

RankedList::RankedList(std::string query_id, std::vector<RankEntry> ordered_entries)
    : query_id_(std::move(query_id)), entries_(std::move(ordered_entries)) {
  if (query_id_.empty()) throw Error("ranked list with empty query id");
  std::unordered_set<std::string> seen;
  seen.reserve(entries_.size());
  int rank = 1;
  for (auto& entry : entries_) {
    if (entry.passage_id.empty()) {
      throw Error("ranked list for query " + query_id_ + " has an empty passage id");
    }
    if (!seen.insert(entry.passage_id).second) {
      throw Error("duplicate passage " + entry.passage_id + " in ranked list for query " +
                  query_id_);
    }
    entry.rank = rank++;
  }
}

bool RankedList::contains(const std::string& passage_id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const RankEntry& e) { return e.passage_id == passage_id; });
}

RankedList RankedList::head(std::size_t n) const {
  if (n >= entries_.size()) return *this;
  return RankedList(query_id_,
                    std::vector<RankEntry>(entries_.begin(),
                                           entries_.begin() + static_cast<long>(n)));
}

}  // namespace winnow
