#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace winnow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; line is 1-based.
struct ParseError : Error {
  ParseError(const std::string& file, std::size_t line_no, const std::string& what)
      : Error(file + ":" + std::to_string(line_no) + ": " + what), line(line_no) {}
  std::size_t line;
};

// Network-level failure (connect, timeout) after exhausting retries.
struct TransportError : Error {
  using Error::Error;
};

// The backend answered with a non-success wire status.
struct BackendError : Error {
  BackendError(int status_code, const std::string& what)
      : Error("backend returned status " + std::to_string(status_code) + ": " + what),
        status(status_code) {}
  int status;
};

struct Query {
  std::string id;
  std::string text;
};

struct Passage {
  std::string id;
  std::string text;
};

using Corpus = std::map<std::string, Passage>;
using QuerySet = std::map<std::string, Query>;

// One graded expert label for a (query, passage) pair.
struct Judgment {
  std::string query_id;
  std::string passage_id;
  int level = 0;
};

// Dataset-family rule for reading graded labels as binary relevance.
// min_relevant_level = 1: grade 1 already counts as relevant (BEIR-style).
// min_relevant_level = 2: grade 1 counts as irrelevant (TREC-DL-style).
struct RelevancePolicy {
  int min_relevant_level = 1;
};

// 1 iff level >= policy.min_relevant_level. Monotone in level, so grades
// above the usual 0..3 range stay relevant under both policies.
int binarize_level(int level, const RelevancePolicy& policy);

class JudgmentSet {
 public:
  // Identical duplicates are absorbed; a conflicting duplicate throws.
  void add(const Judgment& judgment);

  std::optional<int> level(const std::string& query_id,
                           const std::string& passage_id) const;

  // query_id -> (passage_id -> level), both keys in ascending order.
  const std::map<std::string, std::map<std::string, int>>& by_query() const {
    return levels_;
  }

  // Flattened view in canonical (query_id, passage_id) order.
  std::vector<Judgment> all() const;

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  int max_level() const { return max_level_; }

 private:
  std::map<std::string, std::map<std::string, int>> levels_;
  std::size_t size_ = 0;
  int max_level_ = 0;
};

struct RankEntry {
  std::string passage_id;
  double score = 0.0;
  int rank = 0;
};

// Per-query ordered passage list. Entries keep the order they are given in;
// ranks are always renumbered to 1..N on construction.
class RankedList {
 public:
  RankedList() = default;
  RankedList(std::string query_id, std::vector<RankEntry> ordered_entries);

  const std::string& query_id() const { return query_id_; }
  const std::vector<RankEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const std::string& passage_id) const;

  // Prefix of the n best-ranked entries (whole list when n >= size).
  RankedList head(std::size_t n) const;

 private:
  std::string query_id_;
  std::vector<RankEntry> entries_;
};

using RunMap = std::map<std::string, RankedList>;

// LLM-assigned relevance of one passage to one query, in [0,1].
struct RelevanceScore {
  std::string query_id;
  std::string passage_id;
  double value = 0.0;
  std::optional<std::string> raw_response;
  // Set when the value is a parse-failure fallback rather than a model score.
  bool fallback = false;
};

// passage_id -> score, for a single query.
using ScoreMap = std::map<std::string, RelevanceScore>;
// query_id -> per-query scores.
using ScoresByQuery = std::map<std::string, ScoreMap>;

}  // namespace winnow
