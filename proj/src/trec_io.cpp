#include "winnow/trec_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "winnow/log.hpp"
#include "winnow/util.hpp"

namespace winnow::trec_io {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

struct RunRow {
  long long rank;
  std::size_t line_no;  // file order, used as a stable tie-break
  RankEntry entry;
};

}  // namespace

RunMap read_run(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::map<std::string, std::vector<RunRow>> rows;
  std::set<std::pair<std::string, std::string>> seen;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() < 6) {
      throw ParseError(path.string(), line_no,
                       "expected 6 run columns, got " + std::to_string(fields.size()));
    }
    const std::string& query_id = fields[0];
    const std::string& passage_id = fields[2];
    long long rank = 0;
    if (!parse_int_strict(fields[3], rank)) {
      throw ParseError(path.string(), line_no, "bad rank field '" + fields[3] + "'");
    }
    double score = 0.0;
    if (!parse_double_strict(fields[4], score)) {
      throw ParseError(path.string(), line_no, "bad score field '" + fields[4] + "'");
    }
    if (!seen.emplace(query_id, passage_id).second) {
      throw ParseError(path.string(), line_no,
                       "duplicate passage " + passage_id + " for query " + query_id);
    }
    rows[query_id].push_back(RunRow{rank, line_no, RankEntry{passage_id, score, 0}});
  }

  RunMap out;
  for (auto& [query_id, query_rows] : rows) {
    std::sort(query_rows.begin(), query_rows.end(), [](const RunRow& a, const RunRow& b) {
      if (a.rank != b.rank) return a.rank < b.rank;
      return a.line_no < b.line_no;
    });
    std::vector<RankEntry> entries;
    entries.reserve(query_rows.size());
    for (auto& row : query_rows) entries.push_back(std::move(row.entry));
    out.emplace(query_id, RankedList(query_id, std::move(entries)));
  }
  return out;
}

void write_run(const RunMap& lists, const std::string& tag,
               const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  for (const auto& [query_id, list] : lists) {
    for (const auto& entry : list.entries()) {
      out << query_id << " Q0 " << entry.passage_id << ' ' << entry.rank << ' '
          << format_fixed(entry.score, 6) << ' ' << tag << '\n';
    }
  }
  if (!out.good()) throw Error("write failed for " + path.string());
}

JudgmentSet read_qrels(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  JudgmentSet judgments;
  std::string line;
  std::size_t line_no = 0;
  bool warned_high_level = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() < 4) {
      throw ParseError(path.string(), line_no,
                       "expected 4 qrels columns, got " + std::to_string(fields.size()));
    }
    long long level = 0;
    if (!parse_int_strict(fields[3], level) || level < 0) {
      throw ParseError(path.string(), line_no,
                       "bad relevance level '" + fields[3] + "'");
    }
    if (level > 3 && !warned_high_level) {
      logging::warn(path.string() + ":" + std::to_string(line_no) + ": relevance level " +
                    std::to_string(level) + " above the usual 0..3 range; treated as relevant");
      warned_high_level = true;
    }
    try {
      judgments.add(Judgment{fields[0], fields[2], static_cast<int>(level)});
    } catch (const Error& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return judgments;
}

void write_qrels(const JudgmentSet& judgments, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  for (const auto& [query_id, per_query] : judgments.by_query()) {
    for (const auto& [passage_id, level] : per_query) {
      out << query_id << " 0 " << passage_id << ' ' << level << '\n';
    }
  }
  if (!out.good()) throw Error("write failed for " + path.string());
}

namespace {

// Shared JSONL reader for corpora and query sets.
template <typename Item, typename Make>
std::map<std::string, Item> read_jsonl(const std::filesystem::path& path, Make make,
                                       const char* what) {
  std::ifstream in = open_input(path);
  std::map<std::string, Item> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (blank) {
      logging::warn(path.string() + ":" + std::to_string(line_no) + ": blank line skipped");
      continue;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    if (!doc.is_object() || !doc.contains("id") || !doc.contains("text")) {
      throw ParseError(path.string(), line_no,
                       std::string(what) + " object needs 'id' and 'text'");
    }
    std::string id = doc.at("id").get<std::string>();
    std::string text = doc.at("text").get<std::string>();
    if (doc.contains("title") && doc.at("title").is_string()) {
      std::string title = doc.at("title").get<std::string>();
      if (!title.empty()) text = title + " " + text;
    }
    if (id.empty()) throw ParseError(path.string(), line_no, "empty id");
    if (text.empty()) throw ParseError(path.string(), line_no, "empty text");
    Item item = make(id, std::move(text));
    if (!out.emplace(std::move(id), std::move(item)).second) {
      throw ParseError(path.string(), line_no, "duplicate id");
    }
  }
  return out;
}

}  // namespace

Corpus read_corpus(const std::filesystem::path& path) {
  return read_jsonl<Passage>(
      path, [](std::string id, std::string text) { return Passage{std::move(id), std::move(text)}; },
      "corpus");
}

QuerySet read_queries(const std::filesystem::path& path) {
  return read_jsonl<Query>(
      path, [](std::string id, std::string text) { return Query{std::move(id), std::move(text)}; },
      "query");
}

}  // namespace winnow::trec_io
