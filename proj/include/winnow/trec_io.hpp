#pragma once

#include <filesystem>

#include "winnow/core.hpp"

namespace winnow::trec_io {

// Run file rows: `query_id Q0 passage_id rank score tag`, whitespace-separated.
// Extra trailing columns are ignored. Rows are grouped by query, ordered by
// the rank column, then ranks are renumbered to 1..N.
RunMap read_run(const std::filesystem::path& path);

// Queries are emitted in ascending lexicographic query_id order, scores with
// exactly six decimal places.
void write_run(const RunMap& lists, const std::string& tag,
               const std::filesystem::path& path);

// Qrels rows: `query_id 0 passage_id level`. Identical duplicate rows are
// absorbed; conflicting duplicates are an error.
JudgmentSet read_qrels(const std::filesystem::path& path);
void write_qrels(const JudgmentSet& judgments, const std::filesystem::path& path);

// JSONL, one object per line: {"id": ..., "text": ..., "title"?: ...}.
// A title is prepended to the text with a single space. Blank lines are
// skipped with a warning.
Corpus read_corpus(const std::filesystem::path& path);
QuerySet read_queries(const std::filesystem::path& path);

}  // namespace winnow::trec_io
