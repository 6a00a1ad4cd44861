#include <doctest.h>

#include <regex>

#include "helpers.hpp"
#include "winnow/scoring.hpp"

using namespace winnow;
using winnow::testing::CallbackBackend;
using winnow::testing::descending_list;
using winnow::testing::numbered_corpus;
using winnow::testing::WarningCapture;

namespace {

int count_occurrences(const std::string& haystack, const std::string& needle) {
  int count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

std::vector<Passage> make_chunk(int count) {
  std::vector<Passage> chunk;
  for (int i = 1; i <= count; ++i) {
    chunk.push_back({"p" + std::to_string(i), "words about topic " + std::to_string(i)});
  }
  return chunk;
}

Gateway oracle_gateway(const JudgmentSet& judgments, double noise = 0.0,
                       std::uint64_t seed = 0) {
  BackendConfig config;
  config.kind = BackendKind::mock_oracle;
  config.oracle_noise = noise;
  config.oracle_seed = seed;
  return Gateway(std::make_shared<MockOracleBackend>(judgments, noise, seed), config);
}

}  // namespace

TEST_CASE("build_scoring_prompt labels each passage exactly once") {
  Query query{"q1", "effects of coffee"};
  ScoringPromptTemplate tmpl;

  SUBCASE("chunk of five") {
    GenerationRequest request = build_scoring_prompt(query, make_chunk(5), tmpl);
    for (int i = 1; i <= 5; ++i) {
      CHECK(count_occurrences(request.user_prompt, "[" + std::to_string(i) + "]") == 1);
    }
    CHECK(count_occurrences(request.user_prompt, "[6]") == 0);
    CHECK(request.user_prompt.find(query.text) != std::string::npos);
    CHECK(request.user_prompt.find(tmpl.instruction_text) != std::string::npos);
    CHECK(request.user_prompt.find("Passage [i]:") != std::string::npos);
    REQUIRE(request.context.has_value());
    CHECK(request.context->passage_ids.size() == 5);
    CHECK(request.context->task == RequestContext::Task::score);
  }

  SUBCASE("singleton chunk") {
    GenerationRequest request = build_scoring_prompt(query, make_chunk(1), tmpl);
    CHECK(count_occurrences(request.user_prompt, "[1]") == 1);
  }

  SUBCASE("oversized chunk rejected") {
    CHECK_THROWS_AS(build_scoring_prompt(query, make_chunk(6), tmpl), Error);
  }
}

TEST_CASE("build_scoring_prompt truncates to the word budget") {
  Query query{"q1", "q"};
  ScoringPromptTemplate tmpl;
  tmpl.passage_word_budget = 300;

  std::string text;
  for (int i = 1; i <= 400; ++i) text += "w" + std::to_string(i) + " ";
  GenerationRequest request = build_scoring_prompt(query, {{"p1", text}}, tmpl);
  CHECK(request.user_prompt.find("w300") != std::string::npos);
  CHECK(request.user_prompt.find("w301") == std::string::npos);
  CHECK(request.user_prompt.find("[truncated]") != std::string::npos);
}

TEST_CASE("parse_scores reads labeled decimals") {
  SUBCASE("direct parse") {
    ScoreParseReport report =
        parse_scores("Passage [1]: 0.8\nPassage [2]: 0.1", "q1", {"a", "b"});
    REQUIRE(report.parsed.size() == 2);
    CHECK(report.parsed[0].value == doctest::Approx(0.8));
    CHECK(report.parsed[1].value == doctest::Approx(0.1));
    CHECK(report.unparsed_passage_ids.empty());
  }

  SUBCASE("values outside [0,1] clamp with warning") {
    WarningCapture capture;
    ScoreParseReport report =
        parse_scores("long rationale ... Passage [1]: 1.3", "q1", {"a"});
    REQUIRE(report.parsed.size() == 1);
    CHECK(report.parsed[0].value == 1.0);
    CHECK(capture.any_contains("clamped"));

    report = parse_scores("Passage [1]: -0.2", "q1", {"a"});
    CHECK(report.parsed[0].value == 0.0);
  }

  SUBCASE("no labels at all") {
    ScoreParseReport report = parse_scores("I cannot assess these.", "q1", {"a", "b", "c"});
    CHECK(report.parsed.empty());
    CHECK(report.unparsed_passage_ids == std::vector<std::string>{"a", "b", "c"});
  }

  SUBCASE("last occurrence of a label wins") {
    ScoreParseReport report =
        parse_scores("Passage [1]: 0.2 ... on reflection Passage [1]: 0.9", "q1", {"a"});
    REQUIRE(report.parsed.size() == 1);
    CHECK(report.parsed[0].value == doctest::Approx(0.9));
  }

  SUBCASE("labels outside the chunk are ignored") {
    ScoreParseReport report = parse_scores("Passage [7]: 0.5", "q1", {"a"});
    CHECK(report.parsed.empty());
    CHECK(report.unparsed_passage_ids.size() == 1);
  }

  SUBCASE("rationale text mentioning scores does not confuse labels") {
    ScoreParseReport report = parse_scores(
        "The query asks about X. Passage [2] is on-topic while passage [1] is not.\n"
        "Passage [1]: 0.05\nPassage [2]: 0.95",
        "q1", {"a", "b"});
    REQUIRE(report.parsed.size() == 2);
    CHECK(report.parsed[0].value == doctest::Approx(0.05));
    CHECK(report.parsed[1].value == doctest::Approx(0.95));
  }
}

TEST_CASE("score_ranked_list chunks the list and matches the oracle exactly") {
  // 100 passages in chunks of 5: 20 calls, scores equal level/max_level.
  const int n = 100;
  Corpus corpus = numbered_corpus(n);
  std::vector<std::string> ids;
  JudgmentSet judgments;
  for (int i = 1; i <= n; ++i) {
    const std::string id = "p" + std::to_string(i);
    ids.push_back(id);
    judgments.add({"q1", id, i % 4});
  }
  RankedList list = descending_list("q1", ids);
  Query query{"q1", "numbered passages"};

  Gateway gateway = oracle_gateway(judgments);
  ScoringPromptTemplate tmpl;
  ScoringResult result = score_ranked_list(query, list, corpus, tmpl, gateway, 1);

  CHECK(result.llm_calls == 20);
  CHECK(result.retries_used == 0);
  REQUIRE(result.scores.size() == static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const std::string id = "p" + std::to_string(i);
    const double expected = static_cast<double>(i % 4) / 3.0;
    CHECK(result.scores.at(id).value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(!result.scores.at(id).fallback);
  }
}

TEST_CASE("score_ranked_list edge cases") {
  Corpus corpus = numbered_corpus(7);
  Query query{"q1", "q"};
  ScoringPromptTemplate tmpl;

  SUBCASE("empty list: no calls, empty map") {
    JudgmentSet judgments;
    judgments.add({"q1", "p1", 1});
    Gateway gateway = oracle_gateway(judgments);
    RankedList empty("q1", {});
    ScoringResult result = score_ranked_list(query, empty, corpus, tmpl, gateway, 1);
    CHECK(result.scores.empty());
    CHECK(result.llm_calls == 0);
  }

  SUBCASE("missing passage text is an error naming the id") {
    JudgmentSet judgments;
    judgments.add({"q1", "p1", 1});
    Gateway gateway = oracle_gateway(judgments);
    RankedList list = descending_list("q1", {"p1", "ghost"});
    CHECK_THROWS_WITH_AS(score_ranked_list(query, list, corpus, tmpl, gateway, 1),
                         doctest::Contains("ghost"), Error);
  }

  SUBCASE("unparsed passages retried in singleton chunks, then fallback") {
    WarningCapture capture;
    // Chunk responses omit the third label; singleton retries answer only p2.
    auto backend = std::make_shared<CallbackBackend>([](const GenerationRequest& request) {
      const auto& ids = request.context->passage_ids;
      if (ids.size() > 1) {
        return std::string("Passage [1]: 0.6\nPassage [2]: 0.4");
      }
      if (ids[0] == "p2") return std::string("Passage [1]: 0.35");
      return std::string("still confused");
    });
    BackendConfig config;
    config.kind = BackendKind::mock_scripted;
    Gateway gateway(backend, config);

    RankedList list = descending_list("q1", {"p1", "p2", "p3"});
    ScoringPromptTemplate chunked = tmpl;
    chunked.chunk_size = 3;
    // First chunk call parses p1, p2 only... the response labels [1] and [2]
    // map to p1 and p2; p3 goes to singleton retries.
    ScoringResult result =
        score_ranked_list(query, list, corpus, chunked, gateway, 2, 0.0);
    CHECK(result.llm_calls == 1 + 2);  // one chunk + two failed singleton retries
    CHECK(result.retries_used == 2);
    REQUIRE(result.scores.count("p3"));
    CHECK(result.scores.at("p3").fallback);
    CHECK(result.scores.at("p3").value == 0.0);
    CHECK(result.fallback_ids == std::vector<std::string>{"p3"});
    CHECK(capture.any_contains("fallback"));

    // Multiset identity: every input id is scored exactly once.
    CHECK(result.scores.size() == 3);
    CHECK(result.scores.count("p1"));
    CHECK(result.scores.count("p2"));
  }

  SUBCASE("singleton retry recovers a score") {
    auto backend = std::make_shared<CallbackBackend>([](const GenerationRequest& request) {
      const auto& ids = request.context->passage_ids;
      if (ids.size() > 1) return std::string("no scores today");
      return std::string("Passage [1]: 0.7");
    });
    BackendConfig config;
    config.kind = BackendKind::mock_scripted;
    Gateway gateway(backend, config);
    RankedList list = descending_list("q1", {"p1", "p2"});
    ScoringResult result = score_ranked_list(query, list, corpus, tmpl, gateway, 1);
    CHECK(result.scores.at("p1").value == doctest::Approx(0.7));
    CHECK(result.scores.at("p2").value == doctest::Approx(0.7));
    CHECK(result.fallback_ids.empty());
    CHECK(result.llm_calls == 3);  // one chunk + two singletons
  }
}

TEST_CASE("call-count law across random list sizes") {
  Query query{"q1", "q"};
  ScoringPromptTemplate tmpl;
  Corpus corpus = numbered_corpus(60);
  JudgmentSet judgments;
  for (int i = 1; i <= 60; ++i) judgments.add({"q1", "p" + std::to_string(i), 1});

  for (int n : {1, 4, 5, 6, 23, 60}) {
    std::vector<std::string> ids;
    for (int i = 1; i <= n; ++i) ids.push_back("p" + std::to_string(i));
    Gateway gateway = oracle_gateway(judgments);
    ScoringResult result =
        score_ranked_list(query, descending_list("q1", ids), corpus, tmpl, gateway, 1);
    const int expected = (n + tmpl.chunk_size - 1) / tmpl.chunk_size;
    CHECK(result.llm_calls == expected);
    CHECK(result.scores.size() == static_cast<std::size_t>(n));
    for (const auto& [id, score] : result.scores) {
      CHECK(score.value >= 0.0);
      CHECK(score.value <= 1.0);
    }
  }
}
