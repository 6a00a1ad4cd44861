#include <doctest.h>

#include "winnow/core.hpp"

using namespace winnow;

TEST_CASE("binarize_level follows the policy") {
  RelevancePolicy beir{1};
  RelevancePolicy trec{2};
  CHECK(binarize_level(1, beir) == 1);
  CHECK(binarize_level(1, trec) == 0);
  CHECK(binarize_level(0, beir) == 0);
  CHECK(binarize_level(0, trec) == 0);
  CHECK(binarize_level(2, trec) == 1);
  CHECK(binarize_level(3, trec) == 1);
}

TEST_CASE("binarize_level is monotone in level and handles grades above 3") {
  for (int min_level : {1, 2}) {
    RelevancePolicy policy{min_level};
    int previous = 0;
    for (int level = 0; level <= 10; ++level) {
      const int value = binarize_level(level, policy);
      CHECK(value >= previous);
      previous = value;
    }
    CHECK(binarize_level(7, policy) == 1);
  }
}

TEST_CASE("JudgmentSet deduplicates and rejects conflicts") {
  JudgmentSet judgments;
  judgments.add({"q1", "d1", 2});
  judgments.add({"q1", "d1", 2});  // identical duplicate absorbed
  CHECK(judgments.size() == 1);
  CHECK_THROWS_AS(judgments.add({"q1", "d1", 1}), Error);
  judgments.add({"q1", "d2", 0});
  judgments.add({"q2", "d1", 3});
  CHECK(judgments.size() == 3);
  CHECK(judgments.max_level() == 3);
  CHECK(judgments.level("q1", "d2") == 0);
  CHECK(!judgments.level("q9", "d1").has_value());
  CHECK(!judgments.level("q1", "d9").has_value());
}

TEST_CASE("JudgmentSet::all is in canonical order") {
  JudgmentSet judgments;
  judgments.add({"q2", "d1", 1});
  judgments.add({"q1", "d2", 2});
  judgments.add({"q1", "d1", 0});
  auto all = judgments.all();
  REQUIRE(all.size() == 3);
  CHECK(all[0].query_id == "q1");
  CHECK(all[0].passage_id == "d1");
  CHECK(all[1].passage_id == "d2");
  CHECK(all[2].query_id == "q2");
}

TEST_CASE("RankedList renumbers ranks and rejects duplicates") {
  RankedList list("q1", {{"a", 9.5, 7}, {"b", 8.0, 3}, {"c", 7.0, 12}});
  REQUIRE(list.size() == 3);
  CHECK(list.entries()[0].rank == 1);
  CHECK(list.entries()[1].rank == 2);
  CHECK(list.entries()[2].rank == 3);
  CHECK(list.entries()[0].passage_id == "a");  // given order preserved
  CHECK(list.contains("b"));
  CHECK(!list.contains("z"));

  CHECK_THROWS_AS(RankedList("q1", {{"a", 1.0, 1}, {"a", 0.5, 2}}), Error);
  CHECK_THROWS_AS(RankedList("", {{"a", 1.0, 1}}), Error);
}

TEST_CASE("RankedList::head keeps the best-ranked prefix") {
  RankedList list("q1", {{"a", 3.0, 0}, {"b", 2.0, 0}, {"c", 1.0, 0}});
  RankedList top2 = list.head(2);
  REQUIRE(top2.size() == 2);
  CHECK(top2.entries()[0].passage_id == "a");
  CHECK(top2.entries()[1].passage_id == "b");
  CHECK(list.head(10).size() == 3);
}
