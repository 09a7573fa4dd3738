#include "doctest.h"

#include "discourse/text.hpp"

using namespace discourse;

TEST_CASE("trim strips surrounding whitespace only") {
  CHECK(text::trim("  hello  ") == "hello");
  CHECK(text::trim("\n\ta b\r\n") == "a b");
  CHECK(text::trim("") == "");
  CHECK(text::trim("   ") == "");
}

TEST_CASE("case-insensitive comparison and lowering") {
  CHECK(text::to_lower("MaYoR") == "mayor");
  CHECK(text::iequals("Scientist", "sCIENTIST"));
  CHECK_FALSE(text::iequals("Scientist", "Scientists"));
}

TEST_CASE("split_lines keeps empty lines and trailing remainder") {
  auto lines = text::split_lines("a\n\nb\n");
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "a");
  CHECK(lines[1] == "");
  CHECK(lines[2] == "b");
  CHECK(lines[3] == "");
}

TEST_CASE("join is the inverse of splitting on the separator") {
  CHECK(text::join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(text::join({}, ", ") == "");
  CHECK(text::join({"solo"}, "-") == "solo");
}

TEST_CASE("sentence splitting ends on terminator plus boundary") {
  auto sentences = text::split_sentences("First point. Second one! Third? Done.");
  REQUIRE(sentences.size() == 4);
  CHECK(sentences[0] == "First point.");
  CHECK(sentences[1] == "Second one!");
  CHECK(sentences[2] == "Third?");
  CHECK(sentences[3] == "Done.");
}

TEST_CASE("sentence splitting ignores mid-token periods") {
  auto sentences = text::split_sentences("Flooding hit 3.5 feet. We act now.");
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0] == "Flooding hit 3.5 feet.");
}

TEST_CASE("sentence splitting drops blank segments") {
  auto sentences = text::split_sentences("  One.   \n\n  Two.  ");
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0] == "One.");
  CHECK(sentences[1] == "Two.");
  CHECK(text::split_sentences("").empty());
}

TEST_CASE("ifind is case-insensitive") {
  CHECK(text::ifind("The MAYOR spoke", "mayor") == 4);
  CHECK_FALSE(text::ifind("nothing here", "mayor").has_value());
}

TEST_CASE("ifind_word requires word boundaries") {
  CHECK(text::ifind_word("the mayor spoke", "mayor") == 4);
  CHECK_FALSE(text::ifind_word("mayoral duties", "mayor").has_value());
  CHECK(text::ifind_word("Mayor, hello", "mayor") == 0);
  CHECK(text::ifind_word("ask the mayor", "mayor") == 8);
  CHECK_FALSE(text::ifind_word("Anne agreed", "Ann").has_value());
}

TEST_CASE("count_occurrences counts non-overlapping hits") {
  CHECK(text::count_occurrences("abcabcabc", "abc") == 3);
  CHECK(text::count_occurrences("aaaa", "aa") == 2);
  CHECK(text::count_occurrences("abc", "") == 0);
}

TEST_CASE("labeled_value reads a label prefix case-insensitively") {
  auto value = text::labeled_value("ADDRESSEE: Scientist", "ADDRESSEE");
  REQUIRE(value.has_value());
  CHECK(*value == "Scientist");
  CHECK(text::labeled_value("addressee:  everyone  ", "ADDRESSEE") == "everyone");
  CHECK_FALSE(text::labeled_value("ADDRESS: Scientist", "ADDRESSEE").has_value());
  CHECK_FALSE(text::labeled_value("We discussed ADDRESSEE: X", "ADDRESSEE").has_value());
  CHECK(text::labeled_value("SUMMON:", "SUMMON") == "");
}
