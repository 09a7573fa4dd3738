#include "doctest.h"

#include <algorithm>
#include <cctype>

#include "discourse/errors.hpp"
#include "discourse/extraction.hpp"
#include "discourse/text.hpp"
#include "../tests/support/helpers.hpp"

using namespace discourse;

namespace {

const std::vector<std::string> kRoster = {"Mayor", "Scientist", "Spokesperson", "Moderator"};

// Independent scan for the first whole-word roster mention, used to
// cross-check the routing decision on multi-name sentences.
std::optional<std::string> first_mention_oracle(const std::string& sentence,
                                                const std::vector<std::string>& roster) {
  auto lower = text::to_lower(sentence);
  size_t best_pos = std::string::npos;
  std::optional<std::string> best;
  for (const auto& member : roster) {
    auto needle = text::to_lower(member);
    for (size_t pos = lower.find(needle); pos != std::string::npos;
         pos = lower.find(needle, pos + 1)) {
      bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]));
      size_t end = pos + needle.size();
      bool right_ok =
          end >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
      if (left_ok && right_ok) {
        if (pos < best_pos) {
          best_pos = pos;
          best = member;
        }
        break;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("a lowercase mention routes to the named participant") {
  auto result = fallback_parse("I agree with the steps proposed by our scientist.", kRoster);
  CHECK(result.addressee == Addressee::to("Scientist"));
  CHECK(!result.summon_request.has_value());
  CHECK(result.content == "I agree with the steps proposed by our scientist.");
  REQUIRE(result.utterances.size() == 1);
}

TEST_CASE("a summon line is lifted out of the stored content") {
  auto result = fallback_parse("SUMMON: hydrologist\nWe need flow forecasts.", kRoster);
  REQUIRE(result.summon_request.has_value());
  CHECK(*result.summon_request == "hydrologist");
  CHECK(result.content == "We need flow forecasts.");
  CHECK(result.addressee.is_broadcast());
}

TEST_CASE("a vocative opening routes to that participant") {
  auto result = fallback_parse("Scientist, what is the inflow estimate?", kRoster);
  CHECK(result.addressee == Addressee::to("Scientist"));
}

TEST_CASE("with several names, the earliest mention in the first sentence wins") {
  std::string reply = "Mayor and Scientist, please review the drainage plan together.";
  auto result = fallback_parse(reply, kRoster);
  auto oracle = first_mention_oracle(text::split_sentences(reply).front(), kRoster);
  REQUIRE(oracle.has_value());
  CHECK(*oracle == "Mayor");
  CHECK(result.addressee == Addressee::to(*oracle));
}

TEST_CASE("mentions outside the first sentence do not route") {
  auto result =
      fallback_parse("We should act quickly. Scientist raised this point earlier.", kRoster);
  CHECK(result.addressee.is_broadcast());
}

TEST_CASE("no mention means the whole assembly") {
  auto result = fallback_parse("Good morning everyone.", kRoster);
  CHECK(result.addressee.is_broadcast());
}

TEST_CASE("word boundaries guard against partial name hits") {
  auto result = fallback_parse("The mayoral office issued a statement.", kRoster);
  CHECK(result.addressee.is_broadcast());
}

TEST_CASE("an explicit addressee line outranks any mention") {
  auto result =
      fallback_parse("ADDRESSEE: Spokesperson\nScientist, your thoughts on this?", kRoster);
  CHECK(result.addressee == Addressee::to("Spokesperson"));
  CHECK(result.content == "Scientist, your thoughts on this?");
}

TEST_CASE("addressee lines resolve case-insensitively to roster casing") {
  auto result = fallback_parse("addressee: scientist\nPlease weigh in.", kRoster);
  REQUIRE(!result.addressee.is_broadcast());
  CHECK(result.addressee.name() == "Scientist");
}

TEST_CASE("unknown or broadcast addressee lines dissolve into everyone") {
  CHECK(fallback_parse("ADDRESSEE: Wizard\nHello.", kRoster).addressee.is_broadcast());
  CHECK(fallback_parse("ADDRESSEE: everyone\nHello.", kRoster).addressee.is_broadcast());
  CHECK(fallback_parse("ADDRESSEE:\nScientist, hello.", kRoster).addressee.is_broadcast());
}

TEST_CASE("only the first addressee and summon lines count") {
  auto result = fallback_parse(
      "ADDRESSEE: Mayor\nADDRESSEE: Scientist\nSUMMON: hydrologist\nSUMMON: meteorologist\n"
      "The dam report is ready.",
      kRoster);
  CHECK(result.addressee == Addressee::to("Mayor"));
  REQUIRE(result.summon_request.has_value());
  CHECK(*result.summon_request == "hydrologist");
  CHECK(result.content == "The dam report is ready.");
}

TEST_CASE("separator lines split a reply into utterances") {
  auto result = fallback_parse("First point.\n---\nSecond point, expanded.\n---\nClosing.",
                               kRoster);
  REQUIRE(result.utterances.size() == 3);
  CHECK(result.utterances[0] == "First point.");
  CHECK(result.utterances[1] == "Second point, expanded.");
  CHECK(result.utterances[2] == "Closing.");
  CHECK(result.content == "First point.\n\nSecond point, expanded.\n\nClosing.");
}

TEST_CASE("blank lines inside an utterance survive, empty utterances vanish") {
  auto result = fallback_parse("Line one.\n\nLine two.\n---\n---\nTail.", kRoster);
  REQUIRE(result.utterances.size() == 2);
  CHECK(result.utterances[0] == "Line one.\n\nLine two.");
  CHECK(result.utterances[1] == "Tail.");
}

TEST_CASE("an all-markup reply keeps its raw text as the single utterance") {
  std::string raw = "ADDRESSEE: Scientist\nSUMMON: hydrologist";
  auto result = fallback_parse(raw, kRoster);
  REQUIRE(result.utterances.size() == 1);
  CHECK(result.utterances[0] == raw);
  CHECK(result.content == raw);
  CHECK(result.addressee == Addressee::to("Scientist"));
  REQUIRE(result.summon_request.has_value());
}

TEST_CASE("summon none and empty summons mean no request") {
  CHECK(!fallback_parse("SUMMON: none\nCarry on.", kRoster).summon_request.has_value());
  CHECK(!fallback_parse("SUMMON:\nCarry on.", kRoster).summon_request.has_value());
  CHECK(!fallback_parse("SUMMON:   \nCarry on.", kRoster).summon_request.has_value());
}

TEST_CASE("parsing is a pure function of the reply and roster") {
  std::vector<std::string> replies = {
      "Scientist, the levee data is in.",
      "SUMMON: hydrologist\nWe need the flow model.",
      "Good evening.\n---\nLet us begin.",
  };
  std::vector<ExtractionResult> forward, backward;
  for (const auto& r : replies) forward.push_back(fallback_parse(r, kRoster));
  for (auto it = replies.rbegin(); it != replies.rend(); ++it)
    backward.push_back(fallback_parse(*it, kRoster));
  std::reverse(backward.begin(), backward.end());
  for (size_t i = 0; i < replies.size(); ++i) {
    CHECK(forward[i].addressee == backward[i].addressee);
    CHECK(forward[i].content == backward[i].content);
    CHECK(forward[i].summon_request == backward[i].summon_request);
  }
}

TEST_CASE("the extractor exchange sees only the raw reply") {
  FixedResponderBackend inner({"ADDRESSEE: Scientist\nSUMMON: none\nCONTENT: restated"});
  testsupport::RecordingBackend extractor(inner);
  std::string raw = "Good morning, let us get started.";
  auto result = extract_turn(raw, kRoster, ExtractionMode::Llm, &extractor);
  REQUIRE(extractor.requests.size() == 1);
  const auto& request = extractor.requests[0];
  CHECK(request.system_prompt == extractor_system_prompt());
  REQUIRE(request.history.size() == 1);
  CHECK(request.history[0].role == "user");
  CHECK(request.history[0].content == raw);
  CHECK(request.temperature == doctest::Approx(0.0));

  CHECK(result.addressee == Addressee::to("Scientist"));
  // Stored content always comes from the raw reply, not the restatement.
  CHECK(result.content == raw);
}

TEST_CASE("a summon in the reply itself outranks the extractor's field") {
  FixedResponderBackend extractor({"ADDRESSEE: everyone\nSUMMON: meteorologist"});
  auto result = extract_turn("SUMMON: hydrologist\nWe need forecasts.", kRoster,
                             ExtractionMode::Llm, &extractor);
  REQUIRE(result.summon_request.has_value());
  CHECK(*result.summon_request == "hydrologist");
}

TEST_CASE("the extractor can contribute a summon the parser missed") {
  FixedResponderBackend extractor({"ADDRESSEE: everyone\nSUMMON: meteorologist"});
  auto result = extract_turn("Someone should check the storm track.", kRoster,
                             ExtractionMode::Llm, &extractor);
  REQUIRE(result.summon_request.has_value());
  CHECK(*result.summon_request == "meteorologist");
}

TEST_CASE("an extractor answer missing a field is discarded wholesale") {
  FixedResponderBackend extractor({"ADDRESSEE: Spokesperson"});
  auto result = extract_turn("Scientist, please continue.", kRoster, ExtractionMode::Llm,
                             &extractor);
  CHECK(result.addressee == Addressee::to("Scientist"));
}

TEST_CASE("an extractor failure falls back to the deterministic reading") {
  testsupport::FailAfterBackend extractor("unused", 0);
  auto result =
      extract_turn("Scientist, please continue.", kRoster, ExtractionMode::Llm, &extractor);
  CHECK(result.addressee == Addressee::to("Scientist"));
}

TEST_CASE("an unknown extractor addressee dissolves into everyone") {
  FixedResponderBackend extractor({"ADDRESSEE: Wizard\nSUMMON: none"});
  auto result =
      extract_turn("Scientist, please continue.", kRoster, ExtractionMode::Llm, &extractor);
  CHECK(result.addressee.is_broadcast());
}

TEST_CASE("deterministic mode never consults the extractor") {
  FixedResponderBackend inner({"ADDRESSEE: Spokesperson\nSUMMON: none"});
  testsupport::RecordingBackend extractor(inner);
  auto result = extract_turn("Scientist, please continue.", kRoster,
                             ExtractionMode::Deterministic, &extractor);
  CHECK(extractor.requests.empty());
  CHECK(result.addressee == Addressee::to("Scientist"));
}

TEST_CASE("llm mode without an extractor degrades to the fallback") {
  auto result = extract_turn("Scientist, please continue.", kRoster, ExtractionMode::Llm);
  CHECK(result.addressee == Addressee::to("Scientist"));
}

TEST_CASE("the extractor instruction sheet matches its asset file") {
  auto from_file = testsupport::read_file(testsupport::asset_path("prompts/extractor_system.txt"));
  while (!from_file.empty() && (from_file.back() == '\n' || from_file.back() == '\r'))
    from_file.pop_back();
  CHECK(from_file == extractor_system_prompt());
}

TEST_CASE("addressee values render and compare case-insensitively") {
  CHECK(to_string(Addressee::broadcast()) == "everyone");
  CHECK(to_string(Addressee::to("Mayor")) == "Mayor");
  CHECK(Addressee::to("mayor") == Addressee::to("MAYOR"));
  CHECK(!(Addressee::to("Mayor") == Addressee::broadcast()));
  CHECK(addressee_from_string("everyone").is_broadcast());
  CHECK(addressee_from_string(" Mayor ") == Addressee::to("Mayor"));
}

TEST_CASE("extraction mode names parse in either case") {
  CHECK(extraction_mode_from_string("deterministic") == ExtractionMode::Deterministic);
  CHECK(extraction_mode_from_string("LLM") == ExtractionMode::Llm);
  CHECK(to_string(ExtractionMode::Llm) == "llm");
  CHECK_THROWS_AS(extraction_mode_from_string("psychic"), ConfigError);
}
