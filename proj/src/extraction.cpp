#include "discourse/extraction.hpp"

#include <sstream>

#include "discourse/errors.hpp"
#include "discourse/text.hpp"

namespace discourse {

ExtractionMode extraction_mode_from_string(const std::string& s) {
  if (text::iequals(s, "deterministic")) return ExtractionMode::Deterministic;
  if (text::iequals(s, "llm")) return ExtractionMode::Llm;
  throw ConfigError("unknown extraction mode: " + s);
}

std::string to_string(ExtractionMode mode) {
  return mode == ExtractionMode::Deterministic ? "deterministic" : "llm";
}

bool operator==(const Addressee& a, const Addressee& b) {
  if (a.is_broadcast() != b.is_broadcast()) return false;
  return a.is_broadcast() || text::iequals(a.name(), b.name());
}

std::string to_string(const Addressee& a) {
  return a.is_broadcast() ? "everyone" : a.name();
}

Addressee addressee_from_string(const std::string& s) {
  if (text::iequals(text::trim(s), "everyone")) return Addressee::broadcast();
  return Addressee::to(text::trim(s));
}

namespace {

// Resolves a free-form name against the roster, canonicalizing its casing.
// Unknown names dissolve into a broadcast.
Addressee resolve_addressee(const std::string& value, const std::vector<std::string>& roster) {
  std::string name = text::trim(value);
  if (name.empty() || text::iequals(name, "everyone")) return Addressee::broadcast();
  for (const auto& member : roster) {
    if (text::iequals(member, name)) return Addressee::to(member);
  }
  return Addressee::broadcast();
}

std::optional<std::string> resolve_summon(const std::string& value) {
  std::string description = text::trim(value);
  if (description.empty() || text::iequals(description, "none")) return std::nullopt;
  return description;
}

// Earliest participant name mentioned in the sentence, on word boundaries.
std::optional<std::string> earliest_mention(const std::string& sentence,
                                            const std::vector<std::string>& roster) {
  std::optional<std::string> best;
  size_t best_pos = std::string::npos;
  for (const auto& member : roster) {
    if (auto pos = text::ifind_word(sentence, member)) {
      if (*pos < best_pos) {
        best_pos = *pos;
        best = member;
      }
    }
  }
  return best;
}

}  // namespace

ExtractionResult fallback_parse(const std::string& raw_reply,
                                const std::vector<std::string>& roster) {
  ExtractionResult result;

  std::optional<std::string> addressee_line;
  std::optional<std::string> summon_line;
  std::vector<std::string> parts;
  std::ostringstream part;
  bool part_open = false;

  auto close_part = [&] {
    std::string trimmed = text::trim(part.str());
    if (!trimmed.empty()) parts.push_back(std::move(trimmed));
    part.str("");
    part.clear();
    part_open = false;
  };

  for (const auto& line : text::split_lines(raw_reply)) {
    std::string trimmed = text::trim(line);
    if (trimmed == "---") {
      close_part();
      continue;
    }
    if (auto value = text::labeled_value(trimmed, "ADDRESSEE")) {
      if (!addressee_line) addressee_line = *value;
      continue;
    }
    if (auto value = text::labeled_value(trimmed, "SUMMON")) {
      if (!summon_line) summon_line = *value;
      continue;
    }
    if (part_open) part << '\n';
    part << line;
    part_open = true;
  }
  close_part();

  if (parts.empty()) {
    // Nothing but markup: keep the raw reply so the record never goes blank.
    parts.push_back(text::trim(raw_reply));
  }
  result.utterances = parts;
  result.content = text::join(parts, "\n\n");

  if (summon_line) result.summon_request = resolve_summon(*summon_line);

  if (addressee_line) {
    result.addressee = resolve_addressee(*addressee_line, roster);
  } else {
    auto sentences = text::split_sentences(result.utterances.front());
    if (!sentences.empty()) {
      if (auto mention = earliest_mention(sentences.front(), roster)) {
        result.addressee = Addressee::to(*mention);
      }
    }
  }

  return result;
}

const std::string& extractor_system_prompt() {
  static const std::string prompt =
      "You are the routing clerk of a multi-party conference. You receive one reply "
      "written by a participant and you restate how it should be routed.\n"
      "Answer with exactly three labeled lines:\n"
      "ADDRESSEE: <the single participant the reply speaks to, or \"everyone\">\n"
      "SUMMON: <the new expert the reply asks to bring in, or \"none\">\n"
      "CONTENT: <the reply restated without any routing lines>\n"
      "Never add commentary. When a field is uncertain, write \"everyone\" or \"none\".";
  return prompt;
}

ExtractionResult extract_turn(const std::string& raw_reply,
                              const std::vector<std::string>& roster,
                              ExtractionMode mode,
                              Backend* extractor) {
  ExtractionResult result = fallback_parse(raw_reply, roster);
  if (mode == ExtractionMode::Deterministic || extractor == nullptr) return result;

  CompletionRequest request;
  request.system_prompt = extractor_system_prompt();
  request.history.push_back({"user", raw_reply});
  request.temperature = 0.0;

  std::string reply;
  try {
    reply = extractor->complete(request);
  } catch (const Error&) {
    return result;
  }

  std::optional<std::string> addressee_field;
  std::optional<std::string> summon_field;
  for (const auto& line : text::split_lines(reply)) {
    std::string trimmed = text::trim(line);
    if (auto value = text::labeled_value(trimmed, "ADDRESSEE")) {
      if (!addressee_field) addressee_field = *value;
    } else if (auto value = text::labeled_value(trimmed, "SUMMON")) {
      if (!summon_field) summon_field = *value;
    }
  }
  // Without both routing fields the exchange is unusable; keep the fallback.
  if (!addressee_field || !summon_field) return result;

  result.addressee = resolve_addressee(*addressee_field, roster);
  if (!result.summon_request) result.summon_request = resolve_summon(*summon_field);
  return result;
}

}  // namespace discourse
