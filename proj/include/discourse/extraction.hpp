#pragma once

#include <optional>
#include <string>
#include <vector>

#include "discourse/backend.hpp"

namespace discourse {

enum class ExtractionMode { Deterministic, Llm };

ExtractionMode extraction_mode_from_string(const std::string& s);
std::string to_string(ExtractionMode mode);

// Routing target of a message: one named participant or the whole assembly.
struct Addressee {
  static Addressee broadcast() { return Addressee{}; }
  static Addressee to(std::string name) {
    Addressee a;
    a.target = std::move(name);
    return a;
  }

  bool is_broadcast() const { return !target.has_value(); }
  const std::string& name() const { return *target; }

  std::optional<std::string> target;
};

bool operator==(const Addressee& a, const Addressee& b);
std::string to_string(const Addressee& a);
Addressee addressee_from_string(const std::string& s);

struct ExtractionResult {
  Addressee addressee;
  std::optional<std::string> summon_request;
  // The reply with routing lines and utterance separators stripped out.
  std::string content;
  // The reply split on separator lines; each entry becomes one message. Never
  // empty: a reply that is all markup degenerates to the raw text itself.
  std::vector<std::string> utterances;
};

// Deterministic reading of a raw reply. Routing comes from an explicit
// "ADDRESSEE:" line when present, otherwise from the earliest participant
// name mentioned in the first sentence, otherwise the whole assembly.
// A "SUMMON:" line carries a request for a new expert ("none" means no
// request). Lines holding only "---" split the reply into utterances.
ExtractionResult fallback_parse(const std::string& raw_reply,
                                const std::vector<std::string>& roster);

// Reads a raw reply, optionally routing it through an extractor exchange.
// The extractor sees only the reply itself, never the session history; its
// answer can refine the addressee and supply a summon request, but stored
// content always comes from the raw reply. Any extractor failure falls back
// to the deterministic reading.
ExtractionResult extract_turn(const std::string& raw_reply,
                              const std::vector<std::string>& roster,
                              ExtractionMode mode,
                              Backend* extractor = nullptr);

// Instruction sheet for the extractor exchange. Mirrored by an asset file so
// it can be inspected and versioned alongside the other prompts.
const std::string& extractor_system_prompt();

}  // namespace discourse
