#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "discourse/backend.hpp"
#include "discourse/errors.hpp"
#include "discourse/extraction.hpp"
#include "discourse/persona.hpp"
#include "discourse/rng.hpp"
#include "discourse/scenario.hpp"

namespace discourse {

enum class MessageKind { Bootstrap, AgentTurn, ModeratorInsert, SystemAnnouncement, Summary };

std::string to_string(MessageKind kind);
MessageKind message_kind_from_string(const std::string& s);

struct Message {
  size_t index = 0;
  std::string speaker;
  Addressee addressee;
  MessageKind kind = MessageKind::AgentTurn;
  std::string content;
};

struct AssemblyEntry {
  std::string role_name;
  // Index of the announcement for summoned roles; 0 for the initial assembly.
  size_t joined_at_index = 0;
};

struct ModeratorCheck {
  // Message index the check happened at (the index an inserted analysis got,
  // or would have gotten).
  size_t at_index = 0;
  std::string analysis;
  bool inserted = false;
};

struct SessionSettings {
  size_t max_iterations = 20;
  size_t moderator_period = 6;
  size_t summon_cap = 3;
  double temperature = 0.7;
  int max_tokens = 1024;
  ExtractionMode extraction = ExtractionMode::Deterministic;
  // Early stop once this many consecutive turns passed without a new agent
  // joining. Unset means "as long as the whole session", i.e. disabled.
  std::optional<size_t> stability_window;

  size_t effective_stability_window() const {
    return stability_window.value_or(max_iterations);
  }
  void validate() const;
};

struct SessionConfig {
  SessionSettings settings;
  uint64_t seed = 0;
  std::vector<PersonaSpec> initial_personas;

  void validate() const;
  const PersonaSpec& moderator() const;
};

struct Transcript {
  ScenarioInstance scenario;
  uint64_t seed = 0;
  SessionSettings settings;
  std::vector<Message> messages;
  std::vector<AssemblyEntry> assembly_log;
  std::vector<ModeratorCheck> moderator_log;

  size_t agent_turn_count() const;
  const Message* summary_message() const;
  void validate() const;
};

struct ConvergenceMetrics {
  size_t assembly_size = 0;
  std::vector<std::string> roles;
  std::map<std::string, double> participation_rate;
  size_t summons_used = 0;
  bool no_agent_turns = false;
};

ConvergenceMetrics convergence_metrics(const Transcript& transcript);

struct RunOutput {
  Transcript transcript;
  std::string summary;
  ConvergenceMetrics convergence;
  bool summary_failed = false;
  bool summary_malformed = false;
};

// Thrown when a backend failure stops a session mid-flight. Carries the
// partial transcript (no summary) so callers can persist it.
class SessionAborted : public Error {
 public:
  SessionAborted(const std::string& reason, Transcript partial)
      : Error(reason), partial_(std::make_shared<Transcript>(std::move(partial))) {}

  const Transcript& partial_transcript() const { return *partial_; }

 private:
  std::shared_ptr<const Transcript> partial_;
};

// Picks who speaks next. A directed address wins when it names a present
// participant other than the current speaker and the moderator; otherwise
// the speaker is drawn uniformly from everyone else. Only the random path
// advances the generator, so directed exchanges never perturb seeding.
std::string select_next_speaker(const ExtractionResult& extraction,
                                const std::vector<std::string>& assembly,
                                const std::string& current_speaker,
                                const std::string& moderator_name,
                                Rng& rng);

struct ModeratorVerdict {
  bool refocus = false;
  std::string analysis;
};

// Reads the labeled "VERDICT:" line of a moderator analysis. Anything that
// does not parse counts as log-only, keeping the moderator out of the
// conversation by default.
ModeratorVerdict parse_moderator_verdict(const std::string& reply);

// Summary text used when a session ends with zero agent turns.
const std::string& empty_session_summary();

// Runs one full session: bootstrap, turn loop with moderator cadence and
// summoning, then the terminal summary. The extractor backend serves llm
// extraction mode; when omitted the main backend doubles as extractor.
RunOutput run_session(const SessionConfig& config,
                      const ScenarioInstance& scenario,
                      Backend& backend,
                      Backend* extractor = nullptr);

}  // namespace discourse
