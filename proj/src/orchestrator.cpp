#include "discourse/orchestrator.hpp"

#include <iostream>

#include "discourse/text.hpp"

namespace discourse {

std::string to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::Bootstrap: return "bootstrap";
    case MessageKind::AgentTurn: return "agent_turn";
    case MessageKind::ModeratorInsert: return "moderator_insert";
    case MessageKind::SystemAnnouncement: return "system_announcement";
    case MessageKind::Summary: return "summary";
  }
  throw Error("unreachable message kind");
}

MessageKind message_kind_from_string(const std::string& s) {
  if (s == "bootstrap") return MessageKind::Bootstrap;
  if (s == "agent_turn") return MessageKind::AgentTurn;
  if (s == "moderator_insert") return MessageKind::ModeratorInsert;
  if (s == "system_announcement") return MessageKind::SystemAnnouncement;
  if (s == "summary") return MessageKind::Summary;
  throw Error("unknown message kind: " + s);
}

void SessionSettings::validate() const {
  if (moderator_period < 2) throw ConfigError("moderator_period must be at least 2");
  if (summon_cap > max_iterations) {
    throw ConfigError("summon_cap cannot exceed max_iterations");
  }
  if (stability_window && *stability_window == 0) {
    throw ConfigError("stability_window must be positive when set");
  }
  if (temperature < 0.0 || temperature > 2.0) {
    throw ConfigError("temperature must lie in [0, 2]");
  }
  if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
}

void SessionConfig::validate() const {
  settings.validate();
  validate_assembly(initial_personas, /*require_moderator=*/true);
  if (settings.max_iterations > 0) {
    size_t participants = 0;
    for (const auto& persona : initial_personas) {
      if (!persona.is_moderator) ++participants;
    }
    if (participants == 0) {
      throw InvalidAssemblyError("a session with turns needs at least one participant");
    }
  }
}

const PersonaSpec& SessionConfig::moderator() const {
  for (const auto& persona : initial_personas) {
    if (persona.is_moderator) return persona;
  }
  throw InvalidAssemblyError("assembly has no moderator");
}

size_t Transcript::agent_turn_count() const {
  size_t count = 0;
  for (const auto& message : messages) {
    if (message.kind == MessageKind::AgentTurn) ++count;
  }
  return count;
}

const Message* Transcript::summary_message() const {
  if (messages.empty() || messages.back().kind != MessageKind::Summary) return nullptr;
  return &messages.back();
}

void Transcript::validate() const {
  if (messages.empty()) throw Error("transcript has no messages");
  for (size_t i = 0; i < messages.size(); ++i) {
    if (messages[i].index != i) {
      throw Error("message indices are not contiguous at position " + std::to_string(i));
    }
  }
  if (messages.front().kind != MessageKind::Bootstrap) {
    throw Error("transcript does not start with the bootstrap");
  }
  size_t summaries = 0;
  for (size_t i = 1; i < messages.size(); ++i) {
    if (messages[i].kind == MessageKind::Bootstrap) throw Error("duplicate bootstrap message");
    if (messages[i].kind == MessageKind::Summary) ++summaries;
  }
  if (summaries > 1) throw Error("more than one summary message");
  if (summaries == 1 && messages.back().kind != MessageKind::Summary) {
    throw Error("summary message is not last");
  }
  for (const auto& message : messages) {
    if (message.kind != MessageKind::AgentTurn) continue;
    bool found = false;
    for (const auto& entry : assembly_log) {
      if (text::iequals(entry.role_name, message.speaker)) {
        if (entry.joined_at_index > message.index) {
          throw Error("speaker " + message.speaker + " speaks before joining");
        }
        found = true;
        break;
      }
    }
    if (!found) throw Error("speaker " + message.speaker + " missing from the assembly log");
  }
  size_t inserted = 0;
  for (const auto& check : moderator_log) {
    if (check.inserted) ++inserted;
  }
  size_t insert_messages = 0;
  for (const auto& message : messages) {
    if (message.kind == MessageKind::ModeratorInsert) ++insert_messages;
  }
  if (inserted != insert_messages) {
    throw Error("moderator log and inserted analyses disagree");
  }
}

ConvergenceMetrics convergence_metrics(const Transcript& transcript) {
  ConvergenceMetrics metrics;
  metrics.assembly_size = transcript.assembly_log.size();
  for (const auto& entry : transcript.assembly_log) {
    metrics.roles.push_back(entry.role_name);
    if (entry.joined_at_index > 0) ++metrics.summons_used;
  }

  std::map<std::string, size_t> counts;
  size_t total = 0;
  for (const auto& message : transcript.messages) {
    if (message.kind != MessageKind::AgentTurn) continue;
    ++counts[message.speaker];
    ++total;
  }
  metrics.no_agent_turns = total == 0;
  for (const auto& entry : transcript.assembly_log) {
    size_t spoken = counts.count(entry.role_name) ? counts[entry.role_name] : 0;
    metrics.participation_rate[entry.role_name] =
        total == 0 ? 0.0 : static_cast<double>(spoken) / static_cast<double>(total);
  }
  return metrics;
}

std::string select_next_speaker(const ExtractionResult& extraction,
                                const std::vector<std::string>& assembly,
                                const std::string& current_speaker,
                                const std::string& moderator_name,
                                Rng& rng) {
  if (!extraction.addressee.is_broadcast()) {
    const std::string& target = extraction.addressee.name();
    if (!text::iequals(target, current_speaker) && !text::iequals(target, moderator_name)) {
      for (const auto& member : assembly) {
        if (text::iequals(member, target)) return member;
      }
    }
  }
  std::vector<std::string> pool;
  for (const auto& member : assembly) {
    if (text::iequals(member, current_speaker)) continue;
    if (text::iequals(member, moderator_name)) continue;
    pool.push_back(member);
  }
  if (pool.empty()) {
    throw InvalidAssemblyError("no eligible next speaker besides " + current_speaker);
  }
  return pool[rng.pick_index(pool.size())];
}

ModeratorVerdict parse_moderator_verdict(const std::string& reply) {
  ModeratorVerdict verdict;
  std::optional<std::string> value;
  std::vector<std::string> rest;
  for (const auto& line : text::split_lines(reply)) {
    if (auto v = text::labeled_value(text::trim(line), "VERDICT")) {
      if (!value) value = *v;
      continue;
    }
    rest.push_back(line);
  }
  if (value) {
    verdict.refocus = text::to_lower(*value).rfind("refocus", 0) == 0;
    verdict.analysis = text::trim(text::join(rest, "\n"));
  } else {
    verdict.refocus = false;
    verdict.analysis = text::trim(reply);
  }
  return verdict;
}

const std::string& empty_session_summary() {
  static const std::string notice =
      "Report summary: the session ended before any agent turn took place.";
  return notice;
}

namespace {

const char* kTurnNudge =
    "It is now your turn to speak. Reply in character with your next contribution to "
    "the conference.";

const char* kModeratorCheckInstruction =
    "Review the discussion so far. Reply with a line \"VERDICT: REFOCUS\" if the "
    "participants have digressed and you must redirect them, or \"VERDICT: LOG\" if the "
    "discussion is on track. After the verdict line, write your analysis of the major "
    "points addressed so far. A REFOCUS analysis is shown to the participants; a LOG "
    "analysis is only kept on record.";

const char* kSummarizerInstruction =
    "You are the summarizer of a decision conference. You receive the complete conference "
    "transcript and you produce its final report.\n"
    "Begin with \"Report summary:\" and cover, in order: the agents present from the "
    "beginning, the agents summoned during the conversation, the key points and tasks "
    "discussed, the advantages and drawbacks of the recommended courses of action, and a "
    "conclusion.\n"
    "Base the report only on the transcript; do not invent contributions.";

const std::vector<std::string>& summary_section_markers() {
  static const std::vector<std::string> markers = {
      "agents present", "agents summoned", "key points", "advantages", "conclusion",
  };
  return markers;
}

bool summary_has_sections(const std::string& summary) {
  for (const auto& marker : summary_section_markers()) {
    if (!text::ifind(summary, marker)) return false;
  }
  return true;
}

}  // namespace

RunOutput run_session(const SessionConfig& config,
                      const ScenarioInstance& scenario,
                      Backend& backend,
                      Backend* extractor) {
  config.validate();
  const SessionSettings& settings = config.settings;
  Backend* extractor_backend = extractor ? extractor : &backend;

  Transcript transcript;
  transcript.scenario = scenario;
  transcript.seed = config.seed;
  transcript.settings = settings;

  std::vector<PersonaSpec> personas = config.initial_personas;
  const std::string moderator_name = config.moderator().role_name;
  std::vector<std::string> roster;
  for (const auto& persona : personas) {
    roster.push_back(persona.role_name);
    transcript.assembly_log.push_back({persona.role_name, 0});
  }

  transcript.messages.push_back(
      {0, moderator_name, Addressee::broadcast(), MessageKind::Bootstrap, scenario.rendered_text});

  Rng rng(config.seed);

  auto persona_by_name = [&](const std::string& name) -> const PersonaSpec& {
    for (const auto& persona : personas) {
      if (text::iequals(persona.role_name, name)) return persona;
    }
    throw InvalidAssemblyError("unknown speaker: " + name);
  };

  auto history = [&] {
    std::vector<ChatTurn> turns;
    turns.reserve(transcript.messages.size());
    for (const auto& message : transcript.messages) {
      turns.push_back({message.speaker, message.content});
    }
    return turns;
  };

  size_t summons_used = 0;
  size_t stable_streak = 0;
  const size_t stability_window = settings.effective_stability_window();
  std::string current_speaker;

  // One completion by `speaker`: the reply may hold several utterances, each
  // stored as its own message of this turn.
  auto take_turn = [&](const std::string& speaker) {
    const PersonaSpec& spec = persona_by_name(speaker);
    CompletionRequest request;
    request.system_prompt =
        build_persona_prompt(spec, roster).text + "\n\n" + kTurnNudge;
    request.history = history();
    request.temperature = settings.temperature;
    request.max_tokens = settings.max_tokens;

    std::string raw;
    try {
      raw = backend.complete(request);
    } catch (const Error& e) {
      throw SessionAborted("turn for " + speaker + " failed: " + e.what(), transcript);
    }

    ExtractionResult extraction =
        extract_turn(raw, roster, settings.extraction, extractor_backend);
    for (const auto& utterance : extraction.utterances) {
      transcript.messages.push_back({transcript.messages.size(), spec.role_name,
                                     extraction.addressee, MessageKind::AgentTurn, utterance});
    }
    current_speaker = spec.role_name;
    ++stable_streak;
    return extraction;
  };

  auto announce = [&](const std::string& body) {
    transcript.messages.push_back({transcript.messages.size(), "System", Addressee::broadcast(),
                                   MessageKind::SystemAnnouncement, body});
  };

  // Processes the summon request of a finished turn. A successful summon
  // gives the newcomer the immediately following turn, whose own summon
  // request is handled the same way. Returns the last turn's extraction,
  // which drives the next speaker selection.
  auto settle_summons = [&](ExtractionResult extraction) {
    while (extraction.summon_request) {
      const std::string description = *extraction.summon_request;
      extraction.summon_request.reset();

      if (summons_used >= settings.summon_cap) {
        std::cerr << "warning: summon request ignored, cap of " << settings.summon_cap
                  << " reached: " << description << "\n";
        continue;
      }

      auto generated = generate_persona_from_description(description, backend);
      if (!generated) {
        announce("Summon failed: no agent could be generated for: " + description);
        continue;
      }
      bool duplicate = false;
      for (const auto& member : roster) {
        if (text::iequals(member, generated->role_name)) duplicate = true;
      }
      if (duplicate) {
        announce("Summon failed: " + generated->role_name + " is already present");
        continue;
      }

      personas.push_back(*generated);
      size_t announce_index = transcript.messages.size();
      announce("New agent has been summoned: " + generated->role_name);
      transcript.assembly_log.push_back({generated->role_name, announce_index});
      roster.push_back(generated->role_name);
      ++summons_used;
      stable_streak = 0;

      extraction = take_turn(generated->role_name);
    }
    return extraction;
  };

  auto moderator_check = [&] {
    const PersonaSpec& moderator = persona_by_name(moderator_name);
    CompletionRequest request;
    request.system_prompt =
        build_persona_prompt(moderator, roster).text + "\n\n" + kModeratorCheckInstruction;
    request.history = history();
    request.temperature = settings.temperature;
    request.max_tokens = settings.max_tokens;

    std::string reply;
    try {
      reply = backend.complete(request);
    } catch (const Error& e) {
      throw SessionAborted(std::string("moderator check failed: ") + e.what(), transcript);
    }

    ModeratorVerdict verdict = parse_moderator_verdict(reply);
    size_t at_index = transcript.messages.size();
    if (verdict.refocus) {
      transcript.messages.push_back({at_index, moderator.role_name, Addressee::broadcast(),
                                     MessageKind::ModeratorInsert, verdict.analysis});
    }
    transcript.moderator_log.push_back({at_index, verdict.analysis, verdict.refocus});
  };

  size_t turns_taken = 0;
  size_t cadence = 0;
  ExtractionResult last_extraction;
  bool any_turn = false;

  while (turns_taken < settings.max_iterations) {
    std::string speaker;
    if (!any_turn) {
      std::vector<std::string> candidates;
      for (const auto& persona : config.initial_personas) {
        if (!persona.is_moderator) candidates.push_back(persona.role_name);
      }
      speaker = candidates[rng.pick_index(candidates.size())];
    } else {
      speaker = select_next_speaker(last_extraction, roster, current_speaker, moderator_name, rng);
    }

    ExtractionResult extraction = take_turn(speaker);
    ++turns_taken;
    ++cadence;
    any_turn = true;

    last_extraction = settle_summons(std::move(extraction));

    if (cadence >= settings.moderator_period) {
      cadence = 0;
      moderator_check();
    }
    if (stable_streak >= stability_window && turns_taken < settings.max_iterations) break;
  }

  RunOutput output;
  std::string summary;
  bool failed = false;
  if (transcript.agent_turn_count() == 0) {
    summary = empty_session_summary();
  } else {
    CompletionRequest request;
    request.system_prompt = kSummarizerInstruction;
    request.history = history();
    request.temperature = settings.temperature;
    request.max_tokens = settings.max_tokens;
    try {
      summary = backend.complete(request);
    } catch (const Error& e) {
      failed = true;
      summary = std::string("Summary unavailable: the summarizer exchange failed (") + e.what() + ").";
    }
  }
  transcript.messages.push_back({transcript.messages.size(), "Summarizer", Addressee::broadcast(),
                                 MessageKind::Summary, summary});

  output.summary = summary;
  output.summary_failed = failed;
  output.summary_malformed =
      !failed && transcript.agent_turn_count() > 0 && !summary_has_sections(summary);
  output.convergence = convergence_metrics(transcript);
  output.transcript = std::move(transcript);
  output.transcript.validate();
  return output;
}

}  // namespace discourse
