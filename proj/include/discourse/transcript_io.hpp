#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "discourse/orchestrator.hpp"

namespace discourse {

// Serialized layout: {meta: {scenario_name, probability_percent, seed,
// config}, assembly_log, moderator_log, messages}. The bootstrap message
// carries the rendered scenario, so the file round-trips the full transcript.
nlohmann::ordered_json transcript_to_json(const Transcript& transcript);
Transcript transcript_from_json(const nlohmann::ordered_json& doc);

void save_transcript(const Transcript& transcript, const std::string& path);
Transcript load_transcript(const std::string& path);

// `{scenario}_{probability}pct_run{k}.json`
std::string transcript_filename(const std::string& scenario_name, int probability_percent,
                                size_t run_index);

// Rebuilds a RunOutput view over a persisted transcript: the summary is read
// back from the summary message and convergence metrics are recomputed.
RunOutput run_output_from_transcript(Transcript transcript);

}  // namespace discourse
