#include "discourse/transcript_io.hpp"

#include <fstream>

#include "discourse/text.hpp"

namespace discourse {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json settings_to_json(const SessionSettings& settings) {
  ordered_json config;
  config["max_iterations"] = settings.max_iterations;
  config["moderator_period"] = settings.moderator_period;
  config["summon_cap"] = settings.summon_cap;
  config["temperature"] = settings.temperature;
  config["max_tokens"] = settings.max_tokens;
  config["extraction"] = to_string(settings.extraction);
  if (settings.stability_window) {
    config["stability_window"] = *settings.stability_window;
  } else {
    config["stability_window"] = nullptr;
  }
  return config;
}

SessionSettings settings_from_json(const ordered_json& config) {
  SessionSettings settings;
  settings.max_iterations = config.at("max_iterations").get<size_t>();
  settings.moderator_period = config.at("moderator_period").get<size_t>();
  settings.summon_cap = config.at("summon_cap").get<size_t>();
  settings.temperature = config.at("temperature").get<double>();
  settings.max_tokens = config.at("max_tokens").get<int>();
  settings.extraction = extraction_mode_from_string(config.at("extraction").get<std::string>());
  if (config.contains("stability_window") && !config.at("stability_window").is_null()) {
    settings.stability_window = config.at("stability_window").get<size_t>();
  }
  return settings;
}

}  // namespace

ordered_json transcript_to_json(const Transcript& transcript) {
  ordered_json doc;
  ordered_json meta;
  meta["scenario_name"] = transcript.scenario.template_name;
  meta["probability_percent"] = transcript.scenario.probability_percent;
  meta["seed"] = transcript.seed;
  meta["config"] = settings_to_json(transcript.settings);
  doc["meta"] = meta;

  ordered_json assembly = ordered_json::array();
  for (const auto& entry : transcript.assembly_log) {
    assembly.push_back({{"role", entry.role_name}, {"joined_at_index", entry.joined_at_index}});
  }
  doc["assembly_log"] = assembly;

  ordered_json checks = ordered_json::array();
  for (const auto& check : transcript.moderator_log) {
    checks.push_back({{"at_index", check.at_index},
                      {"analysis", check.analysis},
                      {"inserted", check.inserted}});
  }
  doc["moderator_log"] = checks;

  ordered_json messages = ordered_json::array();
  for (const auto& message : transcript.messages) {
    messages.push_back({{"index", message.index},
                        {"speaker", message.speaker},
                        {"addressee", to_string(message.addressee)},
                        {"kind", to_string(message.kind)},
                        {"content", message.content}});
  }
  doc["messages"] = messages;
  return doc;
}

Transcript transcript_from_json(const ordered_json& doc) {
  Transcript transcript;
  try {
    const auto& meta = doc.at("meta");
    transcript.scenario.template_name = meta.at("scenario_name").get<std::string>();
    transcript.scenario.probability_percent = meta.at("probability_percent").get<int>();
    transcript.seed = meta.at("seed").get<uint64_t>();
    transcript.settings = settings_from_json(meta.at("config"));

    for (const auto& entry : doc.at("assembly_log")) {
      transcript.assembly_log.push_back(
          {entry.at("role").get<std::string>(), entry.at("joined_at_index").get<size_t>()});
    }
    for (const auto& check : doc.at("moderator_log")) {
      transcript.moderator_log.push_back({check.at("at_index").get<size_t>(),
                                          check.at("analysis").get<std::string>(),
                                          check.at("inserted").get<bool>()});
    }
    for (const auto& item : doc.at("messages")) {
      Message message;
      message.index = item.at("index").get<size_t>();
      message.speaker = item.at("speaker").get<std::string>();
      message.addressee = addressee_from_string(item.at("addressee").get<std::string>());
      message.kind = message_kind_from_string(item.at("kind").get<std::string>());
      message.content = item.at("content").get<std::string>();
      transcript.messages.push_back(std::move(message));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed transcript document: ") + e.what());
  }
  if (!transcript.messages.empty()) {
    transcript.scenario.rendered_text = transcript.messages.front().content;
  }
  transcript.validate();
  return transcript;
}

void save_transcript(const Transcript& transcript, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write transcript file: " + path);
  out << transcript_to_json(transcript).dump(2) << "\n";
  if (!out) throw Error("failed while writing transcript file: " + path);
}

Transcript load_transcript(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open transcript file: " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("transcript file " + path + " is not valid JSON: " + e.what());
  }
  return transcript_from_json(doc);
}

std::string transcript_filename(const std::string& scenario_name, int probability_percent,
                                size_t run_index) {
  return scenario_name + "_" + std::to_string(probability_percent) + "pct_run" +
         std::to_string(run_index) + ".json";
}

RunOutput run_output_from_transcript(Transcript transcript) {
  RunOutput output;
  const Message* summary = transcript.summary_message();
  if (summary) {
    output.summary = summary->content;
  } else {
    output.summary_failed = true;
  }
  output.convergence = convergence_metrics(transcript);
  output.transcript = std::move(transcript);
  return output;
}

}  // namespace discourse
