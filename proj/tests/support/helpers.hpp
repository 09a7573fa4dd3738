#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "discourse/backend.hpp"
#include "discourse/orchestrator.hpp"
#include "discourse/persona.hpp"
#include "discourse/scenario.hpp"

namespace testsupport {

inline std::string asset_dir() { return DISCOURSE_ASSET_DIR; }
inline std::string fixture_dir() { return DISCOURSE_FIXTURE_DIR; }
inline std::string cli_path() { return DISCOURSE_CLI_PATH; }

inline std::string asset_path(const std::string& relative) {
  return (std::filesystem::path(asset_dir()) / relative).string();
}
inline std::string fixture_path(const std::string& relative) {
  return (std::filesystem::path(fixture_dir()) / relative).string();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 engine{std::random_device{}()};
  auto path = std::filesystem::temp_directory_path() /
              ("discourse_test_" + tag + "_" + std::to_string(engine()));
  std::filesystem::create_directories(path);
  return path;
}

// Forwards to another backend while recording every request it sees.
class RecordingBackend : public discourse::Backend {
 public:
  explicit RecordingBackend(discourse::Backend& inner) : inner_(inner) {}

  std::string complete(const discourse::CompletionRequest& request) override {
    requests.push_back(request);
    return inner_.complete(request);
  }
  std::string describe() const override { return "recording(" + inner_.describe() + ")"; }

  std::vector<discourse::CompletionRequest> requests;

 private:
  discourse::Backend& inner_;
};

// Succeeds with a canned reply for the first `budget` calls, then throws.
class FailAfterBackend : public discourse::Backend {
 public:
  FailAfterBackend(std::string reply, size_t budget)
      : reply_(std::move(reply)), budget_(budget) {}

  std::string complete(const discourse::CompletionRequest&) override {
    if (calls_ >= budget_) throw discourse::TransportError("injected backend failure");
    ++calls_;
    return reply_;
  }
  std::string describe() const override { return "fail-after"; }
  size_t calls() const { return calls_; }

 private:
  std::string reply_;
  size_t budget_;
  size_t calls_ = 0;
};

// The session shape that reproduces the bundled replay recording.
inline discourse::SessionConfig replay_session_config() {
  discourse::SessionConfig config;
  config.settings.max_iterations = 21;
  config.settings.moderator_period = 7;
  config.settings.summon_cap = 1;
  config.settings.extraction = discourse::ExtractionMode::Deterministic;
  config.seed = 7;
  config.initial_personas = discourse::default_personas();
  return config;
}

inline discourse::ScenarioInstance replay_scenario() {
  auto scenario_template =
      discourse::ScenarioTemplate::from_file(asset_path("scenarios/flood_replay.txt"));
  return discourse::render_scenario(scenario_template, 90);
}

inline discourse::ScriptedReplayBackend replay_backend() {
  return discourse::ScriptedReplayBackend::from_file(
      asset_path("replays/flood_90_replay.json"));
}

struct ExpectedMessage {
  size_t index;
  std::string speaker;
  std::string kind;
  std::string content;
};

inline std::vector<ExpectedMessage> expected_replay_messages() {
  auto doc = nlohmann::json::parse(read_file(fixture_path("reference_expected.json")));
  const auto& items = doc.is_array() ? doc : doc.at("messages");
  std::vector<ExpectedMessage> messages;
  for (const auto& item : items) {
    messages.push_back({item.at("index").get<size_t>(), item.at("speaker").get<std::string>(),
                        item.at("kind").get<std::string>(),
                        item.at("content").get<std::string>()});
  }
  return messages;
}

inline discourse::RunOutput run_replay_session(discourse::Backend* wrapped = nullptr) {
  auto backend = replay_backend();
  if (wrapped) {
    return discourse::run_session(replay_session_config(), replay_scenario(), *wrapped);
  }
  return discourse::run_session(replay_session_config(), replay_scenario(), backend);
}

}  // namespace testsupport
