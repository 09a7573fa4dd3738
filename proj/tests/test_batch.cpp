#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "discourse/batch.hpp"
#include "discourse/errors.hpp"
#include "discourse/transcript_io.hpp"
#include "../tests/support/helpers.hpp"

using namespace discourse;
namespace fs = std::filesystem;

namespace {

// Two-turn sessions: the cycle serves both turns and the summary.
const char* kCyclicBackend = "cyclic:Evacuate the east side.|Raise the flood barriers.";

std::string write_scenario(const fs::path& dir) {
  auto path = dir / "drill.txt";
  std::ofstream(path) << "Flood drill. Chance of flooding: " << kProbabilityPlaceholder
                      << ".\n";
  return path.string();
}

BatchConfig small_batch(const fs::path& dir, std::vector<int> probabilities,
                        size_t repetitions) {
  BatchConfig config;
  config.probabilities = std::move(probabilities);
  config.repetitions = repetitions;
  config.base_seed = 100;
  config.session.settings.max_iterations = 2;
  config.session.settings.moderator_period = 6;
  config.session.settings.summon_cap = 0;
  config.session.settings.extraction = ExtractionMode::Deterministic;
  config.session.initial_personas = default_personas();
  config.scenario_path = write_scenario(dir);
  config.output_dir = (dir / "out").string();
  config.backend_descriptor = kCyclicBackend;
  return config;
}

}  // namespace

TEST_CASE("a batch covers its grid with seeded, named transcripts") {
  auto dir = testsupport::scratch_dir("batch_grid");
  auto config = small_batch(dir, {50, 75}, 3);
  auto result = run_batch(config);

  CHECK(result.completed == 6);
  CHECK(result.failed == 0);
  CHECK(!result.any_empty_cell);
  CHECK(result.completed_per_cell.at(50) == 3);
  CHECK(result.completed_per_cell.at(75) == 3);
  REQUIRE(result.transcript_paths.size() == 6);

  // Seeds run probability-major across the grid.
  struct Expect {
    const char* name;
    uint64_t seed;
    int probability;
  };
  for (const auto& expect : {Expect{"drill_50pct_run1.json", 100, 50},
                             Expect{"drill_50pct_run3.json", 102, 50},
                             Expect{"drill_75pct_run1.json", 103, 75},
                             Expect{"drill_75pct_run2.json", 104, 75}}) {
    CAPTURE(expect.name);
    auto path = dir / "out" / expect.name;
    REQUIRE(fs::exists(path));
    auto transcript = load_transcript(path.string());
    CHECK(transcript.seed == expect.seed);
    CHECK(transcript.scenario.probability_percent == expect.probability);
    CHECK(transcript.agent_turn_count() == 2);
  }

  REQUIRE(result.report.cells.size() == 2);
  CHECK(result.report.cells[0].probability_percent == 50);
  CHECK(result.report.cells[1].probability_percent == 75);
  CHECK(result.report.runs_per_cell == 3);
  CHECK(!result.report.uneven_cells);
  for (const auto& cell : result.report.cells) {
    CHECK(cell.explored.counts.at("evacuation") == 3);
    CHECK(cell.explored.counts.at("flood_barriers") == 3);
    CHECK(cell.selected.counts.at("evacuation") == 3);
  }
}

TEST_CASE("the same batch lands byte-identical on disk every time") {
  auto dir = testsupport::scratch_dir("batch_repeat");
  auto first = small_batch(dir, {40, 80}, 2);
  first.output_dir = (dir / "one").string();
  auto second = first;
  second.output_dir = (dir / "two").string();

  auto result_one = run_batch(first);
  auto result_two = run_batch(second);
  REQUIRE(result_one.completed == 4);
  REQUIRE(result_two.completed == 4);

  for (const auto& entry : fs::directory_iterator(dir / "one")) {
    auto twin = dir / "two" / entry.path().filename();
    CAPTURE(entry.path().filename().string());
    REQUIRE(fs::exists(twin));
    CHECK(testsupport::read_file(entry.path().string()) ==
          testsupport::read_file(twin.string()));
  }
}

TEST_CASE("worker count does not change what a batch produces") {
  auto dir = testsupport::scratch_dir("batch_threads");
  auto serial = small_batch(dir, {30, 60}, 2);
  serial.output_dir = (dir / "serial").string();
  serial.parallelism = 1;
  auto threaded = serial;
  threaded.output_dir = (dir / "threaded").string();
  threaded.parallelism = 4;

  run_batch(serial);
  run_batch(threaded);
  size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "serial")) {
    auto twin = dir / "threaded" / entry.path().filename();
    REQUIRE(fs::exists(twin));
    CHECK(testsupport::read_file(entry.path().string()) ==
          testsupport::read_file(twin.string()));
    ++compared;
  }
  CHECK(compared == 4);
}

TEST_CASE("aborted sessions leave partial records and empty the report") {
  auto dir = testsupport::scratch_dir("batch_abort");
  // One reply, but each session makes three calls: every session aborts.
  auto fixture = dir / "short.json";
  std::ofstream(fixture) << "[{\"turn\": 1, \"response\": \"Evacuate now.\"}]";

  auto config = small_batch(dir, {50, 75}, 1);
  config.backend_descriptor = "scripted:" + fixture.string();
  auto result = run_batch(config);

  CHECK(result.completed == 0);
  CHECK(result.failed == 2);
  CHECK(result.any_empty_cell);
  CHECK(result.report.cells.empty());
  for (const char* name : {"drill_50pct_run1_partial.json", "drill_75pct_run1_partial.json"}) {
    CAPTURE(name);
    auto path = dir / "out" / name;
    REQUIRE(fs::exists(path));
    auto partial = load_transcript(path.string());
    CHECK(partial.messages.size() == 2);
    CHECK(partial.summary_message() == nullptr);
  }
  CHECK(!fs::exists(dir / "out" / "drill_50pct_run1.json"));
}

TEST_CASE("a backend that cannot even start fails the cell without partials") {
  auto dir = testsupport::scratch_dir("batch_nostart");
  auto config = small_batch(dir, {50}, 1);
  config.backend_descriptor = "scripted:" + (dir / "absent.json").string();
  auto result = run_batch(config);
  CHECK(result.completed == 0);
  CHECK(result.failed == 1);
  CHECK(result.any_empty_cell);
  CHECK(fs::is_empty(dir / "out"));
}

TEST_CASE("batch parameters are validated up front") {
  auto dir = testsupport::scratch_dir("batch_validate");
  auto good = small_batch(dir, {50}, 1);
  CHECK_NOTHROW(good.validate());

  auto no_cells = good;
  no_cells.probabilities.clear();
  CHECK_THROWS_AS(no_cells.validate(), ConfigError);

  auto out_of_range = good;
  out_of_range.probabilities = {50, 150};
  CHECK_THROWS_AS(out_of_range.validate(), ParameterError);

  auto duplicated = good;
  duplicated.probabilities = {50, 50};
  CHECK_THROWS_AS(duplicated.validate(), ConfigError);

  auto no_reps = good;
  no_reps.repetitions = 0;
  CHECK_THROWS_AS(no_reps.validate(), ConfigError);

  auto no_scenario = good;
  no_scenario.scenario_path.clear();
  CHECK_THROWS_AS(no_scenario.validate(), ConfigError);

  auto bad_session = good;
  bad_session.session.settings.moderator_period = 1;
  CHECK_THROWS_AS(bad_session.validate(), ConfigError);
}

TEST_CASE("a persisted batch reconstructs the same report") {
  auto dir = testsupport::scratch_dir("batch_analyze");
  auto config = small_batch(dir, {50, 75}, 2);
  auto result = run_batch(config);
  REQUIRE(result.completed == 4);

  auto rebuilt = analyze_directory(config.output_dir, default_taxonomy());
  CHECK(report_to_json(rebuilt, default_taxonomy()).dump() ==
        report_to_json(result.report, default_taxonomy()).dump());
}

TEST_CASE("analysis skips sidecar files quietly and bad files loudly") {
  auto dir = testsupport::scratch_dir("batch_skip");
  auto config = small_batch(dir, {50}, 2);
  auto result = run_batch(config);
  REQUIRE(result.completed == 2);

  auto out = fs::path(config.output_dir);
  std::ofstream(out / "report.json") << "{\"not\": \"a transcript\"}";
  std::ofstream(out / "leftover_partial.json") << "also not a transcript";
  std::ofstream(out / "notes.txt") << "plain text";
  std::ofstream(out / "broken.json") << "{ mangled";

  std::vector<std::string> warnings;
  auto rebuilt = analyze_directory(config.output_dir, default_taxonomy(),
                                   ClassifyMode::Keyword, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("broken.json") != std::string::npos);
  REQUIRE(rebuilt.cells.size() == 1);
  CHECK(rebuilt.cells[0].runs == 2);
}

TEST_CASE("losing one cell's file leaves an uneven report") {
  auto dir = testsupport::scratch_dir("batch_uneven");
  auto config = small_batch(dir, {50, 75}, 2);
  auto result = run_batch(config);
  REQUIRE(result.completed == 4);

  fs::remove(fs::path(config.output_dir) / "drill_75pct_run2.json");
  auto rebuilt = analyze_directory(config.output_dir, default_taxonomy());
  CHECK(rebuilt.runs_per_cell == 2);
  CHECK(rebuilt.uneven_cells);
  REQUIRE(rebuilt.cells.size() == 2);
  CHECK(rebuilt.cells[1].runs == 1);
}

TEST_CASE("analysis refuses empty or missing directories") {
  auto dir = testsupport::scratch_dir("batch_empty");
  CHECK_THROWS_AS(analyze_directory(dir.string(), default_taxonomy()), Error);
  CHECK_THROWS_AS(analyze_directory((dir / "void").string(), default_taxonomy()),
                  ConfigError);

  std::ofstream(dir / "broken.json") << "{ mangled";
  std::vector<std::string> warnings;
  CHECK_THROWS_AS(
      analyze_directory(dir.string(), default_taxonomy(), ClassifyMode::Keyword, &warnings),
      Error);
  CHECK(warnings.size() == 1);
}
