#include "discourse/batch.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "discourse/scenario.hpp"
#include "discourse/transcript_io.hpp"

namespace discourse {

namespace fs = std::filesystem;

void BatchConfig::validate() const {
  if (probabilities.empty()) throw ConfigError("batch needs at least one probability");
  std::set<int> seen;
  for (int probability : probabilities) {
    if (probability < 0 || probability > 100) {
      throw ParameterError("probability out of range: " + std::to_string(probability));
    }
    if (!seen.insert(probability).second) {
      throw ConfigError("duplicate probability: " + std::to_string(probability));
    }
  }
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (scenario_path.empty()) throw ConfigError("batch needs a scenario file");
  if (output_dir.empty()) throw ConfigError("batch needs an output directory");
  if (backend_descriptor.empty()) throw ConfigError("batch needs a backend descriptor");
  session.validate();
}

namespace {

struct SessionJob {
  int probability = 0;
  size_t repetition = 0;  // 1-based within the cell
  uint64_t seed = 0;
};

}  // namespace

BatchResult run_batch(const BatchConfig& config) {
  config.validate();
  ScenarioTemplate scenario_template = ScenarioTemplate::from_file(config.scenario_path);
  Taxonomy taxonomy = config.taxonomy_path ? Taxonomy::from_file(*config.taxonomy_path)
                                           : default_taxonomy();
  fs::create_directories(config.output_dir);

  std::vector<SessionJob> jobs;
  size_t global_index = 0;
  for (int probability : config.probabilities) {
    for (size_t repetition = 1; repetition <= config.repetitions; ++repetition) {
      jobs.push_back({probability, repetition, config.base_seed + global_index});
      ++global_index;
    }
  }

  struct Slot {
    bool completed = false;
    RunOutput output;
    std::string path;
  };
  std::vector<Slot> slots(jobs.size());
  std::atomic<size_t> next_job{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      size_t i = next_job.fetch_add(1);
      if (i >= jobs.size()) return;
      const SessionJob& job = jobs[i];

      std::string filename =
          transcript_filename(scenario_template.template_name, job.probability, job.repetition);
      fs::path out_path = fs::path(config.output_dir) / filename;
      try {
        ScenarioInstance scenario = render_scenario(scenario_template, job.probability);
        SessionConfig session = config.session;
        session.seed = job.seed;
        auto backend = make_backend(BackendSpec::parse(config.backend_descriptor));
        RunOutput output = run_session(session, scenario, *backend);
        save_transcript(output.transcript, out_path.string());
        slots[i].output = std::move(output);
        slots[i].path = out_path.string();
        slots[i].completed = true;
      } catch (const SessionAborted& abort) {
        fs::path partial = out_path;
        partial.replace_filename(out_path.stem().string() + "_partial.json");
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "warning: session for " << filename << " aborted: " << abort.what() << "\n";
        try {
          save_transcript(abort.partial_transcript(), partial.string());
        } catch (const Error& e) {
          std::cerr << "warning: could not persist partial transcript: " << e.what() << "\n";
        }
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "warning: session for " << filename << " failed: " << e.what() << "\n";
      }
    }
  };

  size_t thread_count = config.parallelism == 0 ? config.probabilities.size()
                                                : config.parallelism;
  thread_count = std::max<size_t>(1, std::min(thread_count, jobs.size()));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (size_t i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();
  }

  BatchResult result;
  std::vector<RunOutput> outputs;
  for (size_t i = 0; i < jobs.size(); ++i) {
    if (slots[i].completed) {
      outputs.push_back(std::move(slots[i].output));
      result.transcript_paths.push_back(slots[i].path);
      ++result.completed;
      ++result.completed_per_cell[jobs[i].probability];
    } else {
      ++result.failed;
      result.completed_per_cell[jobs[i].probability];  // materialize the zero
    }
  }
  for (int probability : config.probabilities) {
    if (result.completed_per_cell[probability] == 0) result.any_empty_cell = true;
  }

  if (!outputs.empty()) {
    result.report = aggregate_batch(outputs, taxonomy);
    // An intact grid reports the configured repetitions even if a straggler
    // cell lost runs; uneven cells are flagged by aggregate_batch.
    if (!result.report.uneven_cells && result.report.runs_per_cell != config.repetitions) {
      result.report.uneven_cells = true;
    }
  }
  return result;
}

BatchReport analyze_directory(const std::string& directory, const Taxonomy& taxonomy,
                              ClassifyMode mode, std::vector<std::string>* warnings) {
  if (!fs::is_directory(directory)) {
    throw ConfigError("not a directory: " + directory);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() != ".json") continue;
    std::string stem = entry.path().stem().string();
    if (entry.path().filename() == "report.json") continue;
    if (stem.size() >= 8 && stem.compare(stem.size() - 8, 8, "_partial") == 0) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<RunOutput> outputs;
  for (const auto& file : files) {
    try {
      outputs.push_back(run_output_from_transcript(load_transcript(file.string())));
    } catch (const Error& e) {
      if (warnings) warnings->push_back("skipped " + file.string() + ": " + e.what());
    }
  }
  if (outputs.empty()) {
    throw Error("no usable transcript in " + directory);
  }
  return aggregate_batch(outputs, taxonomy, mode);
}

}  // namespace discourse
