#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "discourse/analysis.hpp"
#include "discourse/backend.hpp"
#include "discourse/batch.hpp"
#include "discourse/errors.hpp"
#include "discourse/orchestrator.hpp"
#include "discourse/persona.hpp"
#include "discourse/scenario.hpp"
#include "discourse/transcript_io.hpp"

namespace fs = std::filesystem;
using discourse::ConfigError;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct SessionFlags {
  std::optional<size_t> max_iterations;
  std::optional<size_t> moderator_period;
  std::optional<size_t> summon_cap;
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  std::optional<std::string> extraction;
  std::optional<long long> stability_window;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--max-iterations", max_iterations, "Agent turns before the summary");
    cmd->add_option("--moderator-period", moderator_period,
                    "Agent turns between moderator checks");
    cmd->add_option("--summon-cap", summon_cap, "Maximum number of summoned agents");
    cmd->add_option("--temperature", temperature, "Sampling temperature");
    cmd->add_option("--max-tokens", max_tokens, "Completion token budget");
    cmd->add_option("--extraction", extraction,
                    "Extraction mode: deterministic or llm (default depends on backend)");
    cmd->add_option("--stability-window", stability_window,
                    "Stop early after this many turns without a new agent");
  }
};

nlohmann::ordered_json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

template <typename T>
void override_from(const nlohmann::ordered_json& doc, const char* key, T& value) {
  if (!doc.contains(key) || doc.at(key).is_null()) return;
  try {
    value = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type: " + e.what());
  }
}

template <typename T>
void override_from(const nlohmann::ordered_json& doc, const char* key, std::optional<T>& value) {
  if (!doc.contains(key) || doc.at(key).is_null()) return;
  T raw;
  override_from(doc, key, raw);
  value = raw;
}

void apply_session_config(const nlohmann::ordered_json& doc, SessionFlags& flags) {
  override_from(doc, "max_iterations", flags.max_iterations);
  override_from(doc, "moderator_period", flags.moderator_period);
  override_from(doc, "summon_cap", flags.summon_cap);
  override_from(doc, "temperature", flags.temperature);
  override_from(doc, "max_tokens", flags.max_tokens);
  override_from(doc, "extraction", flags.extraction);
  override_from(doc, "stability_window", flags.stability_window);
}

discourse::SessionSettings settings_from_flags(const SessionFlags& flags,
                                               const discourse::BackendSpec& backend_spec) {
  discourse::SessionSettings settings;
  if (flags.max_iterations) settings.max_iterations = *flags.max_iterations;
  if (flags.moderator_period) settings.moderator_period = *flags.moderator_period;
  if (flags.summon_cap) settings.summon_cap = *flags.summon_cap;
  if (flags.temperature) settings.temperature = *flags.temperature;
  if (flags.max_tokens) settings.max_tokens = *flags.max_tokens;
  if (flags.stability_window) {
    if (*flags.stability_window < 1) throw ConfigError("stability window must be positive");
    settings.stability_window = static_cast<size_t>(*flags.stability_window);
  }
  if (flags.extraction) {
    settings.extraction = discourse::extraction_mode_from_string(*flags.extraction);
  } else {
    // Live endpoints get the extractor exchange; offline backends stay
    // deterministic so replays and fixtures never consume extra completions.
    settings.extraction = backend_spec.kind == discourse::BackendSpec::Kind::HttpEndpoint
                              ? discourse::ExtractionMode::Llm
                              : discourse::ExtractionMode::Deterministic;
  }
  return settings;
}

std::vector<discourse::PersonaSpec> personas_from(const std::optional<std::string>& path) {
  if (path) return discourse::load_personas(*path);
  return discourse::default_personas();
}

discourse::Taxonomy taxonomy_from(const std::optional<std::string>& path) {
  if (path) return discourse::Taxonomy::from_file(*path);
  return discourse::default_taxonomy();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw discourse::Error("cannot write file: " + path);
  out << body;
}

void write_report_files(const discourse::BatchReport& report,
                        const discourse::Taxonomy& taxonomy, const std::string& directory) {
  fs::create_directories(directory);
  fs::path csv_path = fs::path(directory) / "report.csv";
  fs::path json_path = fs::path(directory) / "report.json";
  write_text_file(csv_path.string(), discourse::report_to_csv(report, taxonomy));
  write_text_file(json_path.string(),
                  discourse::report_to_json(report, taxonomy).dump(2) + "\n");
  std::cout << "report written: " << csv_path.string() << " " << json_path.string() << "\n";
}

int cmd_run(const std::string& scenario_path, int probability, const std::string& backend_desc,
            uint64_t seed, const std::string& out_dir,
            const std::optional<std::string>& personas_path, const SessionFlags& flags) {
  auto backend_spec = discourse::BackendSpec::parse(backend_desc);
  discourse::SessionConfig config;
  config.settings = settings_from_flags(flags, backend_spec);
  config.seed = seed;
  config.initial_personas = personas_from(personas_path);

  discourse::ScenarioTemplate scenario_template =
      discourse::ScenarioTemplate::from_file(scenario_path);
  discourse::ScenarioInstance scenario =
      discourse::render_scenario(scenario_template, probability);
  config.validate();

  fs::create_directories(out_dir);
  std::string filename =
      discourse::transcript_filename(scenario_template.template_name, probability, 1);
  fs::path out_path = fs::path(out_dir) / filename;

  auto backend = discourse::make_backend(backend_spec);
  try {
    discourse::RunOutput output = discourse::run_session(config, scenario, *backend);
    discourse::save_transcript(output.transcript, out_path.string());
    std::cout << output.summary << "\n";
    std::cerr << "transcript written: " << out_path.string() << "\n";
    if (output.summary_failed) std::cerr << "warning: summarizer call failed\n";
    if (output.summary_malformed) std::cerr << "warning: summary is missing sections\n";
    return kExitOk;
  } catch (const discourse::SessionAborted& abort) {
    fs::path partial = out_path;
    partial.replace_filename(out_path.stem().string() + "_partial.json");
    std::cerr << "error: session aborted: " << abort.what() << "\n";
    try {
      discourse::save_transcript(abort.partial_transcript(), partial.string());
      std::cerr << "partial transcript written: " << partial.string() << "\n";
    } catch (const discourse::Error& e) {
      std::cerr << "error: could not persist partial transcript: " << e.what() << "\n";
    }
    return kExitRuntime;
  }
}

int cmd_batch(const std::vector<int>& probabilities, size_t repetitions, uint64_t base_seed,
              const std::string& scenario_path, const std::string& backend_desc,
              const std::string& out_dir, const std::optional<std::string>& personas_path,
              const std::optional<std::string>& taxonomy_path, size_t parallel,
              const SessionFlags& flags) {
  auto backend_spec = discourse::BackendSpec::parse(backend_desc);
  discourse::BatchConfig config;
  config.probabilities = probabilities;
  config.repetitions = repetitions;
  config.base_seed = base_seed;
  config.session.settings = settings_from_flags(flags, backend_spec);
  config.session.initial_personas = personas_from(personas_path);
  config.scenario_path = scenario_path;
  config.output_dir = out_dir;
  config.backend_descriptor = backend_desc;
  config.taxonomy_path = taxonomy_path;
  config.parallelism = parallel;

  discourse::BatchResult result = discourse::run_batch(config);
  for (const auto& [probability, completed] : result.completed_per_cell) {
    std::cout << "cell " << probability << "%: " << completed << "/" << repetitions
              << " sessions completed\n";
  }
  if (result.completed > 0) {
    write_report_files(result.report, taxonomy_from(taxonomy_path), out_dir);
  }
  if (result.any_empty_cell || result.completed == 0) {
    std::cerr << "error: at least one probability cell has no completed session\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_analyze(const std::string& directory, const std::optional<std::string>& taxonomy_path,
                const std::optional<std::string>& out_dir) {
  discourse::Taxonomy taxonomy = taxonomy_from(taxonomy_path);
  std::vector<std::string> warnings;
  discourse::BatchReport report;
  try {
    report = discourse::analyze_directory(directory, taxonomy,
                                          discourse::ClassifyMode::Keyword, &warnings);
  } catch (const ConfigError&) {
    throw;
  } catch (const discourse::Error& e) {
    for (const auto& warning : warnings) std::cerr << "warning: " << warning << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  for (const auto& warning : warnings) std::cerr << "warning: " << warning << "\n";
  write_report_files(report, taxonomy, out_dir.value_or(directory));
  return kExitOk;
}

int cmd_probe(const std::string& prompt_path, size_t n, const std::string& backend_desc,
              const std::string& parser_name, long long bin_width, const std::string& out_path) {
  if (n < 1) throw ConfigError("--n must be at least 1");
  std::string prompt = read_text_file(prompt_path);
  auto backend = discourse::make_backend(discourse::BackendSpec::parse(backend_desc));
  discourse::ProbeHistogram histogram = discourse::distribution_probe(
      prompt, n, *backend, discourse::probe_parser_from_string(parser_name), bin_width);
  std::string csv = discourse::histogram_to_csv(histogram);
  write_text_file(out_path, csv);
  std::cout << csv;
  std::cerr << "histogram written: " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-governing multi-agent discourse engine"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run one session");
  std::string run_scenario;
  int run_probability = -1;
  std::string run_backend;
  uint64_t run_seed = 0;
  std::string run_out = "runs";
  std::optional<std::string> run_personas;
  std::optional<std::string> run_config;
  SessionFlags run_flags;
  run->add_option("--scenario", run_scenario, "Scenario template file");
  run->add_option("--probability", run_probability, "Probability parameter in percent");
  run->add_option("--backend", run_backend, "Backend descriptor");
  run->add_option("--seed", run_seed, "Session seed");
  run->add_option("--out", run_out, "Output directory");
  run->add_option("--personas", run_personas, "Persona definition file");
  run->add_option("--config", run_config, "JSON config file; its values override flags");
  run_flags.add_to(run);

  // batch
  auto* batch = app.add_subcommand("batch", "Run the probability grid");
  std::vector<int> batch_probabilities;
  size_t batch_repetitions = 1;
  uint64_t batch_base_seed = 0;
  std::string batch_scenario;
  std::string batch_backend;
  std::string batch_out = "runs";
  std::optional<std::string> batch_personas;
  std::optional<std::string> batch_taxonomy;
  std::optional<std::string> batch_config;
  size_t batch_parallel = 0;
  SessionFlags batch_flags;
  batch->add_option("--probabilities", batch_probabilities, "Probability values, e.g. 50,75,90")
      ->delimiter(',');
  batch->add_option("--repetitions", batch_repetitions, "Sessions per probability");
  batch->add_option("--base-seed", batch_base_seed, "Seed of grid session 0");
  batch->add_option("--scenario", batch_scenario, "Scenario template file");
  batch->add_option("--backend", batch_backend, "Backend descriptor");
  batch->add_option("--out", batch_out, "Output directory");
  batch->add_option("--personas", batch_personas, "Persona definition file");
  batch->add_option("--taxonomy", batch_taxonomy, "Taxonomy file for the report");
  batch->add_option("--config", batch_config, "JSON config file; its values override flags");
  batch->add_option("--parallel", batch_parallel, "Concurrent sessions (0: one per cell)");
  batch_flags.add_to(batch);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Recompute the report from transcripts");
  std::string analyze_dir;
  std::optional<std::string> analyze_taxonomy;
  std::optional<std::string> analyze_out;
  std::optional<std::string> analyze_config;
  analyze->add_option("--dir", analyze_dir, "Directory of transcript JSON files");
  analyze->add_option("--taxonomy", analyze_taxonomy, "Taxonomy file");
  analyze->add_option("--out", analyze_out, "Report directory (default: --dir)");
  analyze->add_option("--config", analyze_config, "JSON config file; its values override flags");

  // probe
  auto* probe = app.add_subcommand("probe", "Sample one prompt repeatedly");
  std::string probe_prompt;
  size_t probe_n = 0;
  std::string probe_backend;
  std::string probe_parser = "integer";
  long long probe_bin_width = 1;
  std::string probe_out = "histogram.csv";
  std::optional<std::string> probe_config;
  probe->add_option("--prompt", probe_prompt, "Prompt file");
  probe->add_option("--n", probe_n, "Number of draws");
  probe->add_option("--backend", probe_backend, "Backend descriptor");
  probe->add_option("--parser", probe_parser, "Reply parser: integer or first-number");
  probe->add_option("--bin-width", probe_bin_width, "Histogram bin width");
  probe->add_option("--out", probe_out, "Histogram CSV path");
  probe->add_option("--config", probe_config, "JSON config file; its values override flags");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) {
      if (run_config) {
        auto doc = load_config_file(*run_config);
        override_from(doc, "scenario", run_scenario);
        override_from(doc, "probability", run_probability);
        override_from(doc, "backend", run_backend);
        override_from(doc, "seed", run_seed);
        override_from(doc, "out", run_out);
        override_from(doc, "personas", run_personas);
        apply_session_config(doc, run_flags);
      }
      if (run_scenario.empty()) throw ConfigError("run needs --scenario");
      if (run_backend.empty()) throw ConfigError("run needs --backend");
      if (run_probability < 0) throw ConfigError("run needs --probability");
      return cmd_run(run_scenario, run_probability, run_backend, run_seed, run_out,
                     run_personas, run_flags);
    }
    if (batch->parsed()) {
      if (batch_config) {
        auto doc = load_config_file(*batch_config);
        override_from(doc, "probabilities", batch_probabilities);
        override_from(doc, "repetitions", batch_repetitions);
        override_from(doc, "base_seed", batch_base_seed);
        override_from(doc, "scenario", batch_scenario);
        override_from(doc, "backend", batch_backend);
        override_from(doc, "out", batch_out);
        override_from(doc, "personas", batch_personas);
        override_from(doc, "taxonomy", batch_taxonomy);
        override_from(doc, "parallel", batch_parallel);
        apply_session_config(doc, batch_flags);
      }
      if (batch_scenario.empty()) throw ConfigError("batch needs --scenario");
      if (batch_backend.empty()) throw ConfigError("batch needs --backend");
      return cmd_batch(batch_probabilities, batch_repetitions, batch_base_seed, batch_scenario,
                       batch_backend, batch_out, batch_personas, batch_taxonomy, batch_parallel,
                       batch_flags);
    }
    if (analyze->parsed()) {
      if (analyze_config) {
        auto doc = load_config_file(*analyze_config);
        override_from(doc, "dir", analyze_dir);
        override_from(doc, "taxonomy", analyze_taxonomy);
        override_from(doc, "out", analyze_out);
      }
      if (analyze_dir.empty()) throw ConfigError("analyze needs --dir");
      return cmd_analyze(analyze_dir, analyze_taxonomy, analyze_out);
    }
    if (probe->parsed()) {
      if (probe_config) {
        auto doc = load_config_file(*probe_config);
        override_from(doc, "prompt", probe_prompt);
        override_from(doc, "n", probe_n);
        override_from(doc, "backend", probe_backend);
        override_from(doc, "parser", probe_parser);
        override_from(doc, "bin_width", probe_bin_width);
        override_from(doc, "out", probe_out);
      }
      if (probe_prompt.empty()) throw ConfigError("probe needs --prompt");
      if (probe_backend.empty()) throw ConfigError("probe needs --backend");
      return cmd_probe(probe_prompt, probe_n, probe_backend, probe_parser, probe_bin_width,
                       probe_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const discourse::TemplateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const discourse::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const discourse::InvalidAssemblyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const discourse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
