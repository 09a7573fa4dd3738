#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "discourse/analysis.hpp"
#include "discourse/orchestrator.hpp"

namespace discourse {

struct BatchConfig {
  std::vector<int> probabilities;
  size_t repetitions = 1;
  uint64_t base_seed = 0;
  SessionConfig session;  // per-run seed is overwritten with base_seed + k
  std::string scenario_path;
  std::string output_dir;
  std::string backend_descriptor;
  std::optional<std::string> taxonomy_path;
  // Worker threads; 0 means one per grid cell.
  size_t parallelism = 0;

  void validate() const;
};

struct BatchResult {
  BatchReport report;
  std::vector<std::string> transcript_paths;
  size_t completed = 0;
  size_t failed = 0;
  std::map<int, size_t> completed_per_cell;
  bool any_empty_cell = false;
};

// Runs probabilities x repetitions sessions. Session k (counted across the
// whole grid, probability-major) is seeded with base_seed + k, so any run can
// be reproduced in isolation. Each session gets a fresh backend built from
// the descriptor. Aborted sessions persist their partial transcript under a
// "_partial" suffix and are excluded from aggregation.
BatchResult run_batch(const BatchConfig& config);

// Rebuilds a report from persisted transcripts. Unreadable files are skipped
// with a warning; partial transcripts and the report file itself are ignored.
// Throws when no transcript could be loaded.
BatchReport analyze_directory(const std::string& directory, const Taxonomy& taxonomy,
                              ClassifyMode mode = ClassifyMode::Keyword,
                              std::vector<std::string>* warnings = nullptr);

}  // namespace discourse
