#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "discourse/backend.hpp"
#include "discourse/orchestrator.hpp"

namespace discourse {

struct TaxonomyCategory {
  std::string id;
  std::string display_name;
  std::vector<std::string> patterns;
};

struct Taxonomy {
  std::vector<TaxonomyCategory> categories;

  void validate() const;
  const TaxonomyCategory* find(const std::string& id) const;
  static Taxonomy from_file(const std::string& path);
};

// The shipped category set, mirrored by the taxonomy asset file.
const Taxonomy& default_taxonomy();

enum class ClassifyMode { Keyword, Llm };

// Sentence-level keyword classification. A sentence counts toward every
// category with at least one case-insensitive pattern match, so one sentence
// may land in several categories. Llm mode asks the backend to label the
// numbered sentences with category ids and falls back to keyword counting on
// any failure (reported through `llm_fell_back`).
std::map<std::string, size_t> classify_recommendations(const std::string& body,
                                                       const Taxonomy& taxonomy,
                                                       ClassifyMode mode = ClassifyMode::Keyword,
                                                       Backend* backend = nullptr,
                                                       bool* llm_fell_back = nullptr);

struct FrequencyDistribution {
  std::string scope;  // "explored" or "selected"
  std::map<std::string, size_t> counts;  // every taxonomy id, zeros included
  size_t total = 0;
  std::map<std::string, double> shares;  // all zero when total is zero
  bool missing_summary = false;
};

// explored covers every agent turn and inserted moderator analysis; selected
// covers the summary alone. A run without a usable summary yields an empty
// selected distribution with its flag set.
std::pair<FrequencyDistribution, FrequencyDistribution> build_distributions(
    const RunOutput& run, const Taxonomy& taxonomy, ClassifyMode mode = ClassifyMode::Keyword,
    Backend* backend = nullptr);

struct BatchCell {
  int probability_percent = 0;
  size_t runs = 0;
  FrequencyDistribution explored;
  FrequencyDistribution selected;
  // Number of sessions in which each summoned role appears (sessions, not
  // summon events).
  std::map<std::string, size_t> summon_tally;
};

struct BatchReport {
  std::vector<BatchCell> cells;  // ascending probability
  size_t runs_per_cell = 0;
  bool uneven_cells = false;
};

// Groups runs by probability, sums counts per cell and renormalizes the
// shares. All runs of one cell must come from the same scenario template.
BatchReport aggregate_batch(const std::vector<RunOutput>& runs, const Taxonomy& taxonomy,
                            ClassifyMode mode = ClassifyMode::Keyword,
                            Backend* backend = nullptr);

std::string report_to_csv(const BatchReport& report, const Taxonomy& taxonomy);
nlohmann::ordered_json report_to_json(const BatchReport& report, const Taxonomy& taxonomy);

enum class ProbeParser { Integer, FirstNumber };
ProbeParser probe_parser_from_string(const std::string& s);

struct ProbeHistogram {
  std::map<long long, size_t> value_counts;
  size_t unparsed = 0;
  size_t failed = 0;
  size_t n = 0;

  size_t total() const;
};

// Issues n independent stateless completions of the same prompt and tallies
// the parsed values (optionally binned). Draws that fail to parse or whose
// backend call errors are tallied too, so the histogram always conserves n.
ProbeHistogram distribution_probe(const std::string& prompt, size_t n, Backend& backend,
                                  ProbeParser parser, long long bin_width = 1);

std::string histogram_to_csv(const ProbeHistogram& histogram);

}  // namespace discourse
