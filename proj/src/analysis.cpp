#include "discourse/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "discourse/errors.hpp"
#include "discourse/text.hpp"

namespace discourse {

void Taxonomy::validate() const {
  if (categories.empty()) throw ConfigError("taxonomy has no categories");
  std::set<std::string> ids;
  for (const auto& category : categories) {
    if (text::trim(category.id).empty()) throw ConfigError("taxonomy category with empty id");
    if (!ids.insert(category.id).second) {
      throw ConfigError("duplicate taxonomy category id: " + category.id);
    }
    if (category.patterns.empty()) {
      throw ConfigError("taxonomy category " + category.id + " has no patterns");
    }
    for (const auto& pattern : category.patterns) {
      if (pattern.empty()) {
        throw ConfigError("taxonomy category " + category.id + " has an empty pattern");
      }
    }
  }
}

const TaxonomyCategory* Taxonomy::find(const std::string& id) const {
  for (const auto& category : categories) {
    if (category.id == id) return &category;
  }
  return nullptr;
}

Taxonomy Taxonomy::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open taxonomy file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("taxonomy file " + path + " is not valid JSON: " + e.what());
  }
  Taxonomy taxonomy;
  try {
    for (const auto& item : doc.at("categories")) {
      TaxonomyCategory category;
      category.id = item.at("id").get<std::string>();
      category.display_name = item.value("display_name", category.id);
      category.patterns = item.at("patterns").get<std::vector<std::string>>();
      taxonomy.categories.push_back(std::move(category));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("taxonomy file " + path + " is malformed: " + e.what());
  }
  taxonomy.validate();
  return taxonomy;
}

const Taxonomy& default_taxonomy() {
  static const Taxonomy taxonomy = [] {
    Taxonomy t;
    t.categories = {
        {"communication",
         "Communication",
         {"communicat", "public awareness", "informed about", "inform residents", "hotline",
          "information center", "updates to the public", "updates on the situation"}},
        {"flood_forecasting",
         "Flood forecasting and modeling",
         {"forecast", "flood model", "climate risk", "evaluate the risk"}},
        {"community_support",
         "Community involvement and support",
         {"low-income", "community organizations", "community advocates", "social workers",
          "food bank", "food assistance", "outreach", "support and resources",
          "resources and support", "community support", "vulnerable citizens",
          "vulnerable populations", "no one is left behind", "affected residents"}},
        {"infrastructure",
         "Infrastructure improvement and protection",
         {"infrastructure", "water treatment", "power plant", "vital installation"}},
        {"drainage", "Drainage systems", {"drainage"}},
        {"levees_zoning", "Levees and floodplain zoning", {"levee", "floodplain", "zoning"}},
        {"reservoir_management",
         "Reservoir management",
         {"reservoir", "controlled release", "water release"}},
        {"evacuation", "Evacuation", {"evacuat"}},
        {"planning",
         "Strategic and long-term planning",
         {"long-term plan", "long-term strateg", "long-term solution", "long-term flood",
          "long-term environmental strateg", "strategic planning", "action plan",
          "recovery plan", "response plan", "planning for the aftermath", "climate resilience",
          "prioritize actions", "plan our actions"}},
        {"flood_barriers",
         "Flood barriers and sandbagging",
         {"sandbag", "water barrier", "flood barrier", "flood control"}},
        {"green_infrastructure",
         "Green infrastructure",
         {"reforestation", "green recovery", "green infrastructure", "natural habitat",
          "rain garden", "wetland"}},
        {"environmental_assessment",
         "Environmental impact assessment",
         {"environmental", "ecosystem", "contamination", "wildlife", "natural resources"}},
        {"transportation", "Transportation accommodation", {"transport"}},
        {"temporary_housing", "Temporary housing and shelters", {"shelter", "temporary housing"}},
    };
    t.validate();
    return t;
  }();
  return taxonomy;
}

namespace {

std::map<std::string, size_t> zero_counts(const Taxonomy& taxonomy) {
  std::map<std::string, size_t> counts;
  for (const auto& category : taxonomy.categories) counts[category.id] = 0;
  return counts;
}

void classify_keyword(const std::string& body, const Taxonomy& taxonomy,
                      std::map<std::string, size_t>& counts) {
  for (const auto& sentence : text::split_sentences(body)) {
    for (const auto& category : taxonomy.categories) {
      for (const auto& pattern : category.patterns) {
        if (text::ifind(sentence, pattern)) {
          ++counts[category.id];
          break;
        }
      }
    }
  }
}

// One labeling exchange over the numbered sentences; expects lines of the
// form "<number>: id1, id2" (or "none"). Returns false when nothing usable
// came back, in which case the caller falls back to keyword counting.
bool classify_llm(const std::string& body, const Taxonomy& taxonomy, Backend& backend,
                  std::map<std::string, size_t>& counts) {
  std::vector<std::string> sentences = text::split_sentences(body);
  if (sentences.empty()) return true;

  std::ostringstream ids;
  for (size_t i = 0; i < taxonomy.categories.size(); ++i) {
    if (i > 0) ids << ", ";
    ids << taxonomy.categories[i].id;
  }
  CompletionRequest request;
  request.system_prompt =
      "You label sentences from a decision conference with recommendation categories.\n"
      "Allowed category ids: " +
      ids.str() +
      ".\nYou receive numbered sentences. Reply with exactly one line per sentence of the "
      "form \"<number>: <comma-separated category ids>\", writing \"none\" when no category "
      "applies. A sentence may carry several ids.";
  request.temperature = 0.0;
  std::ostringstream numbered;
  for (size_t i = 0; i < sentences.size(); ++i) {
    numbered << (i + 1) << ". " << sentences[i] << "\n";
  }
  request.history.push_back({"user", numbered.str()});

  std::string reply;
  try {
    reply = backend.complete(request);
  } catch (const Error&) {
    return false;
  }

  bool any_line = false;
  for (const auto& line : text::split_lines(reply)) {
    std::string trimmed = text::trim(line);
    size_t colon = trimmed.find(':');
    if (colon == std::string::npos) continue;
    std::string number = text::trim(trimmed.substr(0, colon));
    if (number.empty() ||
        !std::all_of(number.begin(), number.end(), [](unsigned char c) { return std::isdigit(c); })) {
      continue;
    }
    any_line = true;
    std::istringstream rest(trimmed.substr(colon + 1));
    std::string label;
    std::set<std::string> seen;
    while (std::getline(rest, label, ',')) {
      std::string id = text::trim(label);
      if (taxonomy.find(id) && seen.insert(id).second) ++counts[id];
    }
  }
  return any_line;
}

}  // namespace

std::map<std::string, size_t> classify_recommendations(const std::string& body,
                                                       const Taxonomy& taxonomy,
                                                       ClassifyMode mode, Backend* backend,
                                                       bool* llm_fell_back) {
  taxonomy.validate();
  std::map<std::string, size_t> counts = zero_counts(taxonomy);
  if (llm_fell_back) *llm_fell_back = false;

  if (mode == ClassifyMode::Llm && backend != nullptr) {
    if (classify_llm(body, taxonomy, *backend, counts)) return counts;
    counts = zero_counts(taxonomy);
    if (llm_fell_back) *llm_fell_back = true;
  } else if (mode == ClassifyMode::Llm) {
    if (llm_fell_back) *llm_fell_back = true;
  }

  classify_keyword(body, taxonomy, counts);
  return counts;
}

namespace {

void finalize_distribution(FrequencyDistribution& distribution) {
  distribution.total = 0;
  for (const auto& [id, count] : distribution.counts) distribution.total += count;
  distribution.shares.clear();
  for (const auto& [id, count] : distribution.counts) {
    distribution.shares[id] = distribution.total == 0
                                  ? 0.0
                                  : static_cast<double>(count) /
                                        static_cast<double>(distribution.total);
  }
}

void add_counts(std::map<std::string, size_t>& into, const std::map<std::string, size_t>& from) {
  for (const auto& [id, count] : from) into[id] += count;
}

}  // namespace

std::pair<FrequencyDistribution, FrequencyDistribution> build_distributions(
    const RunOutput& run, const Taxonomy& taxonomy, ClassifyMode mode, Backend* backend) {
  FrequencyDistribution explored;
  explored.scope = "explored";
  explored.counts = zero_counts(taxonomy);
  for (const auto& message : run.transcript.messages) {
    if (message.kind != MessageKind::AgentTurn && message.kind != MessageKind::ModeratorInsert) {
      continue;
    }
    add_counts(explored.counts, classify_recommendations(message.content, taxonomy, mode, backend));
  }
  finalize_distribution(explored);

  FrequencyDistribution selected;
  selected.scope = "selected";
  selected.counts = zero_counts(taxonomy);
  const Message* summary = run.transcript.summary_message();
  if (summary == nullptr || run.summary_failed) {
    selected.missing_summary = true;
  } else {
    selected.counts = classify_recommendations(summary->content, taxonomy, mode, backend);
  }
  finalize_distribution(selected);
  return {std::move(explored), std::move(selected)};
}

BatchReport aggregate_batch(const std::vector<RunOutput>& runs, const Taxonomy& taxonomy,
                            ClassifyMode mode, Backend* backend) {
  taxonomy.validate();
  std::map<int, std::vector<const RunOutput*>> groups;
  for (const auto& run : runs) {
    groups[run.transcript.scenario.probability_percent].push_back(&run);
  }

  BatchReport report;
  for (const auto& [probability, members] : groups) {
    const std::string& template_name = members.front()->transcript.scenario.template_name;
    for (const RunOutput* run : members) {
      if (run->transcript.scenario.template_name != template_name) {
        throw GroupingError("probability group " + std::to_string(probability) +
                            " mixes scenarios '" + template_name + "' and '" +
                            run->transcript.scenario.template_name + "'");
      }
    }

    BatchCell cell;
    cell.probability_percent = probability;
    cell.runs = members.size();
    cell.explored.scope = "explored";
    cell.explored.counts = zero_counts(taxonomy);
    cell.selected.scope = "selected";
    cell.selected.counts = zero_counts(taxonomy);

    for (const RunOutput* run : members) {
      auto [explored, selected] = build_distributions(*run, taxonomy, mode, backend);
      add_counts(cell.explored.counts, explored.counts);
      add_counts(cell.selected.counts, selected.counts);
      if (selected.missing_summary) cell.selected.missing_summary = true;

      std::set<std::string> summoned_this_session;
      for (const auto& entry : run->transcript.assembly_log) {
        if (entry.joined_at_index > 0) summoned_this_session.insert(entry.role_name);
      }
      for (const auto& role : summoned_this_session) ++cell.summon_tally[role];
    }
    finalize_distribution(cell.explored);
    finalize_distribution(cell.selected);
    report.cells.push_back(std::move(cell));
  }

  for (const auto& cell : report.cells) {
    report.runs_per_cell = std::max(report.runs_per_cell, cell.runs);
  }
  for (const auto& cell : report.cells) {
    if (cell.runs != report.runs_per_cell) report.uneven_cells = true;
  }
  return report;
}

namespace {

std::string format_share(double share) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", share);
  return buffer;
}

}  // namespace

std::string report_to_csv(const BatchReport& report, const Taxonomy& taxonomy) {
  std::ostringstream out;
  out << "probability,scope,category,count,share\n";
  for (const auto& cell : report.cells) {
    for (const FrequencyDistribution* distribution : {&cell.explored, &cell.selected}) {
      for (const auto& category : taxonomy.categories) {
        size_t count = distribution->counts.count(category.id)
                           ? distribution->counts.at(category.id)
                           : 0;
        double share = distribution->shares.count(category.id)
                           ? distribution->shares.at(category.id)
                           : 0.0;
        out << cell.probability_percent << ',' << distribution->scope << ',' << category.id
            << ',' << count << ',' << format_share(share) << "\n";
      }
    }
  }
  return out.str();
}

nlohmann::ordered_json report_to_json(const BatchReport& report, const Taxonomy& taxonomy) {
  nlohmann::ordered_json doc;
  doc["runs_per_cell"] = report.runs_per_cell;
  doc["uneven_cells"] = report.uneven_cells;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& cell : report.cells) {
    nlohmann::ordered_json entry;
    entry["probability_percent"] = cell.probability_percent;
    entry["runs"] = cell.runs;
    for (const FrequencyDistribution* distribution : {&cell.explored, &cell.selected}) {
      nlohmann::ordered_json scope;
      nlohmann::ordered_json counts;
      nlohmann::ordered_json shares;
      for (const auto& category : taxonomy.categories) {
        counts[category.id] =
            distribution->counts.count(category.id) ? distribution->counts.at(category.id) : 0;
        shares[category.id] =
            distribution->shares.count(category.id) ? distribution->shares.at(category.id) : 0.0;
      }
      scope["counts"] = counts;
      scope["total"] = distribution->total;
      scope["shares"] = shares;
      if (distribution->scope == "selected") {
        scope["missing_summary"] = distribution->missing_summary;
      }
      entry[distribution->scope] = scope;
    }
    nlohmann::ordered_json tally = nlohmann::ordered_json::object();
    for (const auto& [role, sessions] : cell.summon_tally) tally[role] = sessions;
    entry["summon_tally"] = tally;
    cells.push_back(std::move(entry));
  }
  doc["cells"] = cells;
  return doc;
}

ProbeParser probe_parser_from_string(const std::string& s) {
  if (text::iequals(s, "integer")) return ProbeParser::Integer;
  if (text::iequals(s, "first-number")) return ProbeParser::FirstNumber;
  throw ConfigError("unknown probe parser: " + s);
}

size_t ProbeHistogram::total() const {
  size_t sum = unparsed + failed;
  for (const auto& [value, count] : value_counts) sum += count;
  return sum;
}

namespace {

std::optional<long long> parse_integer_reply(const std::string& reply) {
  std::string trimmed = text::trim(reply);
  if (trimmed.empty()) return std::nullopt;
  size_t start = (trimmed[0] == '+' || trimmed[0] == '-') ? 1 : 0;
  if (start == trimmed.size()) return std::nullopt;
  for (size_t i = start; i < trimmed.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(trimmed[i]))) return std::nullopt;
  }
  try {
    return std::stoll(trimmed);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<long long> parse_first_number(const std::string& reply) {
  for (size_t i = 0; i < reply.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) continue;
    size_t begin = i;
    if (begin > 0 && (reply[begin - 1] == '-' || reply[begin - 1] == '+')) --begin;
    size_t end = i;
    while (end < reply.size() && std::isdigit(static_cast<unsigned char>(reply[end]))) ++end;
    if (end < reply.size() && reply[end] == '.' && end + 1 < reply.size() &&
        std::isdigit(static_cast<unsigned char>(reply[end + 1]))) {
      ++end;
      while (end < reply.size() && std::isdigit(static_cast<unsigned char>(reply[end]))) ++end;
    }
    try {
      return std::llround(std::stod(reply.substr(begin, end - begin)));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

long long bin_value(long long value, long long width) {
  if (width <= 1) return value;
  long long quotient = value / width;
  if (value % width != 0 && value < 0) --quotient;
  return quotient * width;
}

}  // namespace

ProbeHistogram distribution_probe(const std::string& prompt, size_t n, Backend& backend,
                                  ProbeParser parser, long long bin_width) {
  if (n < 1) throw ConfigError("probe needs at least one draw");
  if (bin_width < 1) throw ConfigError("bin width must be positive");

  ProbeHistogram histogram;
  histogram.n = n;
  for (size_t draw = 0; draw < n; ++draw) {
    CompletionRequest request;
    request.history.push_back({"user", prompt});
    std::string reply;
    try {
      reply = backend.complete(request);
    } catch (const Error&) {
      ++histogram.failed;
      continue;
    }
    std::optional<long long> value = parser == ProbeParser::Integer
                                         ? parse_integer_reply(reply)
                                         : parse_first_number(reply);
    if (!value) {
      ++histogram.unparsed;
      continue;
    }
    ++histogram.value_counts[bin_value(*value, bin_width)];
  }
  return histogram;
}

std::string histogram_to_csv(const ProbeHistogram& histogram) {
  std::ostringstream out;
  out << "value,count\n";
  for (const auto& [value, count] : histogram.value_counts) {
    out << value << ',' << count << "\n";
  }
  if (histogram.unparsed > 0) out << "unparsed," << histogram.unparsed << "\n";
  if (histogram.failed > 0) out << "failed," << histogram.failed << "\n";
  return out.str();
}

}  // namespace discourse
