#pragma once

#include <string>

namespace discourse {

inline constexpr const char* kProbabilityPlaceholder = "<probability parameter>";

struct ScenarioTemplate {
  std::string template_name;
  std::string body;  // contains kProbabilityPlaceholder exactly once

  // Throws TemplateError when the placeholder is missing or duplicated.
  void validate() const;

  static ScenarioTemplate from_file(const std::string& path);
};

struct ScenarioInstance {
  std::string template_name;
  int probability_percent = 0;
  std::string rendered_text;
};

// Substitutes "<p>%" for the placeholder. Probability outside [0, 100]
// raises ParameterError; template problems raise TemplateError.
ScenarioInstance render_scenario(const ScenarioTemplate& tpl, int probability_percent);

}  // namespace discourse
