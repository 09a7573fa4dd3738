#include "discourse/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "discourse/errors.hpp"

namespace discourse {

namespace {

std::size_t count_placeholders(const std::string& body) {
  std::size_t count = 0, pos = 0;
  const std::string needle = kProbabilityPlaceholder;
  while ((pos = body.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

void ScenarioTemplate::validate() const {
  std::size_t n = count_placeholders(body);
  if (n == 0)
    throw TemplateError(template_name + ": scenario template lacks the probability placeholder");
  if (n > 1)
    throw TemplateError(template_name + ": scenario template has " + std::to_string(n) +
                        " probability placeholders, expected exactly one");
}

ScenarioTemplate ScenarioTemplate::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TemplateError("cannot open scenario template: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string body = buf.str();
  // Editors append a trailing newline; the template body is the text itself.
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
  ScenarioTemplate tpl{std::filesystem::path(path).stem().string(), body};
  tpl.validate();
  return tpl;
}

ScenarioInstance render_scenario(const ScenarioTemplate& tpl, int probability_percent) {
  tpl.validate();
  if (probability_percent < 0 || probability_percent > 100)
    throw ParameterError("probability must be within [0, 100], got " +
                         std::to_string(probability_percent));
  std::string rendered = tpl.body;
  std::size_t pos = rendered.find(kProbabilityPlaceholder);
  rendered.replace(pos, std::string(kProbabilityPlaceholder).size(),
                   std::to_string(probability_percent) + "%");
  return ScenarioInstance{tpl.template_name, probability_percent, std::move(rendered)};
}

}  // namespace discourse
