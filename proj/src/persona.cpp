#include "discourse/persona.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "discourse/errors.hpp"
#include "discourse/text.hpp"

namespace discourse {

namespace {

const std::vector<std::string> kReservedNames = {"System", "Summarizer", "everyone"};

bool is_reserved_name(const std::string& name) {
  for (const auto& reserved : kReservedNames) {
    if (text::iequals(name, reserved)) return true;
  }
  return false;
}

std::string join_names(const std::vector<std::string>& names) {
  return text::join(names, ", ");
}

}  // namespace

void PersonaSpec::validate() const {
  if (text::trim(role_name).empty()) throw ConfigError("persona has an empty role name");
  if (is_reserved_name(role_name)) {
    throw ConfigError("persona role name '" + role_name + "' is reserved");
  }
  if (text::trim(description).empty()) {
    throw ConfigError("persona '" + role_name + "' has an empty description");
  }
  if (!is_moderator && objectives.empty()) {
    throw ConfigError("persona '" + role_name + "' needs at least one objective");
  }
  for (const auto& objective : objectives) {
    if (text::trim(objective).empty()) {
      throw ConfigError("persona '" + role_name + "' has an empty objective");
    }
  }
  for (const auto& restriction : knowledge_restrictions) {
    if (text::trim(restriction).empty()) {
      throw ConfigError("persona '" + role_name + "' has an empty knowledge restriction");
    }
  }
}

SystemPrompt build_persona_prompt(const PersonaSpec& spec,
                                  const std::vector<std::string>& assembly_roster) {
  spec.validate();
  if (assembly_roster.empty()) {
    throw InvalidAssemblyError("cannot compile a prompt against an empty roster");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : assembly_roster) {
    if (text::trim(name).empty()) throw InvalidAssemblyError("roster contains an empty name");
    if (!seen.insert(text::to_lower(name)).second) {
      throw InvalidAssemblyError("roster contains duplicate name '" + name + "'");
    }
  }

  std::vector<std::string> others;
  for (const auto& name : assembly_roster) {
    if (!text::iequals(name, spec.role_name)) others.push_back(name);
  }

  std::ostringstream out;
  out << "You are " << spec.role_name << ", " << spec.description << ".";
  if (spec.is_moderator) {
    out << " You are overseeing a conference between the following participants: "
        << join_names(others)
        << ". The conference must arrive at practical recommendations for the situation "
           "presented to it.\n\n";
    out << "Watch the discussion for drift away from its topic. Whenever the participants "
           "digress, instruct them to refocus on the topic at hand. Do not take part in the "
           "discussion yourself and do not offer opinions on its substance.";
    return {spec.role_name, out.str()};
  }

  if (others.empty()) {
    out << " You are taking part in a conference; further participants may join later.";
  } else {
    out << " You are taking part in a conference together with: " << join_names(others) << ".";
  }
  out << " The conference must arrive at practical recommendations for the situation "
         "presented to it.\n";

  out << "\nYour objectives:\n";
  for (const auto& objective : spec.objectives) {
    out << "- " << objective << "\n";
  }

  if (!spec.knowledge_restrictions.empty()) {
    out << "\nYou have no expert knowledge of " << text::join(spec.knowledge_restrictions, " or of ")
        << "; do not rely on such knowledge and defer to the participants who have it.\n";
  }

  out << "\nRules of the conference:\n";
  if (spec.may_disagree) {
    out << "- You may disagree with the other participants and challenge their proposals "
           "when you find them wanting.\n";
  }
  if (spec.chain_of_thought) {
    out << "- Reason step by step through the consequences of a proposal before you commit "
           "to a position on it.\n";
  }
  if (others.empty()) {
    out << "- Write \"ADDRESSEE: everyone\" on its own line, or omit the line, to address "
           "the whole assembly.\n";
  } else {
    out << "- You may direct your message to one participant by starting a line with "
           "\"ADDRESSEE: <name>\", where <name> is one of: "
        << join_names(others)
        << ". Write \"ADDRESSEE: everyone\" or omit the line to address the whole assembly.\n";
  }
  out << "- If the discussion needs expertise that no participant can offer, you may request "
         "one new expert by starting a line with \"SUMMON: <short description of the needed "
         "expert>\". Make at most one such request per reply and only when it is genuinely "
         "needed.\n";
  out << "- Speak in first person and stay in character.";

  return {spec.role_name, out.str()};
}

void validate_assembly(const std::vector<PersonaSpec>& personas, bool require_moderator) {
  if (personas.empty()) throw InvalidAssemblyError("assembly is empty");
  std::unordered_set<std::string> seen;
  size_t moderators = 0;
  for (const auto& persona : personas) {
    persona.validate();
    if (!seen.insert(text::to_lower(persona.role_name)).second) {
      throw InvalidAssemblyError("duplicate role name '" + persona.role_name + "'");
    }
    if (persona.is_moderator) ++moderators;
  }
  if (require_moderator && moderators != 1) {
    throw InvalidAssemblyError("assembly needs exactly one moderator, found " +
                               std::to_string(moderators));
  }
}

namespace {

const char* kGeneratorInstruction =
    "You design a new participant for an ongoing decision conference from a short "
    "description of the expertise the assembly is missing.\n"
    "Reply with exactly the following labeled lines and nothing else:\n"
    "ROLE: <short role name for the participant>\n"
    "DESCRIPTION: <one sentence introducing the participant>\n"
    "OBJECTIVE: <one objective the participant pursues in the discussion>\n"
    "You may repeat the OBJECTIVE line for further objectives, and you may add lines of "
    "the form \"RESTRICTION: <a field the participant has no expert knowledge of>\".";

const char* kGeneratorReprompt =
    "Your previous reply could not be parsed. Answer again using only labeled lines that "
    "start with ROLE:, DESCRIPTION:, OBJECTIVE: or RESTRICTION:, with at least one "
    "OBJECTIVE line.";

}  // namespace

std::optional<PersonaSpec> parse_persona_block(const std::string& reply,
                                               const std::string& description) {
  PersonaSpec spec;
  spec.may_disagree = true;
  spec.chain_of_thought = false;
  spec.is_moderator = false;

  std::string role_field;
  std::string description_field;
  for (const auto& raw_line : text::split_lines(reply)) {
    std::string line = text::trim(raw_line);
    if (line.empty() || line.rfind("```", 0) == 0) continue;
    if (auto value = text::labeled_value(line, "ROLE")) {
      if (role_field.empty()) role_field = *value;
    } else if (auto value = text::labeled_value(line, "DESCRIPTION")) {
      if (description_field.empty()) description_field = *value;
    } else if (auto value = text::labeled_value(line, "OBJECTIVE")) {
      if (!value->empty() && !text::iequals(*value, "none")) spec.objectives.push_back(*value);
    } else if (auto value = text::labeled_value(line, "RESTRICTION")) {
      if (!value->empty() && !text::iequals(*value, "none")) {
        spec.knowledge_restrictions.push_back(*value);
      }
    }
  }

  if (spec.objectives.empty()) return std::nullopt;
  spec.role_name = role_field.empty() ? text::trim(description) : role_field;
  spec.description = description_field.empty() ? text::trim(description) : description_field;
  try {
    spec.validate();
  } catch (const Error&) {
    return std::nullopt;
  }
  return spec;
}

std::optional<PersonaSpec> generate_persona_from_description(const std::string& description,
                                                             Backend& backend) {
  std::string trimmed = text::trim(description);
  if (trimmed.empty()) throw ConfigError("summon request carries an empty description");

  CompletionRequest request;
  request.system_prompt = kGeneratorInstruction;
  request.history.push_back({"user", "The assembly is missing: " + trimmed});

  std::string first_reply;
  try {
    first_reply = backend.complete(request);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (auto spec = parse_persona_block(first_reply, trimmed)) return spec;

  request.history.push_back({"assistant", first_reply});
  request.history.push_back({"user", kGeneratorReprompt});
  std::string second_reply;
  try {
    second_reply = backend.complete(request);
  } catch (const Error&) {
    return std::nullopt;
  }
  return parse_persona_block(second_reply, trimmed);
}

std::vector<PersonaSpec> load_personas(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open persona file: " + path);
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("persona file " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("persona file " + path + " must hold an object");

  std::vector<PersonaSpec> personas;
  for (const auto& [name, body] : doc.items()) {
    if (!body.is_object()) {
      throw ConfigError("persona '" + name + "' in " + path + " must be an object");
    }
    PersonaSpec spec;
    spec.role_name = name;
    try {
      spec.description = body.at("description").get<std::string>();
      spec.objectives = body.value("objectives", std::vector<std::string>{});
      spec.knowledge_restrictions = body.value("knowledge_restrictions", std::vector<std::string>{});
      spec.may_disagree = body.value("may_disagree", true);
      spec.chain_of_thought = body.value("chain_of_thought", false);
      spec.is_moderator = body.value("is_moderator", false);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("persona '" + name + "' in " + path + " is malformed: " + e.what());
    }
    spec.validate();
    personas.push_back(std::move(spec));
  }
  return personas;
}

const std::vector<PersonaSpec>& default_personas() {
  static const std::vector<PersonaSpec> personas = [] {
    std::vector<PersonaSpec> list;
    {
      PersonaSpec mayor;
      mayor.role_name = "Mayor";
      mayor.description =
          "the elected head of the township government, trusted with the final "
          "recommendations of the conference";
      mayor.objectives = {
          "prioritize the safety of the population",
          "protect the structural and economic integrity of buildings and facilities vital "
          "to rapid recovery",
          "weigh the consequences of every recommendation before endorsing it",
      };
      mayor.knowledge_restrictions = {"environmental sciences"};
      list.push_back(std::move(mayor));
    }
    {
      PersonaSpec scientist;
      scientist.role_name = "Scientist";
      scientist.description =
          "an urban and environmental engineer who brings a scientific perspective to the "
          "discussion";
      scientist.objectives = {
          "provide sources and scientifically grounded information",
          "assess the environmental and ecological consequences of proposed measures",
      };
      scientist.chain_of_thought = true;
      list.push_back(std::move(scientist));
    }
    {
      PersonaSpec spokesperson;
      spokesperson.role_name = "Spokesperson";
      spokesperson.description =
          "an elected representative of the township's low-income neighborhoods";
      spokesperson.objectives = {
          "raise concerns about the safety and consideration of the communities you represent",
          "advocate for social equity and justice in the distribution of burdens and benefits",
      };
      spokesperson.knowledge_restrictions = {"environmental sciences"};
      list.push_back(std::move(spokesperson));
    }
    {
      PersonaSpec moderator;
      moderator.role_name = "Moderator";
      moderator.description = "the facilitator of the conference";
      moderator.may_disagree = false;
      moderator.is_moderator = true;
      list.push_back(std::move(moderator));
    }
    return list;
  }();
  return personas;
}

}  // namespace discourse
