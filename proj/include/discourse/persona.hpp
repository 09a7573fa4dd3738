#pragma once

#include <optional>
#include <string>
#include <vector>

#include "discourse/backend.hpp"

namespace discourse {

struct PersonaSpec {
  std::string role_name;
  std::string description;
  std::vector<std::string> knowledge_restrictions;
  std::vector<std::string> objectives;
  bool may_disagree = true;
  bool chain_of_thought = false;
  bool is_moderator = false;

  // Field-level checks: non-empty role name and description, no reserved
  // names, at least one objective unless this is the moderator.
  void validate() const;
};

struct SystemPrompt {
  std::string role_name;
  std::string text;
};

// Deterministic prompt compiler: same spec and roster always yield the same
// bytes. Roster must be non-empty and free of case-insensitive duplicates.
SystemPrompt build_persona_prompt(const PersonaSpec& spec,
                                  const std::vector<std::string>& assembly_roster);

// Checks roster invariants on an assembly: unique names, exactly one
// moderator when require_moderator is set.
void validate_assembly(const std::vector<PersonaSpec>& personas, bool require_moderator = true);

// Asks the backend to draft a persona for the given description. Retries the
// exchange once with a stricter instruction on a parse failure; afterwards
// reports summon-failed by returning nullopt. Empty description is a
// precondition violation (throws ConfigError).
std::optional<PersonaSpec> generate_persona_from_description(const std::string& description,
                                                             Backend& backend);

// Parses the labeled block a generation exchange is expected to return.
std::optional<PersonaSpec> parse_persona_block(const std::string& reply,
                                               const std::string& description);

std::vector<PersonaSpec> load_personas(const std::string& path);
const std::vector<PersonaSpec>& default_personas();

}  // namespace discourse
