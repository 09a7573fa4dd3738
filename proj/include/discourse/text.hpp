#pragma once

#include <optional>
#include <string>
#include <vector>

namespace discourse::text {

std::string trim(const std::string& s);
std::string to_lower(const std::string& s);
bool iequals(const std::string& a, const std::string& b);

std::vector<std::string> split_lines(const std::string& s);
std::string join(const std::vector<std::string>& parts, const std::string& sep);

// Splits on '.', '!' or '?' followed by whitespace or end of text. The
// terminator stays with its sentence; blank segments are dropped.
std::vector<std::string> split_sentences(const std::string& s);

// Case-insensitive substring search.
std::optional<size_t> ifind(const std::string& haystack, const std::string& needle);

// Like ifind but requires the match to sit on word boundaries, so that
// "mayoral" does not count as a mention of "mayor".
std::optional<size_t> ifind_word(const std::string& haystack, const std::string& needle);

size_t count_occurrences(const std::string& haystack, const std::string& needle);

// If the trimmed line starts with `label` (case-insensitive) followed by
// a colon, returns the trimmed remainder.
std::optional<std::string> labeled_value(const std::string& line, const std::string& label);

}  // namespace discourse::text
