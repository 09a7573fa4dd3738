#include "discourse/text.hpp"

#include <algorithm>
#include <cctype>

namespace discourse::text {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

}  // namespace

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(const std::string& a, const std::string& b) {
  return a.size() == b.size() && to_lower(a) == to_lower(b);
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : s) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  lines.push_back(cur);
  return lines;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_sentences(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (size_t i = 0; i < s.size(); ++i) {
    cur.push_back(s[i]);
    bool terminator = s[i] == '.' || s[i] == '!' || s[i] == '?';
    bool boundary = i + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 1]));
    if (terminator && boundary) {
      std::string t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    }
  }
  std::string t = trim(cur);
  if (!t.empty()) out.push_back(t);
  return out;
}

std::optional<size_t> ifind(const std::string& haystack, const std::string& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  std::string h = to_lower(haystack), n = to_lower(needle);
  size_t pos = h.find(n);
  if (pos == std::string::npos) return std::nullopt;
  return pos;
}

std::optional<size_t> ifind_word(const std::string& haystack, const std::string& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  std::string h = to_lower(haystack), n = to_lower(needle);
  size_t pos = 0;
  while ((pos = h.find(n, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_char(static_cast<unsigned char>(h[pos - 1]));
    size_t end = pos + n.size();
    bool right_ok = end == h.size() || !is_word_char(static_cast<unsigned char>(h[end]));
    if (left_ok && right_ok) return pos;
    ++pos;
  }
  return std::nullopt;
}

size_t count_occurrences(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return 0;
  std::string h = to_lower(haystack), n = to_lower(needle);
  size_t count = 0, pos = 0;
  while ((pos = h.find(n, pos)) != std::string::npos) {
    ++count;
    pos += n.size();
  }
  return count;
}

std::optional<std::string> labeled_value(const std::string& line, const std::string& label) {
  std::string t = trim(line);
  if (t.size() < label.size() + 1) return std::nullopt;
  if (to_lower(t.substr(0, label.size())) != to_lower(label)) return std::nullopt;
  size_t i = label.size();
  while (i < t.size() && (t[i] == ' ' || t[i] == '\t')) ++i;
  if (i >= t.size() || t[i] != ':') return std::nullopt;
  return trim(t.substr(i + 1));
}

}  // namespace discourse::text
