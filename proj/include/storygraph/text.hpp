#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace storygraph::text {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Whitespace-separated token count.
inline std::size_t word_count(std::string_view s) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

/// Lower-cased alphabetic words (apostrophes kept inside words).
inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalpha(u) || (c == '\'' && !current.empty())) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      out.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

/// Splits on '.', '!' or '?' followed by whitespace or end of text.
inline std::vector<std::string> sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t end = i + 1;
    while (end < s.size() && (s[end] == '"' || s[end] == '\'' || s[end] == ')')) ++end;
    if (end < s.size() && !is_space(s[end])) continue;
    auto sentence = trim(s.substr(start, end - start));
    if (!sentence.empty()) out.push_back(sentence);
    start = end;
    i = end - 1;
  }
  auto tail = trim(s.substr(std::min(start, s.size())));
  if (!tail.empty()) out.push_back(tail);
  return out;
}

/// Paragraphs separated by one or more blank lines.
inline std::vector<std::string> paragraphs(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t nl = s.find('\n', pos);
    std::string_view line = s.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (trim(line).empty()) {
      if (!trim(current).empty()) out.push_back(trim(current));
      current.clear();
    } else {
      if (!current.empty()) current.push_back(' ');
      current += trim(line);
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!trim(current).empty()) out.push_back(trim(current));
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i != 0) out.append(sep);
    out += parts[i];
  }
  return out;
}

/// True when any word of `s` starts with one of `stems`.
inline bool has_word_stem(std::string_view s, const std::vector<std::string_view>& stems) {
  for (const auto& word : words(s)) {
    for (auto stem : stems) {
      if (word.compare(0, stem.size(), stem) == 0) return true;
    }
  }
  return false;
}

/// True when `phrase` (lower case, single-spaced words) occurs in `s` on word boundaries.
inline bool has_phrase(std::string_view s, std::string_view phrase) {
  return (" " + join(words(s), " ") + " ").find(" " + std::string(phrase) + " ") != std::string::npos;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    out.emplace_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

/// FNV-1a, used to derive deterministic seeds from text.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t hash = 14695981039346656037ull) {
  for (char c : s) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace storygraph::text
