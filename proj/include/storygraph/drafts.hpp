#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "storygraph/error.hpp"
#include "storygraph/text.hpp"

namespace storygraph {

/// One story beat proposed by the reasoner before it becomes a graph node.
struct NodeDraft {
  int ordinal = 0;
  std::string label;
  std::string segment;
  std::vector<int> successors;

  friend bool operator==(const NodeDraft&, const NodeDraft&) = default;
};

// Draft list wire format, one draft per line:
//
//   line       := ordinal TAB label TAB segment TAB successors
//   successors := "" | ordinal ("," ordinal)*      spaces around commas allowed
//   ordinal    := [1-9][0-9]*
//
// Ordinals run 1..n in line order. Blank lines, lines starting with '#', and
// code-fence lines starting with "```" are ignored. Labels and segments never
// contain tabs or newlines; the formatter replaces them with spaces.

namespace detail {

inline std::string flatten_field(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

inline bool parse_ordinal(std::string_view s, int& value) {
  auto trimmed = text::trim(s);
  if (trimmed.empty() || trimmed[0] == '0') return false;
  auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
  return ec == std::errc{} && ptr == trimmed.data() + trimmed.size() && value > 0;
}

[[noreturn]] inline void draft_error(std::size_t line_number, const std::string& what) {
  throw Error(ErrorCode::UnparseableDecomposition, "line " + std::to_string(line_number), what);
}

}  // namespace detail

inline std::string format_draft_list(const std::vector<NodeDraft>& drafts) {
  std::string out;
  for (const auto& draft : drafts) {
    out += std::to_string(draft.ordinal);
    out += '\t';
    out += detail::flatten_field(draft.label);
    out += '\t';
    out += detail::flatten_field(draft.segment);
    out += '\t';
    for (std::size_t i = 0; i < draft.successors.size(); ++i) {
      if (i != 0) out += ',';
      out += std::to_string(draft.successors[i]);
    }
    out += '\n';
  }
  return out;
}

/// Parses the draft list format. Successor references are not checked here;
/// the diagrammer reports dangling or cyclic ones.
inline std::vector<NodeDraft> parse_draft_list(std::string_view document) {
  std::vector<NodeDraft> drafts;
  auto lines = text::split(document, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t number = i + 1;
    auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.starts_with('#') || trimmed.starts_with("```")) continue;

    auto fields = text::split(line, '\t');
    if (fields.size() != 4) {
      detail::draft_error(number, "expected 4 tab-separated fields, found " + std::to_string(fields.size()));
    }
    NodeDraft draft;
    if (!detail::parse_ordinal(fields[0], draft.ordinal)) detail::draft_error(number, "bad ordinal \"" + fields[0] + "\"");
    if (draft.ordinal != static_cast<int>(drafts.size()) + 1) {
      detail::draft_error(number, "ordinal " + std::to_string(draft.ordinal) + " out of sequence");
    }
    draft.label = text::trim(fields[1]);
    draft.segment = text::trim(fields[2]);
    if (draft.label.empty()) detail::draft_error(number, "empty label");
    if (!text::trim(fields[3]).empty()) {
      for (const auto& item : text::split(fields[3], ',')) {
        int successor = 0;
        if (!detail::parse_ordinal(item, successor)) detail::draft_error(number, "bad successor \"" + item + "\"");
        draft.successors.push_back(successor);
      }
    }
    drafts.push_back(std::move(draft));
  }
  if (drafts.empty()) throw Error(ErrorCode::UnparseableDecomposition, "", "no drafts found");
  return drafts;
}

}  // namespace storygraph
