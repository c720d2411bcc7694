#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "storygraph/text.hpp"

// Instruction text sent to language-model backends. The scripted backend
// reads the structured inputs instead, so these only matter for remote use.
namespace storygraph::prompts {

inline std::string generate_story(std::string_view user_prompt) {
  return "Write a short story for the request below. Tell it as 8 to 12 distinct events, one paragraph per "
         "event, separated by blank lines. If the request implies parallel storylines, describe the point where "
         "they split, each thread's events, and the point where they meet again.\n\nRequest: " +
         std::string(user_prompt);
}

inline std::string extend_story(std::string_view instruction, std::string_view context) {
  return "Continue the story with exactly one new event, written as a single paragraph.\n\nStory so far:\n" +
         std::string(context) + "\n\nInstruction: " + std::string(instruction);
}

inline std::string reason(std::string_view narrative) {
  return "Decompose the story into nodes. Output one line per node and nothing else, with four tab-separated "
         "fields: ordinal (1..n in story order), a short title, the node's text segment, and a comma-separated "
         "list of the ordinals that directly follow it (empty for the last event). Parallel storylines get "
         "separate successors; events where storylines meet list the meeting node as successor from every "
         "thread.\n\nStory:\n" +
         std::string(narrative);
}

inline std::string repair(std::string_view previous_output, std::string_view problem) {
  return "Your previous answer could not be parsed (" + std::string(problem) +
         "). Reply again using exactly four tab-separated fields per line: ordinal, title, segment, successor "
         "ordinals. No other text.\n\nPrevious answer:\n" +
         std::string(previous_output);
}

inline std::string diagram_check(std::string_view document) {
  return "Check that this story graph document is well formed: every edge joins existing nodes and the story "
         "flows without loops. Reply OK, or list the problems.\n\n" +
         std::string(document);
}

inline std::string edit(std::string_view instruction, std::string_view label, std::string_view segment,
                        const std::vector<std::string>& before, const std::vector<std::string>& after) {
  return "Rewrite one story node following the instruction. Keep its role in the story. Reply with JSON "
         "{\"label\": ..., \"segment\": ...} and nothing else.\n\nInstruction: " +
         std::string(instruction) + "\nTitle: " + std::string(label) + "\nText: " + std::string(segment) +
         "\nPreceding events: " + text::join(before, " | ") + "\nFollowing events: " + text::join(after, " | ");
}

inline std::string route(std::string_view utterance, bool graph_present, std::size_t selection_size) {
  return "Classify the user's request as exactly one of: Generate, Edit, MediaGen, Export, Extend. Reply with "
         "the single word.\nStory graph present: " +
         std::string(graph_present ? "yes" : "no") + "\nSelected nodes: " + std::to_string(selection_size) +
         "\nRequest: " + std::string(utterance);
}

inline std::string media(std::string_view kind, std::string_view segment, std::string_view context,
                         std::string_view style) {
  std::string out = "Create " + std::string(kind) + " for this story scene.\nScene: " + std::string(segment);
  if (!context.empty()) out += "\nStory so far: " + std::string(context);
  if (!style.empty()) out += "\nStyle: " + std::string(style);
  return out;
}

}  // namespace storygraph::prompts
