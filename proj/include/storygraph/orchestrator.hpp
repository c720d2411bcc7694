#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "storygraph/backend.hpp"
#include "storygraph/drafts.hpp"
#include "storygraph/edit.hpp"
#include "storygraph/graph_io.hpp"
#include "storygraph/layout.hpp"
#include "storygraph/prompts.hpp"
#include "storygraph/text.hpp"
#include "storygraph/topology.hpp"
#include "storygraph/validate.hpp"

namespace storygraph {

enum class TaskKind { Generate, Edit, MediaGen, Export, Extend };

inline std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Generate: return "Generate";
    case TaskKind::Edit: return "Edit";
    case TaskKind::MediaGen: return "MediaGen";
    case TaskKind::Export: return "Export";
    case TaskKind::Extend: return "Extend";
  }
  return "Edit";
}

/// Accepts the kind names and the command tags (generate, edit, media, export, extend).
inline std::optional<TaskKind> parse_task_kind(std::string_view name) {
  const std::string lowered = text::lower(text::trim(name));
  if (lowered == "generate") return TaskKind::Generate;
  if (lowered == "edit") return TaskKind::Edit;
  if (lowered == "mediagen" || lowered == "media") return TaskKind::MediaGen;
  if (lowered == "export") return TaskKind::Export;
  if (lowered == "extend") return TaskKind::Extend;
  return std::nullopt;
}

struct TaskRequest {
  std::string utterance;
  std::vector<std::string> selection;
  bool graph_present = false;
  std::optional<TaskKind> explicit_command;
};

struct RouteDecision {
  TaskKind kind = TaskKind::Edit;
  std::vector<std::string> selection;  // empty means "all nodes" for Edit
  std::string notice;
};

namespace routing {
inline const std::vector<std::string_view> media_stems = {"narrat", "voice", "audio", "image", "video",
                                                          "picture", "illustrat", "sound effect"};
inline const std::vector<std::string_view> export_stems = {"export", "compile", "subtitle"};
inline const std::vector<std::string_view> extend_stems = {"add", "extend", "continu", "next"};
// Requests that would restructure selected nodes rather than rewrite them.
inline const std::vector<std::string_view> structural_phrases = {"split", "new node", "add a node", "add node",
                                                                 "insert", "what happens next"};
}  // namespace routing

/// Rule-table routing. Explicit commands win; without a graph everything is a
/// generation; media words on a selection start media jobs; export words
/// export; structural requests on a selection extend (with a notice); other
/// selections are edits; continuation words extend; anything else edits the
/// whole graph.
inline RouteDecision route_request(const TaskRequest& request) {
  const std::string utterance = text::trim(request.utterance);
  if (utterance.empty() && !request.explicit_command) {
    throw Error(ErrorCode::UnroutableRequest, "", "request has neither an utterance nor a command");
  }
  RouteDecision decision;
  decision.selection = request.selection;
  if (request.explicit_command) {
    decision.kind = *request.explicit_command;
    return decision;
  }
  const bool selected = !request.selection.empty();
  auto has_phrase = [&](std::string_view phrase) {
    return phrase.find(' ') == std::string_view::npos ? text::has_word_stem(utterance, {phrase})
                                                      : text::has_phrase(utterance, phrase);
  };
  auto any_of = [&](const std::vector<std::string_view>& list) {
    return std::any_of(list.begin(), list.end(), has_phrase);
  };

  if (!request.graph_present) {
    decision.kind = TaskKind::Generate;
  } else if (selected && any_of(routing::media_stems)) {
    decision.kind = TaskKind::MediaGen;
  } else if (any_of(routing::export_stems)) {
    decision.kind = TaskKind::Export;
  } else if (selected && any_of(routing::structural_phrases)) {
    decision.kind = TaskKind::Extend;
    decision.notice = "request changes story structure; extending from the selection instead of rewriting it";
  } else if (selected) {
    decision.kind = TaskKind::Edit;
  } else if (any_of(routing::extend_stems) || any_of(routing::structural_phrases)) {
    decision.kind = TaskKind::Extend;
  } else {
    decision.kind = TaskKind::Edit;
    decision.notice = "no selection; editing every node";
  }
  return decision;
}

inline TaskKind route(const TaskRequest& request) { return route_request(request).kind; }

namespace detail {

inline BackendResponse call_backend(const GenerativeBackend& backend, BackendRequest request) {
  try {
    return backend.complete(request);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BackendFailure, request.task, e.what());
  }
}

}  // namespace detail

/// Routing delegated to the text backend. Answers outside the five kinds fall
/// back to the rule table, with a notice.
inline RouteDecision route_request(const TaskRequest& request, const GenerativeBackend& backend) {
  if (request.explicit_command || text::trim(request.utterance).empty()) return route_request(request);
  BackendRequest call{std::string(task::route),
                      prompts::route(request.utterance, request.graph_present, request.selection.size()),
                      {{"utterance", request.utterance},
                       {"graph_present", request.graph_present},
                       {"selection_size", request.selection.size()}}};
  auto answer = parse_task_kind(detail::call_backend(backend, std::move(call)).text);
  if (!answer) {
    auto decision = route_request(request);
    decision.notice = "backend routing answer was not a task kind; used rule table";
    return decision;
  }
  return {*answer, request.selection, {}};
}

/// Generator: free-form narrative for a user prompt.
inline std::string generate_story(const std::string& prompt, const GenerativeBackend& backend) {
  if (text::trim(prompt).empty()) throw Error(ErrorCode::PreconditionFailed, "prompt", "prompt is empty");
  BackendRequest request{std::string(task::generate), prompts::generate_story(prompt),
                         {{"mode", "story"}, {"prompt", prompt}}};
  auto response = detail::call_backend(backend, std::move(request));
  if (text::trim(response.text).empty()) throw Error(ErrorCode::BackendFailure, "generate", "backend returned no story");
  return response.text;
}

/// Reasoner: narrative -> drafts through the draft-list format. One repair
/// re-prompt is made when the first answer does not parse.
inline std::vector<NodeDraft> reason_nodes(const std::string& narrative, const GenerativeBackend& backend) {
  if (text::trim(narrative).empty()) throw Error(ErrorCode::PreconditionFailed, "narrative", "narrative is empty");
  BackendRequest request{std::string(task::reason), prompts::reason(narrative), {{"narrative", narrative}}};
  auto first = detail::call_backend(backend, request);
  try {
    return parse_draft_list(first.text);
  } catch (const Error& problem) {
    BackendRequest repair{std::string(task::reason), prompts::repair(first.text, problem.detail()),
                          {{"narrative", narrative},
                           {"repair", true},
                           {"previous_output", first.text},
                           {"problem", problem.detail()}}};
    auto second = detail::call_backend(backend, std::move(repair));
    try {
      return parse_draft_list(second.text);
    } catch (const Error& again) {
      throw Error(ErrorCode::UnparseableDecomposition, again.subject(),
                  "decomposition still unparseable after one repair: " + again.detail());
    }
  }
}

/// Diagrammer: drafts -> laid-out story graph with ids equal to ordinals.
inline StoryGraph diagram(const std::vector<NodeDraft>& drafts) {
  if (drafts.empty()) throw Error(ErrorCode::PreconditionFailed, "drafts", "no drafts to diagram");
  const int n = static_cast<int>(drafts.size());
  std::set<int> ordinals;
  for (const auto& draft : drafts) ordinals.insert(draft.ordinal);
  if (static_cast<int>(ordinals.size()) != n) throw Error(ErrorCode::PreconditionFailed, "drafts", "duplicate ordinals");

  StoryGraph graph;
  for (const auto& draft : drafts) {
    graph.nodes.push_back({std::to_string(draft.ordinal), draft.label, draft.segment, {}, {}});
  }
  for (const auto& draft : drafts) {
    std::set<int> seen;
    for (int successor : draft.successors) {
      if (!ordinals.contains(successor)) {
        throw Error(ErrorCode::DanglingSuccessor, std::to_string(successor),
                    "draft " + std::to_string(draft.ordinal) + " names missing successor " + std::to_string(successor));
      }
      if (successor == draft.ordinal) {
        throw Error(ErrorCode::CyclicDrafts, std::to_string(successor), "draft " + std::to_string(successor) + " follows itself");
      }
      if (!seen.insert(successor).second) continue;
      const std::string source = std::to_string(draft.ordinal);
      const std::string target = std::to_string(successor);
      graph.edges.push_back({edge_id(source, target), source, target});
    }
  }
  auto report = validate(graph);
  for (const auto& violation : report.violations) {
    if (violation.kind == ViolationKind::Cycle) {
      throw Error(ErrorCode::CyclicDrafts, violation.subject, "drafts form a " + violation.message);
    }
  }

  auto layer = layer_indices(graph);
  int depth = 0;
  for (int l : layer) depth = std::max(depth, l + 1);
  std::vector<std::vector<std::string>> layers(depth);
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) layers[layer[i]].push_back(graph.nodes[i].id);
  auto positions = layout_positions(layers);
  for (auto& node : graph.nodes) node.position = positions.at(node.id);
  require_valid(graph);
  return graph;
}

/// Inverse of diagram on structure: drafts numbered in topological order.
inline std::vector<NodeDraft> drafts_from_graph(const StoryGraph& graph) {
  auto order = topological_order(graph);
  std::map<std::string, int> ordinal;
  for (std::size_t i = 0; i < order.size(); ++i) ordinal[order[i]] = static_cast<int>(i) + 1;
  std::vector<NodeDraft> drafts;
  for (const auto& id : order) {
    const auto& node = require_node(graph, id);
    drafts.push_back({ordinal[id], node.label, node.segment, {}});
  }
  for (const auto& edge : graph.edges) drafts[ordinal[edge.source] - 1].successors.push_back(ordinal[edge.target]);
  return drafts;
}

/// Editor: rewrites the selected nodes' text, keeping ids, edges and
/// positions. Every backend call happens before any node changes, so a
/// failure leaves the graph untouched.
inline StoryGraph edit_nodes(const StoryGraph& graph, const std::vector<std::string>& selection,
                             const std::string& instruction, const GenerativeBackend& backend) {
  if (selection.empty()) throw Error(ErrorCode::EmptySelection, "", "edit needs at least one selected node");
  GraphIndex index(graph);
  std::set<std::string> selected;
  for (const auto& id : selection) {
    index.require(id);
    selected.insert(id);
  }

  struct Rewrite {
    std::string id, label, segment;
  };
  std::vector<Rewrite> rewrites;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto& node = index.node(i);
    if (!selected.contains(node.id)) continue;
    std::vector<std::string> before, after;
    for (std::size_t p : index.predecessors(i)) before.push_back(index.node(p).segment);
    for (std::size_t s : index.successors(i)) after.push_back(index.node(s).segment);
    BackendRequest request{std::string(task::edit),
                           prompts::edit(instruction, node.label, node.segment, before, after),
                           {{"instruction", instruction},
                            {"label", node.label},
                            {"segment", node.segment},
                            {"predecessors", before},
                            {"successors", after}}};
    auto reply = detail::call_backend(backend, std::move(request)).text;
    Rewrite rewrite{node.id, node.label, text::trim(reply)};
    try {
      auto parsed = ordered_json::parse(reply);
      if (parsed.is_object()) {
        if (parsed.contains("label") && parsed["label"].is_string()) rewrite.label = parsed["label"].get<std::string>();
        if (parsed.contains("segment") && parsed["segment"].is_string()) {
          rewrite.segment = parsed["segment"].get<std::string>();
        }
      }
    } catch (const nlohmann::json::exception&) {
      // plain-text reply: the whole reply is the new segment
    }
    if (text::trim(rewrite.label).empty()) rewrite.label = node.label;
    rewrites.push_back(std::move(rewrite));
  }

  StoryGraph result = graph;
  for (const auto& rewrite : rewrites) {
    result = update_node_text(std::move(result), rewrite.id, rewrite.label, rewrite.segment);
  }
  return result;
}

/// Adds one generated event after `after` (or after the last event in
/// story order when no anchor is given).
inline NodeInsertion extend_story(const StoryGraph& graph, const std::optional<std::string>& after,
                                  const std::string& instruction, const GenerativeBackend& backend) {
  std::optional<std::string> anchor = after;
  if (!anchor && !graph.empty()) anchor = topological_order(graph).back();
  std::string context;
  if (anchor) {
    std::vector<std::string> parts;
    GraphIndex index(graph);
    auto ancestors = index.ancestors_of(index.require(*anchor));
    for (const auto& id : topological_order(graph)) {
      auto i = *index.find(id);
      if (ancestors[i] || id == *anchor) parts.push_back(index.node(i).segment);
    }
    context = text::join(parts, "\n\n");
  }
  BackendRequest request{std::string(task::generate), prompts::extend_story(instruction, context),
                         {{"mode", "extend"}, {"instruction", instruction}, {"context", context}}};
  auto segment = text::trim(detail::call_backend(backend, std::move(request)).text);
  if (segment.empty()) throw Error(ErrorCode::BackendFailure, "generate", "backend returned no continuation");
  auto first = text::sentences(segment);
  std::string label = first.empty() ? segment : first.front();
  if (text::word_count(label) > 6) {
    auto words = text::split(label, ' ');
    words.resize(6);
    label = text::join(words, " ");
  }
  while (!label.empty() && std::string_view(".,;:!?").find(label.back()) != std::string_view::npos) label.pop_back();
  return add_node(graph, label.empty() ? "New event" : label, segment, anchor);
}

struct StageRecord {
  std::string stage;   // generate | reason | diagram | diagram_check
  std::string status;  // ok | failed
  std::string input;
  std::string output;
  std::int64_t elapsed_ms = 0;
};

struct PipelineResult {
  StoryGraph graph;
  std::string narrative;
  std::vector<NodeDraft> drafts;
  std::vector<StageRecord> transcripts;
  std::vector<std::string> warnings;
};

inline constexpr int min_story_nodes = 8;
inline constexpr int max_story_nodes = 12;

/// Generator -> Reasoner -> Diagrammer, recording a transcript per stage.
/// `observer` sees each stage record as soon as the stage finishes.
inline PipelineResult run_pipeline(const std::string& prompt, const GenerativeBackend& backend,
                                   const std::function<void(const StageRecord&)>& observer = {}) {
  if (text::trim(prompt).empty()) throw Error(ErrorCode::PreconditionFailed, "prompt", "prompt is empty");
  PipelineResult result;
  auto stage = [&](const std::string& name, const std::string& input, auto&& body) {
    auto start = std::chrono::steady_clock::now();
    StageRecord record{name, "ok", input, {}, 0};
    auto finish = [&] {
      record.elapsed_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
      result.transcripts.push_back(record);
      if (observer) observer(record);
    };
    try {
      record.output = body();
    } catch (const Error& e) {
      record.status = "failed";
      record.output = e.what();
      finish();
      throw e.with_stage(name);
    }
    finish();
  };

  stage("generate", prompt, [&] { return result.narrative = generate_story(prompt, backend); });
  stage("reason", result.narrative, [&] {
    result.drafts = reason_nodes(result.narrative, backend);
    return format_draft_list(result.drafts);
  });
  stage("diagram", format_draft_list(result.drafts), [&] {
    result.graph = diagram(result.drafts);
    return serialize_graph(result.graph);
  });
  const std::string document = serialize_graph(result.graph);
  stage("diagram_check", document, [&] {
    BackendRequest request{std::string(task::diagram_check), prompts::diagram_check(document), {{"document", document}}};
    auto verdict = text::trim(detail::call_backend(backend, std::move(request)).text);
    if (text::lower(verdict) != "ok") result.warnings.push_back("diagram check: " + verdict);
    return verdict;
  });

  result.graph.story_context = prompt;
  const int count = static_cast<int>(result.graph.nodes.size());
  if (count < min_story_nodes || count > max_story_nodes) {
    result.warnings.push_back("story has " + std::to_string(count) + " nodes, outside " +
                              std::to_string(min_story_nodes) + "-" + std::to_string(max_story_nodes));
  }
  return result;
}

}  // namespace storygraph
