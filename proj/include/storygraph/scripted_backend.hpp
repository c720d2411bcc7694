#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "storygraph/backend.hpp"
#include "storygraph/drafts.hpp"
#include "storygraph/graph_io.hpp"
#include "storygraph/text.hpp"

namespace storygraph {

/// Words (matched as word prefixes) that signal parallel storylines.
inline const std::vector<std::string_view>& branch_cue_stems() {
  static const std::vector<std::string_view> stems = {
      "each",     "different", "separat",  "split",    "parallel", "faction", "meanwhile", "diverg",
      "converg",  "intertwin", "intersect", "collid",  "reunit",   "reunion", "shared",    "simultaneous"};
  return stems;
}

inline bool has_branch_cue(std::string_view s) {
  return text::has_word_stem(s, branch_cue_stems()) || text::has_phrase(s, "different paths") ||
         text::has_phrase(s, "split up");
}

/// Words per second used for scripted narration and for timing fallbacks.
inline constexpr double narration_words_per_second = 2.5;

// Deterministic stand-in for the remote models.
//
//  generate   A story of 8 to 12 beats (count drawn from seed and prompt), one
//             paragraph of two sentences per beat; the first beat restates the
//             prompt. Extend mode returns one further paragraph.
//  reason     Beats are paragraphs, or groups of two sentences when the text
//             has no blank lines. The first beat containing a branch cue,
//             provided at least two beats separate it from the final two,
//             opens up to three parallel threads of contiguous beats; every
//             thread flows into the second-to-last beat, which leads to the
//             final one. Without a cue the beats form a chain.
//  edit       Shortening instructions keep the first sentence; "add ..." appends
//             the requested fact; tone words add a mood sentence. The text
//             always changes.
//  audio      duration_s = words / 2.5. video: max(4, words / 2.5). image: a
//             fixed 1024x1024 placeholder. Payloads are placeholder bytes.
class ScriptedBackend : public GenerativeBackend {
 public:
  explicit ScriptedBackend(std::uint64_t seed = 0,
                           std::set<Capability> capabilities = {Capability::Text, Capability::Audio, Capability::Image,
                                                                Capability::Video})
      : seed_(seed), capabilities_(std::move(capabilities)) {}

  std::string name() const override { return "scripted"; }
  std::set<Capability> capabilities() const override { return capabilities_; }
  std::uint64_t seed() const noexcept { return seed_; }

  BackendResponse complete(const BackendRequest& request) const override {
    const auto& in = request.inputs;
    auto str = [&](const char* key) { return in.contains(key) && in[key].is_string() ? in[key].get<std::string>() : ""; };
    if (request.task == task::generate) {
      if (str("mode") == "extend") return {extend(str("instruction"), str("context")), {}, {}};
      return {story(str("prompt")), {}, {}};
    }
    if (request.task == task::reason) return {format_draft_list(decompose(str("narrative"))), {}, {}};
    if (request.task == task::diagram_check) return {check(str("document")), {}, {}};
    if (request.task == task::edit) return {rewrite(str("instruction"), str("label"), str("segment")), {}, {}};
    if (request.task == task::route) {
      return {classify(str("utterance"), in.value("graph_present", false), in.value("selection_size", 0)), {}, {}};
    }
    if (request.task == task::audio || request.task == task::image || request.task == task::video) {
      return media(request.task, str("segment"));
    }
    throw Error(ErrorCode::BackendFailure, request.task, "scripted backend has no task \"" + request.task + "\"");
  }

  /// Beat decomposition used by the reason task, exposed for tests.
  static std::vector<NodeDraft> decompose(std::string_view narrative) {
    auto beats = text::paragraphs(narrative);
    if (beats.size() < 2) {
      auto all = text::sentences(narrative);
      beats.clear();
      for (std::size_t i = 0; i < all.size(); i += 2) {
        beats.push_back(i + 1 < all.size() ? all[i] + " " + all[i + 1] : all[i]);
      }
    }
    const int n = static_cast<int>(beats.size());
    std::vector<NodeDraft> drafts(n);
    for (int i = 0; i < n; ++i) {
      drafts[i].ordinal = i + 1;
      drafts[i].label = label_for(beats[i]);
      drafts[i].segment = beats[i];
    }

    int branch = 0;  // ordinal of the branch point, 0 when linear
    for (int i = 1; i <= n; ++i) {
      if (n - 2 - i >= 2 && has_branch_cue(beats[i - 1])) {
        branch = i;
        break;
      }
    }
    if (branch == 0) {
      for (int i = 1; i < n; ++i) drafts[i - 1].successors = {i + 1};
      return drafts;
    }

    for (int i = 1; i < branch; ++i) drafts[i - 1].successors = {i + 1};
    const int thread_beats = n - 2 - branch;
    const int width = std::min(3, thread_beats);
    const int meet = n - 1;
    int next = branch + 1;
    for (int t = 0; t < width; ++t) {
      int length = thread_beats / width + (t < thread_beats % width ? 1 : 0);
      drafts[branch - 1].successors.push_back(next);
      for (int k = 0; k < length; ++k) {
        int ordinal = next + k;
        drafts[ordinal - 1].successors = {k + 1 < length ? ordinal + 1 : meet};
      }
      next += length;
    }
    drafts[meet - 1].successors = {n};
    return drafts;
  }

 private:
  std::mt19937_64 rng_for(std::string_view task_name, std::string_view content) const {
    return std::mt19937_64(text::fnv1a(content, text::fnv1a(task_name, seed_ * 0x9E3779B97F4A7C15ull + 1)));
  }

  template <std::size_t N>
  static std::string pick(std::mt19937_64& rng, const std::array<std::string_view, N>& items) {
    return std::string(items[rng() % N]);
  }

  static std::string fill(std::string pattern, const std::string& place, const std::string& thing) {
    for (auto [key, value] : {std::pair<std::string_view, const std::string&>{"{place}", place}, {"{thing}", thing}}) {
      for (auto at = pattern.find(key); at != std::string::npos; at = pattern.find(key)) {
        pattern.replace(at, key.size(), value);
      }
    }
    return pattern;
  }

  static constexpr std::array<std::string_view, 8> places_ = {"old bridge",   "river bend", "market square",
                                                              "forest edge",  "hill road",  "harbor",
                                                              "quiet village", "ruined tower"};
  static constexpr std::array<std::string_view, 5> things_ = {"goal", "answer", "destination", "prize",
                                                              "next clue"};
  static constexpr std::array<std::string_view, 8> obstacles_ = {
      "A sudden obstacle blocked the way near the {place}.",
      "The way grew harder as the {thing} slipped out of reach.",
      "A stranger at the {place} offered advice that came with a price.",
      "Night fell, and the {thing} seemed farther away than ever.",
      "An old map pointed toward the {place}, though its markings were faded.",
      "A storm rolled in, forcing a long wait beside the {place}.",
      "Doubt crept in when the trail around the {place} went cold.",
      "A careless mistake cost precious time near the {place}."};
  static constexpr std::array<std::string_view, 8> answers_ = {
      "With patience, a way forward appeared.",
      "Courage won out over fear, and the journey went on.",
      "A clever idea turned the setback into progress.",
      "Help arrived from an unexpected friend.",
      "Every step brought the {thing} a little closer.",
      "The lesson learned there would matter later.",
      "Slowly, the problem gave way.",
      "Hope returned with the first light of morning."};
  static constexpr std::array<std::string_view, 3> ordinals_ = {"first", "second", "third"};

  std::string beat(std::mt19937_64& rng) const {
    const std::string place = pick(rng, places_);
    const std::string thing = pick(rng, things_);
    return fill(pick(rng, obstacles_), place, thing) + " " + fill(pick(rng, answers_), place, thing);
  }

  static std::string lower_first(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
  }

  std::string story(const std::string& prompt) const {
    auto rng = rng_for(task::generate, prompt);
    const int beats = 8 + static_cast<int>(rng() % 5);
    std::string opening = detail::flatten_field(text::trim(prompt));
    if (!opening.empty() && opening.back() != '.' && opening.back() != '!' && opening.back() != '?') opening += '.';

    std::vector<std::string> paragraphs;
    paragraphs.push_back(opening + " It all began on an ordinary morning.");
    const bool branching = has_branch_cue(prompt);
    if (branching) {
      const int thread_beats = beats - 3;
      const int width = std::min(3, thread_beats);
      for (int t = 0; t < width; ++t) {
        int length = thread_beats / width + (t < thread_beats % width ? 1 : 0);
        for (int k = 0; k < length; ++k) {
          std::string b = beat(rng);
          paragraphs.push_back("On the " + std::string(ordinals_[t]) + " path, " + lower_first(b));
        }
      }
      paragraphs.push_back("All the paths finally met again at the " + pick(rng, places_) +
                           ". Stories were traded, and the threads of the tale came together.");
    } else {
      for (int i = 2; i < beats; ++i) paragraphs.push_back(beat(rng));
    }
    paragraphs.push_back("At last, the journey reached its end. Everything that had happened felt worth it.");
    return text::join(paragraphs, "\n\n");
  }

  std::string extend(const std::string& instruction, const std::string& context) const {
    auto rng = rng_for("extend", instruction + "\n" + context);
    return "Then the story moved on. " + beat(rng);
  }

  static std::string label_for(const std::string& beat_text) {
    auto first = text::sentences(beat_text);
    std::istringstream in(first.empty() ? beat_text : first.front());
    std::string word, label;
    for (int i = 0; i < 6 && in >> word; ++i) {
      if (!label.empty()) label += ' ';
      label += word;
    }
    while (!label.empty() && std::string_view(".,;:!?").find(label.back()) != std::string_view::npos) label.pop_back();
    return label.empty() ? "Untitled" : label;
  }

  static std::string check(const std::string& document) {
    try {
      parse_graph(document);
      return "OK";
    } catch (const Error& e) {
      return e.what();
    }
  }

  static std::string rewrite(const std::string& instruction, const std::string& label, const std::string& segment) {
    const std::string lowered = text::lower(instruction);
    std::string result = segment;
    if (text::has_word_stem(instruction, {"short", "condens", "concise", "trim", "brief"})) {
      auto parts = text::sentences(segment);
      if (!parts.empty()) result = parts.front();
    }
    if (auto at = (" " + lowered).find(" add "); at != std::string::npos) {
      std::string fact = text::trim(instruction.substr(at + 4));
      for (std::string_view lead : {"the fact that ", "that "}) {
        if (text::lower(fact).starts_with(lead)) fact = fact.substr(lead.size());
      }
      if (!fact.empty()) {
        fact[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(fact[0])));
        if (fact.back() != '.') fact += '.';
        result = text::trim(result + " " + fact);
      }
    }
    auto all_words = text::words(instruction);
    for (std::size_t i = 0; i < all_words.size(); ++i) {
      const bool after = (all_words[i] == "sound" || all_words[i] == "more") && i + 1 < all_words.size();
      const bool before = (all_words[i] == "tone" || all_words[i] == "way") && i > 0;
      if (after || before) {
        const std::string& tone = after ? all_words[i + 1] : all_words[i - 1];
        result = text::trim(result + " Everything felt " + tone + ".");
        break;
      }
    }
    if (result == segment) result = text::trim(segment + " (" + text::trim(instruction) + ")");
    ordered_json reply = {{"label", label}, {"segment", result}};
    return reply.dump();
  }

  static std::string classify(const std::string& utterance, bool graph_present, int selection_size) {
    if (!graph_present) return "Generate";
    if (text::has_word_stem(utterance, {"narrat", "voice", "audio", "image", "video", "picture"})) return "MediaGen";
    if (text::has_word_stem(utterance, {"export", "compile"})) return "Export";
    if (selection_size == 0 && text::has_word_stem(utterance, {"extend", "continue", "next", "add"})) return "Extend";
    return "Edit";
  }

  BackendResponse media(const std::string& kind, const std::string& segment) const {
    const double words = static_cast<double>(text::word_count(segment));
    BackendResponse response;
    response.payload = "scripted " + kind + " placeholder " + std::to_string(text::fnv1a(segment, seed_)) + "\n";
    response.metadata["placeholder"] = true;
    if (kind == task::audio) {
      response.metadata["duration_s"] = words / narration_words_per_second;
      response.metadata["ext"] = "wav";
    } else if (kind == task::video) {
      response.metadata["duration_s"] = std::max(4.0, words / narration_words_per_second);
      response.metadata["ext"] = "mp4";
    } else {
      response.metadata["width"] = 1024;
      response.metadata["height"] = 1024;
      response.metadata["ext"] = "png";
    }
    return response;
  }

  std::uint64_t seed_;
  std::set<Capability> capabilities_;
};

}  // namespace storygraph
