#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "storygraph/orchestrator.hpp"

namespace storygraph {

namespace detail {

inline double log_binomial_pmf(int n, int i, double p) {
  if (p <= 0.0) return i == 0 ? 0.0 : -INFINITY;
  if (p >= 1.0) return i == n ? 0.0 : -INFINITY;
  return std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + i * std::log(p) +
         (n - i) * std::log1p(-p);
}

/// P(lo <= X <= hi) for X ~ Binomial(n, p).
inline double binomial_range(int n, int lo, int hi, double p) {
  double sum = 0.0;
  for (int i = lo; i <= hi; ++i) sum += std::exp(log_binomial_pmf(n, i, p));
  return std::min(1.0, sum);
}

/// Root of a monotone f on [0, 1] to within `tolerance`.
template <class F>
double bisect(F f, double target, bool increasing, double tolerance = 1e-12) {
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    const bool below = f(mid) < target;
    if (below == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

struct ConfidenceInterval {
  double low = 0.0;
  double high = 1.0;
};

/// Exact Clopper-Pearson interval: the lower bound solves
/// P(X >= k | p) = alpha/2, the upper bound solves P(X <= k | p) = alpha/2.
inline ConfidenceInterval clopper_pearson(int k, int n, double alpha = 0.05) {
  if (n < 1 || k < 0 || k > n || !(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::DomainError, "",
                "clopper_pearson needs 0 <= k <= n, n >= 1, 0 < alpha < 1 (got k=" + std::to_string(k) +
                    ", n=" + std::to_string(n) + ")");
  }
  const double half = alpha / 2.0;
  ConfidenceInterval ci;
  if (k > 0) ci.low = detail::bisect([&](double p) { return detail::binomial_range(n, k, n, p); }, half, true);
  if (k < n) ci.high = detail::bisect([&](double p) { return detail::binomial_range(n, 0, k, p); }, half, false);
  return ci;
}

struct CorpusPrompt {
  std::string prompt;
  TopologyClass expected = TopologyClass::Linear;
  std::string recorded_result;  // historical "Pass"/"Fail" from the original study, if any
};

struct Corpus {
  std::string name;
  std::vector<CorpusPrompt> prompts;
};

/// Instructions used to produce the two corpora with a live model.
inline const std::vector<std::pair<std::string, std::string>>& corpus_meta_prompts() {
  static const std::vector<std::pair<std::string, std::string>> prompts = {
      {"branching",
       "Generate 10 user prompts for a short story that can be represented as a branching narrative with parallel "
       "events. There should be around 8-12 events. The prompt should be around 1 to 3 sentences long. Return only "
       "the prompts, nothing else."},
      {"linear",
       "Generate 10 user prompts for a short story that can be represented as a linear sequence of events. There "
       "should be around 8-12 events in total. The prompt should be around 1 to 3 sentences long. Return only the "
       "prompts, nothing else."}};
  return prompts;
}

inline const std::vector<Corpus>& builtin_corpora() {
  static const std::vector<Corpus> corpora = [] {
    const auto B = TopologyClass::Branching;
    const auto L = TopologyClass::Linear;
    Corpus branching{"branching",
                     {
                         {"A group of friends enters a haunted mansion, each taking a different hallway that leads to "
                          "strange encounters before they reunite.",
                          B, "Pass"},
                         {"A colony ship lands on an alien world, where different crew members explore separate "
                          "regions that reveal conflicting discoveries.",
                          B, "Pass"},
                         {"A royal court faces a crisis: the king seeks peace, the queen demands war, and advisors "
                          "pursue secret plots that intertwine.",
                          B, "Pass"},
                         {"A city is struck by a mysterious blackout, forcing residents across different "
                          "neighborhoods to make choices that eventually converge.",
                          B, "Pass"},
                         {"A team of treasure hunters splits up inside a vast cave system, each path filled with "
                          "traps and clues pointing to the same artifact.",
                          B, "Pass"},
                         {"A rebellion begins in a futuristic city, where different factions take divergent actions "
                          "that may ultimately decide the same fate.",
                          B, "Pass"},
                         {"A group of scientists investigates a spreading anomaly, with each researcher following a "
                          "separate theory until their findings intersect.",
                          B, "Pass"},
                         {"A traveling circus arrives in a new town, and performers’ separate adventures—on "
                          "stage, in the streets, and in secret—eventually collide.",
                          B, "Pass"},
                         {"A family separated during a natural disaster each struggles to survive in different "
                          "locations, working toward reunion.",
                          B, "Pass"},
                         {"A medieval village faces an approaching army, with villagers choosing to fortify "
                          "defenses, hide in the forest, or negotiate, all leading to a shared resolution.",
                          B, "Pass"},
                     }};
    Corpus linear{"linear",
                  {
                      {"A child sets out to find their lost dog and faces a series of challenges along the way.", L,
                       "Pass"},
                      {"An archaeologist explores an ancient tomb, uncovering traps, puzzles, and a final treasure.", L,
                       "Pass"},
                      {"A knight embarks on a quest to rescue a captured friend, passing through forests, mountains, "
                       "and dungeons.",
                       L, "Pass"},
                      {"A group of astronauts lands on Mars and follows a series of steps to establish the first "
                       "colony.",
                       L, "Fail"},
                      {"A chef attempts to prepare a complex dish, encountering difficulties but completing it step "
                       "by step.",
                       L, "Pass"},
                      {"A musician travels from town to town, slowly building recognition until reaching a grand "
                       "concert.",
                       L, "Pass"},
                      {"A fisherman battles a storm at sea, struggling with wind, waves, and exhaustion before making "
                       "it back to shore.",
                       L, "Pass"},
                      {"A teacher prepares their students for an important exam, overcoming obstacles in study "
                       "sessions until the final test.",
                       L, "Fail"},
                      {"A young inventor builds a flying machine, refining it through a series of trials until it "
                       "finally succeeds.",
                       L, "Pass"},
                      {"A messenger must deliver an important letter across dangerous terrain, encountering "
                       "challenges one after another until the mission is complete.",
                       L, "Pass"},
                  }};
    return std::vector<Corpus>{std::move(branching), std::move(linear)};
  }();
  return corpora;
}

inline const Corpus& builtin_corpus(std::string_view name) {
  for (const auto& corpus : builtin_corpora()) {
    if (corpus.name == name) return corpus;
  }
  throw Error(ErrorCode::LookupError, std::string(name), "no built-in corpus named \"" + std::string(name) + "\"");
}

/// Corpus file: one prompt per line as `expected TAB prompt`; blank lines and
/// lines starting with '#' are skipped.
inline Corpus parse_corpus(std::string_view document, std::string name = "custom") {
  Corpus corpus{std::move(name), {}};
  auto lines = text::split(document, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.starts_with('#')) continue;
    const auto tab = line.find('\t');
    const std::string where = "line " + std::to_string(i + 1);
    if (tab == std::string::npos) throw Error(ErrorCode::MalformedDocument, where, "expected `class<TAB>prompt`");
    auto expected = parse_topology(text::trim(line.substr(0, tab)));
    if (!expected) throw Error(ErrorCode::MalformedDocument, where, "class must be Linear or Branching");
    auto prompt = text::trim(line.substr(tab + 1));
    if (prompt.empty()) throw Error(ErrorCode::MalformedDocument, where, "empty prompt");
    corpus.prompts.push_back({prompt, *expected, {}});
  }
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IOFailure, path.string(), "cannot read corpus " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), path.stem().string());
}

struct TrialRecord {
  std::string prompt;
  TopologyClass expected = TopologyClass::Linear;
  std::optional<TopologyClass> observed;
  std::string failure;  // "stage: message" when the pipeline failed
  int node_count = 0;
  bool pass = false;

  std::string observed_label() const {
    return observed ? std::string(to_string(*observed)) : "failed (" + failure + ")";
  }
};

struct EvalOptions {
  bool check_node_count = true;
  int jobs = 1;
};

inline TrialRecord run_trial(const CorpusPrompt& item, const GenerativeBackend& backend, const EvalOptions& options) {
  TrialRecord record{item.prompt, item.expected, std::nullopt, {}, 0, false};
  try {
    auto result = run_pipeline(item.prompt, backend);
    record.observed = classify_topology(result.graph);
    record.node_count = static_cast<int>(result.graph.nodes.size());
    const bool count_ok = record.node_count >= min_story_nodes && record.node_count <= max_story_nodes;
    record.pass = *record.observed == item.expected && (count_ok || !options.check_node_count);
  } catch (const std::exception& e) {
    auto* error = dynamic_cast<const Error*>(&e);
    record.failure = (error && !error->stage().empty() ? error->stage() + ": " : std::string()) + e.what();
  }
  return record;
}

/// One pipeline run per prompt; failures become failed trials. Records come
/// back in prompt order whatever the number of parallel jobs.
inline std::vector<TrialRecord> run_eval(const std::vector<CorpusPrompt>& prompts, const GenerativeBackend& backend,
                                         const EvalOptions& options = {}) {
  if (prompts.empty()) throw Error(ErrorCode::PreconditionFailed, "prompts", "evaluation needs at least one prompt");
  std::vector<TrialRecord> records(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) records[i] = run_trial(prompts[i], backend, options);
  };
  const int jobs = std::clamp(options.jobs, 1, static_cast<int>(prompts.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
  }
  return records;
}

struct EvalSummary {
  int k = 0;
  int n = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double alpha = 0.05;
};

inline EvalSummary summarize(const std::vector<TrialRecord>& records, double alpha = 0.05) {
  if (records.empty()) throw Error(ErrorCode::PreconditionFailed, "records", "nothing to summarize");
  EvalSummary summary;
  summary.n = static_cast<int>(records.size());
  for (const auto& r : records) summary.k += r.pass;
  summary.rate = static_cast<double>(summary.k) / summary.n;
  auto ci = clopper_pearson(summary.k, summary.n, alpha);
  summary.ci_low = ci.low;
  summary.ci_high = ci.high;
  summary.alpha = alpha;
  return summary;
}

inline ordered_json to_json(const EvalSummary& s) {
  return {{"k", s.k}, {"n", s.n}, {"rate", s.rate}, {"ci_low", s.ci_low}, {"ci_high", s.ci_high}, {"alpha", s.alpha}};
}

inline ordered_json to_json(const TrialRecord& r) {
  ordered_json out = {{"prompt", r.prompt},
                      {"expected", to_string(r.expected)},
                      {"observed", r.observed ? ordered_json(to_string(*r.observed)) : ordered_json()},
                      {"node_count", r.node_count},
                      {"pass", r.pass}};
  if (!r.failure.empty()) out["failure"] = r.failure;
  return out;
}

/// Table with the columns Narrative Type | Correct / Total | Success Rate |
/// 95% CI, bounds to two decimals.
inline std::string format_eval_table(const std::vector<std::pair<std::string, EvalSummary>>& rows) {
  auto fmt = [](const char* pattern, auto... values) {
    char buffer[128];
    std::snprintf(buffer, sizeof buffer, pattern, values...);
    return std::string(buffer);
  };
  const int confidence = static_cast<int>(std::lround((1.0 - (rows.empty() ? 0.05 : rows[0].second.alpha)) * 100));
  std::string out = fmt("%-16s %-16s %-13s %s\n", "Narrative Type", "Correct / Total", "Success Rate",
                        (std::to_string(confidence) + "% CI").c_str());
  for (const auto& [name, s] : rows) {
    out += fmt("%-16s %-16s %-13s [%.2f, %.2f]\n", name.c_str(), fmt("%d / %d", s.k, s.n).c_str(),
               fmt("%ld%%", std::lround(s.rate * 100)).c_str(), s.ci_low, s.ci_high);
  }
  return out;
}

}  // namespace storygraph
