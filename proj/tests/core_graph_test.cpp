#include <gtest/gtest.h>

#include <random>

#include "storygraph/edit.hpp"
#include "storygraph/graph_io.hpp"
#include "storygraph/layout.hpp"
#include "storygraph/topology.hpp"
#include "storygraph/validate.hpp"
#include "test_support.hpp"

namespace sg = storygraph;
using sg::testing::blackout_document;
using sg::testing::chain;
using Ids = std::vector<std::string>;

namespace {

sg::StoryGraph blackout() { return sg::parse_graph(blackout_document()); }

sg::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const sg::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return sg::ErrorCode::LookupError;
}

std::string subject_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const sg::Error& e) {
    return e.subject();
  }
  return "<no error>";
}

sg::StoryGraph two_nodes(const std::vector<std::pair<std::string, std::string>>& edges) {
  sg::StoryGraph g;
  g.nodes.push_back({"1", "A", "a", {50, 50}, {}});
  g.nodes.push_back({"2", "B", "b", {350, 50}, {}});
  for (auto& [s, t] : edges) g.edges.push_back({sg::edge_id(s, t), s, t});
  return g;
}

}  // namespace

TEST(ParseGraph, BlackoutStoryListing) {
  auto g = blackout();
  ASSERT_EQ(g.nodes.size(), 7u);
  ASSERT_EQ(g.edges.size(), 8u);
  EXPECT_EQ(g.nodes[0].id, "1");
  EXPECT_EQ(g.nodes[0].label, "City of Lumina Plunged Into Darkness");
  EXPECT_EQ(g.find_node("7")->position, (sg::Position{1250, 300}));
  EXPECT_EQ(g.edges[6].id, "e5-6");
}

TEST(ParseGraph, EmptyDocument) {
  auto g = sg::parse_graph(R"({"nodes":[],"edges":[]})");
  EXPECT_TRUE(g.empty());
  EXPECT_TRUE(g.edges.empty());
}

TEST(ParseGraph, DanglingEdgeEndpoint) {
  std::string doc = blackout_document();
  auto at = doc.rfind("]}");
  doc.insert(at, R"(,{"id":"e9-1","source":"9","target":"1"})");
  try {
    sg::parse_graph(doc);
    FAIL();
  } catch (const sg::Error& e) {
    EXPECT_EQ(e.code(), sg::ErrorCode::IntegrityViolation);
    EXPECT_EQ(e.subject(), "9");
  }
}

TEST(ParseGraph, SyntaxErrorIsMalformed) {
  EXPECT_EQ(code_of([] { sg::parse_graph(R"({"nodes":[)"); }), sg::ErrorCode::MalformedDocument);
  EXPECT_EQ(code_of([] { sg::parse_graph(""); }), sg::ErrorCode::MalformedDocument);
}

TEST(ParseGraph, SchemaViolationsCarryPath) {
  EXPECT_EQ(subject_of([] { sg::parse_graph(R"({"nodes":[]})"); }), "/edges");
  EXPECT_EQ(subject_of([] {
              sg::parse_graph(R"({"nodes":[{"id":"1","data":{"label":"a"},"position":{"x":1,"y":2}}],"edges":[]})");
            }),
            "/nodes/0/data/segment");
  EXPECT_EQ(subject_of([] {
              sg::parse_graph(R"({"nodes":[{"id":1,"data":{"label":"a","segment":""},"position":{"x":1,"y":2}}],"edges":[]})");
            }),
            "/nodes/0/id");
  EXPECT_EQ(subject_of([] {
              sg::parse_graph(
                  R"({"nodes":[{"id":"1","data":{"label":"a","segment":""},"position":{"x":"1","y":2}}],"edges":[]})");
            }),
            "/nodes/0/position/x");
  EXPECT_EQ(code_of([] { sg::parse_graph(R"([1,2])"); }), sg::ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([] { sg::parse_graph(R"({"nodes":[],"edges":[],"edges":[]})"); }),
            sg::ErrorCode::SchemaViolation);
}

TEST(ParseGraph, StrictRejectsUnknownFieldsLenientKeepsThem) {
  const std::string doc =
      R"({"nodes":[{"id":"1","data":{"label":"a","segment":"s","mood":"grim"},"position":{"x":50,"y":50,"z":1},"color":"red"}],)"
      R"("edges":[],"title":"t"})";
  EXPECT_EQ(subject_of([] {
              sg::parse_graph(R"({"nodes":[],"edges":[],"title":"t"})");
            }),
            "/title");
  EXPECT_EQ(code_of([&] { sg::parse_graph(doc); }), sg::ErrorCode::SchemaViolation);

  auto g = sg::parse_graph(doc, sg::ParseMode::Lenient);
  EXPECT_EQ(g.nodes[0].extra_fields["color"], "red");
  EXPECT_EQ(g.nodes[0].extra_data_fields["mood"], "grim");
  EXPECT_EQ(g.nodes[0].extra_position_fields["z"], 1);
  EXPECT_EQ(g.extra_fields["title"], "t");
  auto again = sg::parse_graph(sg::serialize_graph(g), sg::ParseMode::Lenient);
  EXPECT_EQ(again, g);
}

TEST(ParseGraph, IntegrityViolations) {
  EXPECT_EQ(code_of([] {
              sg::parse_graph(R"({"nodes":[{"id":"1","data":{"label":"a","segment":""},"position":{"x":1,"y":2}}],)"
                              R"("edges":[{"id":"e1-1","source":"1","target":"1"}]})");
            }),
            sg::ErrorCode::IntegrityViolation);
  auto cyclic = sg::serialize_graph(two_nodes({{"1", "2"}, {"2", "1"}}));
  EXPECT_EQ(code_of([&] { sg::parse_graph(cyclic); }), sg::ErrorCode::IntegrityViolation);
}

TEST(SerializeGraph, EmptyGraph) { EXPECT_EQ(sg::serialize_graph({}), R"({"nodes":[],"edges":[]})"); }

TEST(SerializeGraph, ReproducesTheListingByteForByte) {
  std::string doc = blackout_document();
  while (!doc.empty() && doc.back() == '\n') doc.pop_back();
  EXPECT_EQ(sg::serialize_graph(blackout()), doc);
}

TEST(SerializeGraph, SingleNodeFieldNames) {
  sg::StoryGraph g;
  g.nodes.push_back({"1", "A", "B", {50, 50}, {}});
  EXPECT_EQ(sg::serialize_graph(g),
            "{\"nodes\":[\n{\"id\":\"1\",\"data\":{\"label\":\"A\",\"segment\":\"B\"},\"position\":{\"x\":50,\"y\":50}}\n],\n"
            "\"edges\":[]}");
}

TEST(SerializeGraph, FractionalCoordinatesSurvive) {
  sg::StoryGraph g;
  g.nodes.push_back({"1", "A", "B", {0.1, -12.75}, {}});
  EXPECT_EQ(sg::parse_graph(sg::serialize_graph(g)), g);
}

TEST(SerializeGraph, RoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    auto g = sg::testing::random_dag(rng, 15, 0.25, true);
    ASSERT_EQ(sg::parse_graph(sg::serialize_graph(g)), g) << sg::serialize_graph(g);
  }
}

TEST(Validate, BlackoutStoryIsOkWithMultiRootWarning) {
  auto report = sg::validate(blackout());
  EXPECT_TRUE(report.ok());
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_NE(report.warnings[0].find("2 roots"), std::string::npos);
}

TEST(Validate, ReportsCycleWitness) {
  auto report = sg::validate(two_nodes({{"1", "2"}, {"2", "1"}}));
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].kind, sg::ViolationKind::Cycle);
  EXPECT_EQ(report.violations[0].cycle, (Ids{"1", "2", "1"}));
}

TEST(Validate, ReportsDuplicateIdAndEdgeProblems) {
  auto g = blackout();
  g.nodes.push_back(g.nodes[2]);
  auto report = sg::validate(g);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].kind, sg::ViolationKind::DuplicateNodeId);
  EXPECT_EQ(report.violations[0].subject, "3");

  auto h = two_nodes({{"1", "2"}, {"1", "2"}});
  h.edges.push_back({"edge", "1", "1"});
  h.edges.push_back({"x", "2", "1"});
  report = sg::validate(h);
  std::vector<sg::ViolationKind> kinds;
  for (auto& v : report.violations) kinds.push_back(v.kind);
  EXPECT_EQ(kinds, (std::vector<sg::ViolationKind>{sg::ViolationKind::DuplicateEdge, sg::ViolationKind::SelfLoop,
                                                   sg::ViolationKind::NonCanonicalEdgeId, sg::ViolationKind::Cycle}));
}

TEST(ClassifyTopology, Examples) {
  EXPECT_EQ(sg::classify_topology(blackout()), sg::TopologyClass::Branching);
  EXPECT_EQ(sg::classify_topology(chain({"1"})), sg::TopologyClass::Linear);
  EXPECT_EQ(sg::classify_topology(chain({"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"})),
            sg::TopologyClass::Linear);
  EXPECT_EQ(code_of([] { sg::classify_topology({}); }), sg::ErrorCode::EmptyGraph);
  // two disjoint chains: degrees fine but not connected
  auto g = chain({"1", "2"});
  g.nodes.push_back({"3", "c", "c", {50, 550}, {}});
  EXPECT_EQ(sg::classify_topology(g), sg::TopologyClass::Branching);
}

TEST(ClassifyTopology, AgreesWithConnectivityFormulation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    auto g = sg::testing::random_dag(rng, 8, trial % 2 ? 0.2 : 0.45);
    ASSERT_EQ(sg::classify_topology(g) == sg::TopologyClass::Linear, sg::testing::oracle_is_linear(g))
        << sg::serialize_graph(g);
  }
}

TEST(RootsAndSinks, Examples) {
  EXPECT_EQ(sg::roots(blackout()), (Ids{"1", "5"}));
  EXPECT_EQ(sg::sinks(blackout()), (Ids{"7"}));
  EXPECT_EQ(sg::roots(chain({"1", "2", "3"})), (Ids{"1"}));
  EXPECT_EQ(sg::sinks(chain({"1", "2", "3"})), (Ids{"3"}));
  EXPECT_TRUE(sg::roots({}).empty());
  EXPECT_TRUE(sg::sinks({}).empty());
}

TEST(TopologicalOrder, Examples) {
  EXPECT_EQ(sg::topological_order(blackout()), (Ids{"1", "2", "3", "4", "5", "6", "7"}));
  EXPECT_EQ(sg::topological_order(chain({"3", "2", "1"})), (Ids{"3", "2", "1"}));
  EXPECT_EQ(sg::topological_order(blackout(), Ids{"7", "2", "1"}), (Ids{"1", "2", "7"}));
  EXPECT_EQ(code_of([] { sg::topological_order({}); }), sg::ErrorCode::EmptyGraph);
  EXPECT_EQ(code_of([] { sg::topological_order(blackout(), Ids{}); }), sg::ErrorCode::EmptySelection);
  EXPECT_EQ(code_of([] { sg::topological_order(blackout(), Ids{"42"}); }), sg::ErrorCode::UnknownNode);
}

TEST(TopologicalOrder, TieBreakUsesNumericAwareIds) {
  sg::StoryGraph g;
  for (std::string id : {"10", "9", "2"}) g.nodes.push_back({id, id, id, {50, 50}, {}});
  EXPECT_EQ(sg::topological_order(g), (Ids{"2", "9", "10"}));
  EXPECT_LT(sg::compare_natural("n2", "n10"), 0);
  EXPECT_LT(sg::compare_natural("7", "07"), 0);
  EXPECT_EQ(sg::compare_natural("abc", "abc"), 0);
}

TEST(TopologicalOrder, SoundAndDeterministicOnRandomGraphs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    auto g = sg::testing::random_dag(rng, 12, 0.3);
    auto order = sg::topological_order(g);
    ASSERT_EQ(order, sg::topological_order(g));
    ASSERT_EQ(order.size(), g.nodes.size());
    std::map<std::string, std::size_t> at;
    for (std::size_t i = 0; i < order.size(); ++i) at[order[i]] = i;
    for (auto& e : g.edges) ASSERT_LT(at[e.source], at[e.target]);
  }
}

TEST(EnumeratePaths, Examples) {
  EXPECT_EQ(sg::enumerate_paths(blackout()),
            (std::vector<Ids>{{"1", "2", "6", "7"}, {"1", "3", "6", "7"}, {"1", "4", "6", "7"}, {"5", "6", "7"}}));
  EXPECT_EQ(sg::enumerate_paths(chain({"1"})), (std::vector<Ids>{{"1"}}));
  EXPECT_EQ(sg::enumerate_paths(chain({"1", "2", "3"})).size(), 1u);
  EXPECT_EQ(code_of([] { sg::enumerate_paths({}); }), sg::ErrorCode::EmptyGraph);
}

TEST(EnumeratePaths, MatchesBruteForceOnRandomDags) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    auto g = sg::testing::random_dag(rng, 8, 0.35);
    auto paths = sg::enumerate_paths(g);
    std::set<Ids> as_set(paths.begin(), paths.end());
    ASSERT_EQ(as_set.size(), paths.size());
    ASSERT_EQ(as_set, sg::testing::oracle_paths(g)) << sg::serialize_graph(g);
  }
}

TEST(LayoutPositions, Examples) {
  auto linear = sg::layout_positions({{"a"}, {"b"}, {"c"}, {"d"}});
  EXPECT_EQ(linear["a"], (sg::Position{50, 50}));
  EXPECT_EQ(linear["b"], (sg::Position{350, 50}));
  EXPECT_EQ(linear["c"], (sg::Position{650, 50}));
  EXPECT_EQ(linear["d"], (sg::Position{950, 50}));

  auto branching = sg::layout_positions({{"1"}, {"2", "3", "4"}, {"5"}, {"6"}, {"7"}});
  EXPECT_EQ(branching["2"].y, 50);
  EXPECT_EQ(branching["3"].y, 550);
  EXPECT_EQ(branching["4"].y, 1050);
  EXPECT_EQ(branching["5"], (sg::Position{650, 300}));
  EXPECT_EQ(branching["7"], (sg::Position{1250, 300}));
}

TEST(LayoutPositions, LayerIndicesReproduceTheListingColumns) {
  auto g = blackout();
  auto layers = sg::layer_indices(g);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    EXPECT_EQ(sg::layout::column_x(layers[i]), g.nodes[i].position.x) << g.nodes[i].id;
  }
}

TEST(AddNode, Examples) {
  auto empty = sg::add_node({}, "Start", "Once upon a time.");
  EXPECT_EQ(empty.node_id, "1");
  EXPECT_EQ(empty.graph.nodes[0].position, (sg::Position{50, 50}));

  auto extended = sg::add_node(blackout(), "Aftermath", "", std::string("7"));
  EXPECT_EQ(extended.node_id, "8");
  EXPECT_EQ(extended.graph.find_node("8")->position, (sg::Position{1550, 300}));
  EXPECT_EQ(extended.graph.edges.back().id, "e7-8");
  EXPECT_TRUE(sg::validate(extended.graph).ok());

  EXPECT_EQ(code_of([] { sg::add_node(blackout(), "x", "y", std::string("7"), std::string("1")); }),
            sg::ErrorCode::WouldCreateCycle);
  EXPECT_EQ(code_of([] { sg::add_node(blackout(), "x", "y", std::string("99")); }), sg::ErrorCode::UnknownNode);
}

TEST(AddNode, FillsGapsAndFreeRows) {
  auto g = blackout();
  g = sg::remove_nodes(g, {"3"});
  auto inserted = sg::add_node(g, "Detour", "text", std::string("1"), std::string("6"));
  EXPECT_EQ(inserted.node_id, "3");
  // column x=350 holds rows 50 and 1050; 550 is free
  EXPECT_EQ(inserted.graph.find_node("3")->position, (sg::Position{350, 550}));
  EXPECT_TRUE(sg::validate(inserted.graph).ok());
}

TEST(UpdateNodeText, ChangesOnlyTheNamedNode) {
  auto g = blackout();
  g.find_node("2")->assets.push_back({"2:audio:v1", "2", sg::MediaKind::Audio, 1, "assets/2/audio-v1.wav", 4.0});
  auto updated = sg::update_node_text(g, "2", std::nullopt, std::string("Elena stays home."));
  EXPECT_EQ(updated.find_node("2")->segment, "Elena stays home.");
  EXPECT_EQ(updated.find_node("2")->label, g.find_node("2")->label);
  EXPECT_TRUE(updated.find_node("2")->assets[0].stale);
  EXPECT_EQ(updated.edges, g.edges);
  for (const auto& node : g.nodes) {
    if (node.id != "2") EXPECT_EQ(*updated.find_node(node.id), node);
  }

  auto both = sg::update_node_text(g, "2", std::string("L"), std::string("S"));
  EXPECT_EQ(both.find_node("2")->label, "L");
  EXPECT_EQ(both.find_node("2")->segment, "S");
  EXPECT_EQ(code_of([&] { sg::update_node_text(g, "99", std::nullopt, std::string("x")); }),
            sg::ErrorCode::UnknownNode);
}

TEST(DuplicateSubgraph, SingleNode) {
  auto dup = sg::duplicate_subgraph(blackout(), {"2"});
  ASSERT_EQ(dup.mapping, (std::vector<std::pair<std::string, std::string>>{{"2", "8"}}));
  EXPECT_TRUE(dup.graph.has_edge("1", "8"));
  EXPECT_FALSE(dup.graph.has_edge("8", "6"));
  EXPECT_EQ(dup.graph.edges.size(), 9u);
  EXPECT_EQ(dup.graph.find_node("8")->position, (sg::Position{350, 550}));
  EXPECT_EQ(dup.graph.find_node("8")->segment, dup.graph.find_node("2")->segment);
}

TEST(DuplicateSubgraph, BranchWithBoundaryEdges) {
  auto original = blackout();
  auto dup = sg::duplicate_subgraph(original, {"6", "2"});
  ASSERT_EQ(dup.mapping, (std::vector<std::pair<std::string, std::string>>{{"2", "8"}, {"6", "9"}}));
  Ids new_edges;
  for (std::size_t i = original.edges.size(); i < dup.graph.edges.size(); ++i) new_edges.push_back(dup.graph.edges[i].id);
  EXPECT_EQ(new_edges, (Ids{"e1-8", "e8-9", "e3-9", "e4-9", "e5-9"}));
  EXPECT_EQ(dup.graph.find_node("9")->position.y, original.find_node("6")->position.y + 500);
  for (std::size_t i = 0; i < original.nodes.size(); ++i) EXPECT_EQ(dup.graph.nodes[i], original.nodes[i]);
  EXPECT_TRUE(sg::validate(dup.graph).ok());
  EXPECT_EQ(code_of([] { sg::duplicate_subgraph(blackout(), {}); }), sg::ErrorCode::EmptySelection);
  EXPECT_EQ(code_of([] { sg::duplicate_subgraph(blackout(), {"0"}); }), sg::ErrorCode::UnknownNode);
}

TEST(StructuralEdits, AlwaysYieldValidGraphs) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    auto g = sg::testing::random_dag(rng, 10, 0.3);
    std::uniform_int_distribution<std::size_t> pick(0, g.nodes.size() - 1);
    const auto& a = g.nodes[pick(rng)].id;
    const auto& b = g.nodes[pick(rng)].id;
    try {
      auto added = sg::add_node(g, "new", "seg", a, b);
      ASSERT_TRUE(sg::validate(added.graph).ok());
    } catch (const sg::Error& e) {
      ASSERT_EQ(e.code(), sg::ErrorCode::WouldCreateCycle);
    }
    ASSERT_TRUE(sg::validate(sg::update_node_text(g, a, std::string("x"), std::string("y"))).ok());
    ASSERT_TRUE(sg::validate(sg::duplicate_subgraph(g, {a, b}).graph).ok());
  }
}
