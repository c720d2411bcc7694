#include <gtest/gtest.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <random>
#include <thread>

#include "storygraph/edit.hpp"
#include "storygraph/project.hpp"
#include "storygraph/scripted_backend.hpp"
#include "test_support.hpp"

namespace sg = storygraph;

namespace {

sg::StoryGraph blackout() { return sg::parse_graph(sg::testing::blackout_document()); }

// The graph a writer commits for version v, reproducible from v alone.
sg::StoryGraph graph_for_version(std::uint64_t v) {
  std::mt19937_64 rng(v * 7919 + 1);
  auto g = sg::testing::random_dag(rng, 9, 0.3);
  for (auto& node : g.nodes) node.segment = sg::testing::random_text(rng, 12);
  return g;
}

sg::Project rich_project() {
  auto project = sg::new_project("demo", "Demo");
  auto g = blackout();
  g.story_context = "A city is struck by a mysterious blackout.";
  sg::commit_graph(project, g, "generate");
  auto jobs = sg::enqueue_media(project.graph, {"1", "2"}, {sg::MediaKind::Audio, "scripted", "narrator", "calm"});
  sg::process_jobs(jobs, sg::ScriptedBackend(1), 1, sg::commit_to_graph(project.graph));
  project.jobs = jobs;
  project.transcripts.push_back({"generate", "ok", "prompt", "story", 3});
  sg::commit_graph(project, sg::update_node_text(project.graph, "3", std::string("Renamed"), std::nullopt), "edit");
  return project;
}

}  // namespace

TEST(Project, SaveLoadRoundTrip) {
  sg::testing::TempDir dir;
  auto project = rich_project();
  sg::save_project(dir.path(), project);
  auto loaded = sg::load_project(dir.path());
  EXPECT_EQ(loaded.project_id, project.project_id);
  EXPECT_EQ(loaded.version, project.version);
  EXPECT_EQ(loaded.graph, project.graph);
  EXPECT_EQ(loaded.graph.story_context, project.graph.story_context);
  ASSERT_EQ(loaded.snapshots.size(), 2u);
  EXPECT_EQ(loaded.snapshots[0].graph, project.snapshots[0].graph);
  EXPECT_EQ(loaded.jobs, project.jobs);
  EXPECT_EQ(loaded.transcripts[0].output, "story");
  EXPECT_EQ(sg::to_json(loaded).dump(), sg::to_json(project).dump());
}

TEST(Project, LoadRefusesCorruptFilesAndLeavesThem) {
  sg::testing::TempDir dir;
  EXPECT_THROW(sg::load_project(dir.path()), sg::Error);

  auto document = sg::to_json(rich_project());
  document["graph"]["document"]["edges"].push_back({{"id", "e7-1"}, {"source", "7"}, {"target", "1"}});
  const auto cyclic = document.dump();
  { std::ofstream(sg::project_file(dir.path())) << cyclic; }
  try {
    sg::load_project(dir.path());
    FAIL();
  } catch (const sg::Error& e) {
    EXPECT_EQ(e.code(), sg::ErrorCode::CorruptProject);
  }
  EXPECT_EQ(sg::testing::read_file(sg::project_file(dir.path())), cyclic);

  { std::ofstream(sg::project_file(dir.path())) << "{\"format\":\"storygraph-project\",\"project_id\":"; }
  EXPECT_THROW(sg::load_project(dir.path()), sg::Error);
}

TEST(Project, CreateAllocatesDistinctIds) {
  sg::testing::TempDir root;
  auto a = sg::create_project(root.path(), "My Story!");
  auto b = sg::create_project(root.path(), "My Story!");
  auto c = sg::create_project(root.path(), "../..");
  EXPECT_EQ(a.project_id, "my-story");
  EXPECT_EQ(b.project_id, "my-story-2");
  EXPECT_EQ(c.project_id, "project");
  EXPECT_TRUE(sg::load_project(root / "my-story-2").graph.empty());
}

TEST(Project, SnapshotsAndRestore) {
  auto project = sg::new_project("p", "p");
  for (int i = 1; i <= 3; ++i) sg::commit_graph(project, graph_for_version(i), "edit " + std::to_string(i));
  const auto edited = project.graph;
  sg::restore_snapshot(project, 2);
  EXPECT_EQ(project.graph, graph_for_version(2));
  ASSERT_EQ(project.snapshots.size(), 5u);
  EXPECT_EQ(project.snapshots[3].graph, edited);
  EXPECT_EQ(project.snapshots[4].graph, graph_for_version(2));
  for (std::size_t i = 1; i < project.snapshots.size(); ++i) {
    EXPECT_GT(project.snapshots[i].snapshot_id, project.snapshots[i - 1].snapshot_id);
  }
  EXPECT_THROW(sg::restore_snapshot(project, 42), sg::Error);

  auto cyclic = sg::testing::chain({"1", "2"});
  cyclic.edges.push_back({"e2-1", "2", "1"});
  const auto before = sg::to_json(project).dump();
  EXPECT_THROW(sg::commit_graph(project, cyclic, "bad"), sg::Error);
  EXPECT_EQ(sg::to_json(project).dump(), before);
}

TEST(AtomicWrite, CrashBeforeRenameKeepsThePreviousVersion) {
  sg::testing::TempDir dir;
  auto project = sg::new_project("p", "p");
  sg::commit_graph(project, graph_for_version(1), "start");
  sg::save_project(dir.path(), project);
  for (int trial = 0; trial < 50; ++trial) {
    const auto before = sg::testing::read_file(sg::project_file(dir.path()));
    auto next = project;
    sg::commit_graph(next, graph_for_version(trial + 2), "trial");
    pid_t child = fork();
    ASSERT_GE(child, 0);
    if (child == 0) {
      sg::save_project(dir.path(), next, [](const auto&, const auto&) { ::kill(::getpid(), SIGKILL); });
      _exit(0);
    }
    int status = 0;
    waitpid(child, &status, 0);
    ASSERT_TRUE(WIFSIGNALED(status));
    EXPECT_EQ(sg::testing::read_file(sg::project_file(dir.path())), before);
    auto reloaded = sg::load_project(dir.path());
    EXPECT_EQ(reloaded.version, project.version);
    sg::remove_stale_temps(sg::project_file(dir.path()));
  }
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& entry : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1u);
}

TEST(AtomicWrite, KillAtRandomMomentsNeverCorrupts) {
  sg::testing::TempDir dir;
  auto project = sg::new_project("p", "p");
  sg::save_project(dir.path(), project);
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    pid_t child = fork();
    ASSERT_GE(child, 0);
    if (child == 0) {
      auto current = sg::load_project(dir.path());
      for (;;) {
        sg::commit_graph(current, graph_for_version(current.version + 1), "loop");
        sg::save_project(dir.path(), current);
      }
    }
    std::this_thread::sleep_for(std::chrono::microseconds(2000 + rng() % 20000));
    ::kill(child, SIGKILL);
    waitpid(child, nullptr, 0);
    auto reloaded = sg::load_project(dir.path());
    EXPECT_TRUE(sg::validate(reloaded.graph).ok());
    if (reloaded.version > 0) EXPECT_EQ(reloaded.graph, graph_for_version(reloaded.version));
  }
}
