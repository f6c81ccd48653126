#include <gtest/gtest.h>

#include <atomic>

#include "taskforge/pipeline.hpp"
#include "test_util.hpp"

namespace taskforge {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

PipelineConfig golden_config(const fs::path& out) {
  PipelineConfig c;
  c.inputs = {testing::fixture("golden25.txt")};
  c.out_dir = out;
  c.seed = 42;
  c.gateway.backend = BackendKind::mock;
  return c;
}

// Behaves like the mock until `fail_after` calls, then reports a transport failure.
class FlakyBackend final : public Backend {
 public:
  explicit FlakyBackend(int fail_after) : fail_after_(fail_after) {}
  BackendKind kind() const noexcept override { return BackendKind::mock; }
  ChatResponse complete(const ChatRequest& request) override {
    if (calls_.fetch_add(1) >= fail_after_) throw TransportError("connection reset");
    return mock_complete(request);
  }

 private:
  int fail_after_;
  std::atomic<int> calls_{0};
};

TEST(Pipeline, MockRunProducesConsistentOutputs) {
  TempDir dir;
  const auto r = run(golden_config(dir / "out"));
  ASSERT_EQ(r.exit_status, 0) << r.diagnostic;
  ASSERT_TRUE(r.manifest);
  EXPECT_TRUE(r.manifest->consistent());
  EXPECT_EQ(r.manifest->corpus.ingested, 25u);
  EXPECT_EQ(r.manifest->corpus.deduplicated, 25u);
  EXPECT_EQ(r.manifest->groups.sampled, 5u);
  for (const char* f : {"manifest.json", "dataset.txt", "audit.jsonl", "summary.txt", "config.json", "store.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const auto on_disk = manifest_from_json(nlohmann::json::parse(testing::read_file(dir / "out/manifest.json")));
  EXPECT_EQ(to_json(on_disk), to_json(*r.manifest));
  // k = 2 generation requests per group, n = 5 scoring requests per parsed candidate.
  EXPECT_GE(r.stats.backend_calls, 5u * 2u + r.manifest->groups.scored * 5u);
}

TEST(Pipeline, RerunIsFullyResumedWithoutBackendCalls) {
  TempDir dir;
  const auto first = run(golden_config(dir / "out"));
  ASSERT_EQ(first.exit_status, 0) << first.diagnostic;
  const auto second = run(golden_config(dir / "out"));
  ASSERT_EQ(second.exit_status, 0) << second.diagnostic;
  EXPECT_EQ(second.stats.backend_calls, 0u);
  EXPECT_EQ(second.stats.stages_run.size(), 0u);
  EXPECT_EQ(second.manifest->dataset_digest, first.manifest->dataset_digest);
}

TEST(Pipeline, CacheAloneAvoidsBackendCalls) {
  TempDir dir;
  auto c = golden_config(dir / "out");
  const auto first = run(c);
  ASSERT_EQ(first.exit_status, 0) << first.diagnostic;
  c.resume = false;
  const auto second = run(c);
  ASSERT_EQ(second.exit_status, 0) << second.diagnostic;
  EXPECT_EQ(second.stats.backend_calls, 0u);
  EXPECT_EQ(second.stats.cache_hits, first.stats.backend_calls);
  EXPECT_EQ(second.manifest->dataset_digest, first.manifest->dataset_digest);
}

TEST(Pipeline, IndependentRunsAgree) {
  TempDir a, b;
  auto ca = golden_config(a / "out");
  auto cb = golden_config(b / "out");
  cb.concurrency = 1;
  cb.gateway.max_in_flight = 1;
  const auto ra = run(ca);
  const auto rb = run(cb);
  ASSERT_EQ(ra.exit_status, 0);
  ASSERT_EQ(rb.exit_status, 0);
  EXPECT_EQ(ra.manifest->dataset_digest, rb.manifest->dataset_digest);
  EXPECT_EQ(testing::read_file(a / "out/manifest.json"), testing::read_file(b / "out/manifest.json"));
  EXPECT_EQ(testing::read_file(a / "out/audit.jsonl"), testing::read_file(b / "out/audit.jsonl"));
}

TEST(Pipeline, InvalidThresholdIsConfigError) {
  TempDir dir;
  auto c = golden_config(dir / "out");
  c.curation.threshold = 11.0;
  const auto r = run(c);
  EXPECT_EQ(r.exit_status, 2);
  EXPECT_FALSE(r.manifest);
  EXPECT_NE(r.diagnostic.find("[config]"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out/manifest.json"));
}

TEST(Pipeline, MissingInputIsConfigError) {
  TempDir dir;
  PipelineConfig c;
  c.out_dir = dir / "out";
  EXPECT_EQ(run(c).exit_status, 2);
  c.input_dir = dir / "nope";
  EXPECT_EQ(run(c).exit_status, 2);
}

TEST(Pipeline, TooSmallCorpusFailsWithoutManifest) {
  TempDir dir;
  testing::write_file(dir / "in/tiny.txt", "one.\ntwo.\nthree.\n");
  PipelineConfig c;
  c.inputs = {dir / "in/tiny.txt"};
  c.out_dir = dir / "out";
  const auto r = run(c);
  EXPECT_EQ(r.exit_status, 1);
  EXPECT_NE(r.diagnostic.find("[groups]"), std::string::npos) << r.diagnostic;
  EXPECT_FALSE(fs::exists(dir / "out/manifest.json"));
}

TEST(Pipeline, InterruptedRunResumesToSameResult) {
  TempDir clean, dir;
  const auto reference = run(golden_config(clean / "out"));
  ASSERT_EQ(reference.exit_status, 0);

  auto c = golden_config(dir / "out");
  c.cache = false;
  c.concurrency = 1;
  c.gateway.max_in_flight = 1;
  c.gateway.max_retries = 0;
  const auto broken = run(c, std::make_unique<FlakyBackend>(12));
  EXPECT_EQ(broken.exit_status, 1);
  EXPECT_FALSE(broken.manifest);
  EXPECT_FALSE(fs::exists(dir / "out/manifest.json"));
  EXPECT_NE(broken.diagnostic.find("rerun"), std::string::npos) << broken.diagnostic;

  const auto resumed = run(c);
  ASSERT_EQ(resumed.exit_status, 0) << resumed.diagnostic;
  EXPECT_EQ(resumed.manifest->dataset_digest, reference.manifest->dataset_digest);
  EXPECT_EQ(to_json(*resumed.manifest), to_json(*reference.manifest));
  EXPECT_LT(resumed.stats.backend_calls, reference.stats.backend_calls);
}

TEST(Pipeline, FailedRunRemovesStaleManifest) {
  TempDir dir;
  auto c = golden_config(dir / "out");
  ASSERT_EQ(run(c).exit_status, 0);
  ASSERT_TRUE(fs::exists(dir / "out/manifest.json"));
  c.seed = 43;
  c.cache = false;
  c.gateway.max_retries = 0;
  EXPECT_EQ(run(c, std::make_unique<FlakyBackend>(0)).exit_status, 1);
  EXPECT_FALSE(fs::exists(dir / "out/manifest.json"));
}

TEST(Pipeline, ChangingSeedReusesIngest) {
  TempDir dir;
  auto c = golden_config(dir / "out");
  ASSERT_EQ(run(c).exit_status, 0);
  c.seed = 7;
  const auto r = run(c);
  ASSERT_EQ(r.exit_status, 0);
  EXPECT_EQ(r.stats.stages_skipped, (std::vector<std::string>{"ingest"}));
  EXPECT_EQ(r.stats.stages_run.front(), "groups");
}

TEST(Pipeline, ChangingThresholdOnlyRecurates) {
  TempDir dir;
  auto c = golden_config(dir / "out");
  ASSERT_EQ(run(c).exit_status, 0);
  c.curation.threshold = 10.0;
  const auto r = run(c);
  ASSERT_EQ(r.exit_status, 0);
  EXPECT_EQ(r.stats.stages_run, (std::vector<std::string>{"curated"}));
  EXPECT_EQ(r.stats.backend_calls, 0u);
}

TEST(Pipeline, EmptyDatasetIsStillSuccess) {
  TempDir dir;
  auto c = golden_config(dir / "out");
  c.curation.threshold = 10.0;
  const auto r = run(c);
  ASSERT_EQ(r.exit_status, 0) << r.diagnostic;
  // No golden group reaches a perfect mean of 10 under the mock backend.
  EXPECT_EQ(r.manifest->total_instances, 0u);
  EXPECT_TRUE(r.manifest->empty);
  EXPECT_TRUE(r.manifest->consistent());
  EXPECT_EQ(testing::read_file(dir / "out/dataset.txt"), "");
  EXPECT_NE(r.summary.find("empty dataset"), std::string::npos);
}

TEST(PipelineConfig, FileMergeRebasesRelativePaths) {
  TempDir dir;
  testing::write_file(dir / "cfg/config.json",
                      R"({"inputs": ["data/a.txt"], "out": "run", "seed": 7, "threshold": 8.5, "concurrency": 3})");
  const auto c = PipelineConfig::from_file(dir / "cfg/config.json");
  ASSERT_EQ(c.inputs.size(), 1u);
  EXPECT_EQ(c.inputs[0], dir / "cfg" / "data/a.txt");
  EXPECT_EQ(c.out_dir, dir / "cfg" / "run");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.curation.threshold, 8.5);
  EXPECT_EQ(c.concurrency, 3u);
  EXPECT_EQ(c.gateway.max_in_flight, 3u);
}

TEST(PipelineConfig, UnknownKeysAndBadValuesAreRejected) {
  PipelineConfig c;
  EXPECT_THROW(c.merge_json(nlohmann::json{{"treshold", 7.0}}), ConfigError);
  EXPECT_THROW(c.merge_json(nlohmann::json{{"seed", "forty-two"}}), ConfigError);
  EXPECT_THROW(c.merge_json(nlohmann::json{{"backend", "carrier-pigeon"}}), ConfigError);
  EXPECT_THROW(c.merge_json(nlohmann::json::array()), ConfigError);
  TempDir dir;
  testing::write_file(dir / "bad.json", "{not json");
  EXPECT_THROW(PipelineConfig::from_file(dir / "bad.json"), ConfigError);
}

TEST(PipelineConfig, InputDirectoryIsSortedAndSkipsHiddenFiles) {
  TempDir dir;
  testing::write_file(dir / "in/b.txt", "x\n");
  testing::write_file(dir / "in/a.txt", "y\n");
  testing::write_file(dir / "in/.hidden", "z\n");
  PipelineConfig c;
  c.input_dir = dir / "in";
  const auto files = c.resolve_inputs();
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename(), "a.txt");
  EXPECT_EQ(files[1].filename(), "b.txt");
}

TEST(StageDigests, LocationIndependent) {
  TempDir a, b;
  testing::write_file(a / "x/corpus.txt", "same\n");
  testing::write_file(b / "y/corpus.txt", "same\n");
  PipelineConfig c;
  const auto da = stage_digests(c, {a / "x/corpus.txt"});
  const auto db = stage_digests(c, {b / "y/corpus.txt"});
  EXPECT_EQ(da.curated, db.curated);
  c.curation.threshold = 8.0;
  const auto dc = stage_digests(c, {a / "x/corpus.txt"});
  EXPECT_EQ(dc.scores, da.scores);
  EXPECT_NE(dc.curated, da.curated);
}

}  // namespace
}  // namespace taskforge
