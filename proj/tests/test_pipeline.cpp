#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <map>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "elab/course_io.hpp"
#include "elab/digest.hpp"
#include "elab/error.hpp"
#include "elab/pipeline.hpp"
#include "elab/report.hpp"
#include "test_util.hpp"

using namespace elab;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config_json() {
  return nlohmann::json::parse(R"({
    "seed": 3,
    "courses": [
      {"synthetic": {"course_id": "ca", "n_students": 40, "weeks": 3, "n_quizzes_per_week": 2, "seed": 1}},
      {"synthetic": {"course_id": "cb", "n_students": 40, "weeks": 3, "n_quizzes_per_week": 4,
                     "engagement_decay_fail": 0.6, "seed": 2}}
    ],
    "train": {"hidden": [4], "max_epochs": 8, "patience": 4},
    "explain": {"n_per_class": 3, "lime": {"n_samples": 300}, "shap": {"n_coalitions": 256},
                "confounder": {"max_iters": 10}}
  })");
}

PipelineConfig small_config(const std::string& name, int workers = 1) {
  auto c = config_from_json(small_config_json());
  c.out = elab::test::temp_dir(name);
  c.workers = workers;
  return c;
}

// Every regular file under dir except timings, keyed by relative path.
std::map<std::string, std::string> digests(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "timings.json") continue;
    out[fs::relative(e.path(), dir).generic_string()] = sha256_file(e.path());
  }
  return out;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(ELAB_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesAndRejectsUnknownKeys) {
  const auto c = config_from_json(small_config_json());
  EXPECT_EQ(c.seed, 3u);
  ASSERT_EQ(c.courses.size(), 2u);
  EXPECT_EQ(c.courses[1].course_id, "cb");
  EXPECT_EQ(c.explain.n_per_class, 3u);
  EXPECT_NO_THROW(c.validate());

  auto bad = small_config_json();
  bad["explain"]["lime"]["n_sample"] = 10;
  EXPECT_THROW(config_from_json(bad), ValidationError);
  bad = small_config_json();
  bad["colour"] = "red";
  EXPECT_THROW(config_from_json(bad), ValidationError);
}

TEST(Config, HashIgnoresOutAndWorkers) {
  auto a = small_config("hash_a", 1);
  auto b = small_config("hash_b", 2);
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 4;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, PresetReplacesCourses) {
  PipelineConfig c;
  apply_preset(c, "demo");
  EXPECT_EQ(course_ids(c), (std::vector<std::string>{"demo-a", "demo-b"}));
  EXPECT_EQ(course_groups(c).size(), 1u);
  EXPECT_THROW(apply_preset(c, "nope"), ValidationError);
}

TEST(ParallelFor, CoversAllAndRethrowsLowestIndex) {
  std::vector<int> hit(37, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 37);
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 4 || i == 7) throw ValidationError("boom " + std::to_string(i));
    });
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "boom 4");
  }
}

TEST(Stages, MissingInputsAreReported) {
  const auto c = small_config("missing");
  EXPECT_THROW(run_extract(c), MissingInputError);
  EXPECT_THROW(run_compare(c), MissingInputError);
}

TEST(Cli, ExitCodes) {
  const auto dir = elab::test::temp_dir("cli");
  EXPECT_EQ(run_cli("extract --preset demo --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("extract --preset nope --out " + dir.string()), 3);
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli("presets"), 0);
  std::ofstream(dir / "bad.json") << "{\"seed\": 1, \"unknown\": 2}";
  EXPECT_EQ(run_cli("pipeline --config " + (dir / "bad.json").string()), 3);
}

// One full small run is shared by the determinism, isolation and golden tests.
class SmallPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new PipelineConfig(small_config("pipeline_w1", 1));
    run_pipeline(*config_);
  }
  static void TearDownTestSuite() { delete config_; }
  static PipelineConfig* config_;
};

PipelineConfig* SmallPipeline::config_ = nullptr;

TEST_F(SmallPipeline, LayoutAndManifest) {
  const fs::path out = config_->out;
  for (const char* rel : {"manifest.json", "config.json", "courses/ca/features.csv", "courses/ca/model.json",
                          "courses/cb/explanations/SHAP.csv", "compare/rankings.json", "compare/jaccard.csv",
                          "compare/spearman.csv", "report/heatmap_ca_vs_cb.svg", "report/summary.txt"}) {
    EXPECT_TRUE(fs::exists(out / rel)) << rel;
  }
  const auto manifest = load_json(out / "manifest.json");
  EXPECT_EQ(manifest["config_hash"], config_hash(*config_));
  for (const char* stage : {"generate", "extract", "train", "explain", "compare", "report"}) {
    ASSERT_TRUE(manifest["stages"].contains(stage)) << stage;
    for (const auto& [path, digest] : manifest["stages"][stage]["outputs"].items())
      EXPECT_EQ(digest.get<std::string>(), sha256_file(out / path)) << path;
  }
}

TEST_F(SmallPipeline, RerunAndWorkerCountAreByteIdentical) {
  const auto first = digests(config_->out);
  const auto again = small_config("pipeline_w2", 2);
  run_pipeline(again);
  EXPECT_EQ(digests(again.out), first);
}

TEST_F(SmallPipeline, StageRerunIsIdempotent) {
  const auto before = digests(config_->out);
  run_compare(*config_);
  run_report(*config_);
  EXPECT_EQ(digests(config_->out), before);
}

TEST_F(SmallPipeline, HeatmapMatchesGolden) {
  const auto svg = read_text(fs::path(config_->out) / "report" / "heatmap_ca_vs_cb.svg");
  const fs::path golden = fs::path(ELAB_GOLDEN_DIR) / "heatmap_small.svg";
  if (std::getenv("ELAB_UPDATE_GOLDEN")) {
    std::ofstream(golden, std::ios::binary) << svg;
  }
  ASSERT_TRUE(fs::exists(golden)) << "run with ELAB_UPDATE_GOLDEN=1 to capture";
  EXPECT_EQ(svg, read_text(golden));
}

TEST(Report, HeatmapRowsAtMostTwelve) {
  std::vector<AggregatedRanking> rs;
  std::size_t i = 0;
  for (Method m : {Method::LIME, Method::SHAP, Method::Confounder})
    for (const char* course : {"a", "b"}) {
      AggregatedRanking r;
      r.course_id = course;
      r.method = m;
      r.weeks = 2;
      for (std::size_t f = 0; f < 22; ++f) {
        r.features.push_back("f" + std::to_string(f));
        r.scores.push_back(0.01 * static_cast<double>(f));
      }
      // Distinct extremes per ranking so the union is as large as possible.
      r.scores[i] = 5.0;
      r.scores[i + 11] = -5.0;
      ++i;
      r.week_signed.assign(44, 0.0);
      r.week_magnitude.assign(44, 0.0);
      rs.push_back(r);
    }
  const auto rows = heatmap_rows(rs);
  EXPECT_EQ(rows.size(), 12u);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
  const auto blank = heatmap_svg(rs, rows);
  EXPECT_TRUE(blank.all_blank);
  EXPECT_NE(blank.svg.find("<svg"), std::string::npos);
  rs[0].week_signed[0] = 0.5;
  EXPECT_FALSE(heatmap_svg(rs, rows).all_blank);
}

TEST(Report, WithinCrossMeans) {
  ComparisonMatrix m;
  m.labels = {"LIME/a", "LIME/b", "SHAP/a", "SHAP/b"};
  m.cells = {1, 0.8, 0.2, 0.4, 0.8, 1, 0.3, 0.1, 0.2, 0.3, 1, 0.6, 0.4, 0.1, 0.6, 1};
  const auto [within, cross] = within_cross_means(m);
  EXPECT_DOUBLE_EQ(within, 0.7);
  EXPECT_DOUBLE_EQ(cross, 0.25);
}
