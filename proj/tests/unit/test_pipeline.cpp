#include "semloc/error.hpp"
#include "semloc/io.hpp"
#include "semloc/pipeline.hpp"
#include "semloc/scene.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace semloc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("semloc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Short street so a full run stays around a second.
PipelineConfig small_config(const fs::path& dir) {
  SceneSpec s = SceneSpec::standard();
  s.road_length = 24;
  s.buildings_per_side = 2;
  s.poles = 3;
  s.traffic_lights = 1;
  s.traffic_signs = 1;
  s.trees = 2;
  s.parked_cars = 1;
  s.waypoints = {Vec2(2, 0), Vec2(18, 0)};
  {
    std::ofstream out(dir / "scene.spec");
    s.write(out);
  }
  PipelineConfig c;
  c.scene_spec = (dir / "scene.spec").string();
  c.out_dir = (dir / "out").string();
  return c;
}

}  // namespace

TEST(Pipeline, ZeroNoiseRecoversGroundTruth) {
  const fs::path dir = scratch("zero");
  PipelineConfig c = small_config(dir);
  c.trans_max = 0;
  c.rot_max = 0;
  const auto res = run_pipeline(c);
  ASSERT_EQ(res.code, StageCode::kOk) << res.message;
  ASSERT_EQ(res.pose_rows.size(), 4u);
  for (const auto& row : res.pose_rows) {
    EXPECT_LT(row.median_translation, 1e-6) << row.stage;
    EXPECT_LT(row.median_rotation, 1e-6) << row.stage;
  }
  ASSERT_TRUE(res.has_segmentation);
  EXPECT_EQ(res.pixel_accuracy, 1.0);
  EXPECT_EQ(res.mean_iou, 1.0);
  for (const char* f : {"summary.csv", "map.spc", "gt_poses.txt", "noisy_poses.txt",
                        "rectified_poses.txt", "refined_poses.txt", "smoothed_poses.txt",
                        "road_field.rof", "config.resolved"}) {
    EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / f)) << f;
  }
}

TEST(Pipeline, InvalidConfigWritesNothing) {
  const fs::path dir = scratch("badcfg");
  PipelineConfig c = small_config(dir);
  c.min_support = 1.5;
  const auto res = run_pipeline(c);
  EXPECT_EQ(res.exit_code(), 2);
  EXPECT_FALSE(fs::exists(c.out_dir));
}

TEST(Pipeline, UnknownKeyRejected) {
  PipelineConfig c;
  EXPECT_THROW(c.set("no_such_key", "1"), Error);
  EXPECT_THROW(c.set("threads", "many"), Error);
  std::istringstream in("seed = 5\nthreads = 3\n");
  const auto parsed = PipelineConfig::parse(in);
  EXPECT_EQ(parsed.seed, 5u);
  EXPECT_EQ(parsed.threads, 3u);
}

TEST(Pipeline, OutputsIndependentOfThreadCount) {
  const fs::path dir = scratch("threads");
  PipelineConfig a = small_config(dir);
  a.out_dir = (dir / "t1").string();
  a.threads = 1;
  PipelineConfig b = a;
  b.out_dir = (dir / "t4").string();
  b.threads = 4;
  ASSERT_EQ(run_pipeline(a).code, StageCode::kOk);
  ASSERT_EQ(run_pipeline(b).code, StageCode::kOk);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.out_dir)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a.out_dir);
    EXPECT_EQ(read_all(e.path()), read_all(fs::path(b.out_dir) / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 10u);
}

TEST(Pipeline, CliRunsAndReportsStageCodes) {
  const char* cli = std::getenv("SEMLOC_CLI");
  if (cli == nullptr) GTEST_SKIP() << "SEMLOC_CLI not set";
  const fs::path dir = scratch("cli");
  const PipelineConfig c = small_config(dir);
  const std::string base = std::string(cli) + " pipeline --set scene_spec=" + c.scene_spec +
                           " --out " + (dir / "run").string();
  EXPECT_EQ(std::system((base + " > /dev/null 2>&1").c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "summary.csv"));
  const int rc = std::system((base + " --set min_support=2 > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 2);
  const int bad = std::system((std::string(cli) + " render --map /nonexistent.spc --poses x --out " +
                               (dir / "r").string() + " > /dev/null 2>&1").c_str());
  EXPECT_NE(WEXITSTATUS(bad), 0);
}
