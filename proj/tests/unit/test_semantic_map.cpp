#include "oracles.hpp"
#include "semloc/class_registry.hpp"
#include "semloc/error.hpp"
#include "semloc/point_cloud.hpp"
#include "semloc/scene.hpp"
#include "semloc/semantic_map.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace semloc;

namespace {

std::vector<SemanticPoint> tag(std::vector<SemanticPoint> pts, std::uint16_t round) {
  for (auto& p : pts) p.round = round;
  return pts;
}

std::vector<std::vector<Vec3>> positions_of(const std::vector<SemanticPointCloud>& rounds) {
  std::vector<std::vector<Vec3>> out;
  for (const auto& r : rounds) out.push_back(r.positions());
  return out;
}

}  // namespace

// Registry --------------------------------------------------------------------

TEST(Registry, BuiltinTables) {
  const ClassRegistry reg = ClassRegistry::builtin();
  EXPECT_EQ(reg.size(), 21u + 35u);
  const ClassInfo* car = reg.find(1);
  ASSERT_NE(car, nullptr);
  EXPECT_EQ(car->name, "car");
  EXPECT_TRUE(car->movable);
  const ClassInfo* lane = reg.find(200);
  ASSERT_NE(lane, nullptr);
  EXPECT_EQ(lane->name, "s_w_d");
  EXPECT_FALSE(lane->movable);
  for (std::uint16_t id = 1; id <= 21; ++id) {
    ASSERT_TRUE(reg.contains(id)) << id;
    EXPECT_EQ(reg.is_movable(id), id <= 8) << id;
  }
  for (const auto& [id, info] : reg.entries()) {
    EXPECT_TRUE(id <= 21 || (id >= 200 && id <= 250)) << id;
  }
  EXPECT_FALSE(reg.contains(255));
  EXPECT_FALSE(reg.is_movable(255));
  EXPECT_EQ(reg.ignore_aliases().size(), 5u);
}

TEST(Registry, ShippedFileMatchesBuiltin) {
  const ClassRegistry file = load_registry_file(std::string(SEMLOC_SOURCE_DIR) + "/data/classes.txt");
  const ClassRegistry builtin = ClassRegistry::builtin();
  ASSERT_EQ(file.size(), builtin.size());
  for (const auto& [id, info] : builtin.entries()) {
    const ClassInfo* f = file.find(id);
    ASSERT_NE(f, nullptr);
    EXPECT_EQ(f->name, info.name);
    EXPECT_EQ(f->group, info.group);
  }
}

TEST(Registry, EmptyFile) {
  std::istringstream in("# nothing\n\n");
  const ClassRegistry reg = load_registry(in);
  EXPECT_EQ(reg.size(), 0u);
  EXPECT_EQ(ClassRegistry::kIgnoreId, 255);
}

TEST(Registry, Errors) {
  std::istringstream dup("1 car movable_object\n1 bus movable_object\n");
  try {
    load_registry(dup);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateId);
  }
  std::istringstream group("1 car spaceship\n");
  try {
    load_registry(group);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownGroup);
  }
  std::istringstream bad("x car movable_object\n");
  EXPECT_THROW(load_registry(bad), Error);
}

// Point cloud -------------------------------------------------------------------

TEST(PointCloud, RoundsMetadata) {
  std::vector<SemanticPoint> pts(3);
  pts[0].round = 0;
  pts[1].round = 4;
  pts[2].round = 2;
  EXPECT_EQ(SemanticPointCloud(pts).rounds(), 5u);
  EXPECT_EQ(SemanticPointCloud().rounds(), 0u);
  const auto split = split_by_round(SemanticPointCloud(pts));
  ASSERT_EQ(split.size(), 5u);
  EXPECT_EQ(split[4].size(), 1u);
  EXPECT_EQ(split[1].size(), 0u);
}

TEST(PointCloud, DeduplicateKeepsFirst) {
  std::vector<SemanticPoint> pts(4);
  pts[0].position = Vec3(1, 2, 3);
  pts[1].position = Vec3(1, 2, 3);
  pts[1].round = 3;
  pts[2].position = Vec3(1, 2, 3);
  pts[2].class_id = 7;
  pts[3].position = Vec3(0, 0, 0);
  const auto out = deduplicate(SemanticPointCloud(pts));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[1].class_id, 7);
  for (const auto& p : out.points()) EXPECT_EQ(p.round, 0);
}

TEST(RadiusNeighbors, EmptyAndStrictBoundary) {
  EXPECT_TRUE(radius_neighbors(SemanticPointCloud(), Vec3::Zero(), 1.0).empty());
  std::vector<SemanticPoint> one(1);
  one[0].position = Vec3(0.5, 0, 0);
  EXPECT_TRUE(radius_neighbors(SemanticPointCloud(one), Vec3::Zero(), 0.5).empty());
  EXPECT_EQ(radius_neighbors(SemanticPointCloud(one), Vec3::Zero(), 0.50001).size(), 1u);
  EXPECT_THROW(radius_neighbors(SemanticPointCloud(one), Vec3::Zero(), 0.0), Error);
}

TEST(RadiusNeighbors, MatchesLinearScan) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = seed < 10 ? 500 : 1000;
    const auto pts = oracle::random_points(rng, n, Vec3(-2, -2, -2), Vec3(2, 2, 2), {1, 9, 20});
    for (double cell : {0.05, 0.25, 3.0}) {
      const SemanticPointCloud cloud(pts, cell);
      for (int q = 0; q < 30; ++q) {
        const Vec3 c(rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5));
        const double r = rng.uniform(0.01, 1.5);
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if ((pts[i].position - c).norm() < r) want.push_back(i);
        }
        EXPECT_EQ(cloud.index().radius_query(c, r), want);
        EXPECT_EQ(cloud.index().any_within(c, r), !want.empty());
        EXPECT_EQ(radius_neighbors(cloud, c, r).size(), want.size());
      }
    }
  }
}

TEST(KdTree, KnnMatchesSort) {
  Rng rng(3);
  const auto pts = oracle::random_points(rng, 700, Vec3(-1, -1, -1), Vec3(1, 1, 1), {1});
  std::vector<Vec3> pos;
  for (const auto& p : pts) pos.push_back(p.position);
  const KdTree tree(pos);
  for (int q = 0; q < 100; ++q) {
    const Vec3 c = rng.unit_vector() * rng.uniform(0, 1.5);
    std::vector<std::size_t> order(pos.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double da = (pos[a] - c).squaredNorm(), db = (pos[b] - c).squaredNorm();
      return da != db ? da < db : a < b;
    });
    order.resize(16);
    EXPECT_EQ(tree.knn(c, 16), order);
    EXPECT_EQ(tree.nearest(c).first, order[0]);
  }
}

// Moving-object removal ---------------------------------------------------------

TEST(RemoveMoving, SingleRoundKeepsEverything) {
  Rng rng(1);
  const auto pts = oracle::random_points(rng, 300, Vec3(0, 0, 0), Vec3(3, 3, 3), {1, 9});
  const SemanticPointCloud cloud(pts);
  const auto out = remove_moving({cloud}, {});
  EXPECT_EQ(out.points(), cloud.points());
}

TEST(RemoveMoving, TransientBlobRemoved) {
  Rng rng(2);
  const auto base = oracle::random_points(rng, 800, Vec3(0, 0, 0), Vec3(5, 5, 1), {9, 20});
  const auto blob = oracle::random_points(rng, 150, Vec3(10, 0, 0), Vec3(11, 1, 1), {1});
  std::vector<SemanticPointCloud> rounds;
  for (std::uint16_t r = 0; r < 6; ++r) {
    auto pts = tag(base, r);
    if (r == 3) {
      auto b = tag(blob, r);
      pts.insert(pts.end(), b.begin(), b.end());
    }
    rounds.emplace_back(pts);
  }
  const auto keep = moving_keep_mask(rounds, {});
  EXPECT_EQ(keep, oracle::moving_keep(positions_of(rounds), 0.6, 0.025));
  std::size_t g = 0;
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    for (const auto& p : rounds[r].points()) {
      EXPECT_EQ(keep[g++], p.class_id != 1);
    }
  }
}

TEST(RemoveMoving, BoundaryThreeOfFive) {
  std::vector<SemanticPointCloud> rounds;
  for (std::uint16_t r = 0; r < 5; ++r) {
    std::vector<SemanticPoint> pts(1);
    pts[0].round = r;
    pts[0].position = r < 3 ? Vec3(0, 0, 0) : Vec3(50, 50, 50 + r);
    rounds.emplace_back(pts);
  }
  const auto keep = moving_keep_mask(rounds, {});
  EXPECT_TRUE(keep[0] && keep[1] && keep[2]);
  EXPECT_FALSE(keep[3] || keep[4]);
}

TEST(RemoveMoving, MatchesOracleOnRandomSubsets) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    const std::size_t rcount = 2 + seed % 5;
    std::vector<SemanticPointCloud> rounds;
    // Shared geometry jittered per round, plus per-round clutter, at a scale
    // where the radius test is decided both ways.
    const auto shared = oracle::random_points(rng, 120, Vec3(0, 0, 0), Vec3(0.5, 0.5, 0.5), {9});
    for (std::size_t r = 0; r < rcount; ++r) {
      auto pts = tag(shared, static_cast<std::uint16_t>(r));
      for (auto& p : pts) p.position += rng.unit_vector() * rng.uniform(0, 0.03);
      auto extra = tag(oracle::random_points(rng, 60, Vec3(0, 0, 0), Vec3(0.5, 0.5, 0.5), {1}),
                       static_cast<std::uint16_t>(r));
      pts.insert(pts.end(), extra.begin(), extra.end());
      rounds.emplace_back(pts);
    }
    const double delta = rng.uniform(0.2, 1.0);
    MovingRemovalParams params;
    params.min_support = delta;
    const auto want = oracle::moving_keep(positions_of(rounds), delta, 0.025);
    for (unsigned threads : {1u, 4u}) {
      params.threads = threads;
      EXPECT_EQ(moving_keep_mask(rounds, params), want) << "seed " << seed;
    }
  }
}

TEST(RemoveMoving, IdenticalRoundsKeepAll) {
  Rng rng(4);
  const auto base = oracle::random_points(rng, 400, Vec3(0, 0, 0), Vec3(2, 2, 2), {9});
  std::vector<SemanticPointCloud> rounds;
  for (std::uint16_t r = 0; r < 4; ++r) rounds.emplace_back(tag(base, r));
  for (double delta : {0.1, 0.6, 1.0}) {
    MovingRemovalParams params;
    params.min_support = delta;
    EXPECT_EQ(remove_moving(rounds, params).size(), 1600u);
  }
}

TEST(RemoveMoving, IdempotentAndSubset) {
  SceneSpec spec;
  spec.road_length = 12;
  spec.road_spacing = 0.2;
  spec.object_spacing = 0.2;
  spec.buildings_per_side = 1;
  spec.poles = 1;
  spec.traffic_lights = 0;
  spec.traffic_signs = 0;
  spec.trees = 1;
  spec.parked_cars = 1;
  spec.transients = 2;
  spec.transient_rounds = 2;
  spec.waypoints = {Vec2(1, 0), Vec2(10, 0)};
  const Scene scene = generate_scene(spec);
  const auto out = remove_moving(scene.rounds, {});
  const auto again = remove_moving(split_by_round(out), {});
  EXPECT_EQ(again.points(), out.points());
  std::set<std::tuple<double, double, double>> all;
  for (const auto& r : scene.rounds) {
    for (const auto& p : r.points()) all.insert({p.position.x(), p.position.y(), p.position.z()});
  }
  for (const auto& p : out.points()) {
    EXPECT_TRUE(all.count({p.position.x(), p.position.y(), p.position.z()}));
  }
}

TEST(RemoveMoving, Errors) {
  std::vector<SemanticPoint> pts(1);
  pts[0].round = 1;
  try {
    moving_keep_mask({SemanticPointCloud(pts)}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMismatchedRounds);
  }
  MovingRemovalParams bad;
  bad.min_support = 1.5;
  EXPECT_THROW(moving_keep_mask({SemanticPointCloud()}, bad), Error);
  EXPECT_THROW(moving_keep_mask({}, {}), Error);
}

// Road filter -----------------------------------------------------------------

TEST(RoadFilter, FlatLabelledPlaneKept) {
  std::vector<SemanticPoint> pts;
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 30; ++j) {
      SemanticPoint p;
      p.position = Vec3(i * 0.1, j * 0.1, 0.0);
      p.class_id = classes::kRoad;
      pts.push_back(p);
    }
  }
  const auto res = filter_road_points(SemanticPointCloud(pts));
  EXPECT_EQ(res.road.size(), pts.size());
  RoadFilterParams geo;
  geo.use_labels = false;
  EXPECT_EQ(filter_road_points(SemanticPointCloud(pts), geo).road.size(), pts.size());
}

TEST(RoadFilter, UnlabelledWallRemoved) {
  Rng rng(5);
  std::vector<SemanticPoint> pts;
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 30; ++j) {
      SemanticPoint p;
      p.position = Vec3(i * 0.1 + rng.uniform(0, 0.02), 3.0, j * 0.1 + rng.uniform(0, 0.02));
      p.class_id = 0;
      pts.push_back(p);
    }
  }
  EXPECT_EQ(filter_road_points(SemanticPointCloud(pts)).road.size(), 0u);
}

TEST(RoadFilter, CollinearNeighbourhoodsDropped) {
  std::vector<SemanticPoint> pts;
  for (int i = 0; i < 40; ++i) {
    SemanticPoint p;
    p.position = Vec3(i * 0.1, 0, 0);
    pts.push_back(p);
  }
  const auto res = filter_road_points(SemanticPointCloud(pts));
  EXPECT_EQ(res.road.size(), 0u);
  EXPECT_EQ(res.degenerate, pts.size());
}

TEST(RoadFilter, SceneMembershipRecallPrecision) {
  SceneSpec spec;
  spec.rounds = 1;
  spec.transients = 0;
  spec.road_length = 14;
  spec.road_spacing = 0.05;
  spec.object_spacing = 0.05;
  spec.buildings_per_side = 1;
  spec.poles = 2;
  spec.traffic_lights = 1;
  spec.traffic_signs = 1;
  spec.trees = 1;
  spec.parked_cars = 1;
  spec.waypoints = {Vec2(1, 0), Vec2(12, 0)};
  const Scene scene = generate_scene(spec);
  // Geometry alone, scored against the horizontal faces the generator
  // sampled (road, sidewalks and box tops).
  RoadFilterParams params;
  params.use_labels = false;
  const auto res = filter_road_points(scene.rounds[0], params);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < res.kept.size(); ++i) {
    const bool truth = scene.membership[0][i].horizontal;
    tp += res.kept[i] && truth;
    fp += res.kept[i] && !truth;
    fn += !res.kept[i] && truth;
  }
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  EXPECT_GE(recall, 0.99);
  EXPECT_GE(precision, 0.99);
  // With labels, every road and sidewalk point survives.
  const auto labelled = filter_road_points(scene.rounds[0]);
  for (std::size_t i = 0; i < labelled.kept.size(); ++i) {
    const auto c = scene.rounds[0][i].class_id;
    if (c == classes::kRoad || c == classes::kSidewalk) ASSERT_TRUE(labelled.kept[i]);
  }
}
