#include "oracles.hpp"
#include "semloc/error.hpp"
#include "semloc/fusion.hpp"

#include <gtest/gtest.h>

using namespace semloc;

namespace {

const ClassRegistry& reg() {
  static const ClassRegistry r = ClassRegistry::builtin();
  return r;
}

ObjectMask box_mask(int w, int h, int x0, int y0, int x1, int y1, std::uint16_t cls, double conf) {
  ObjectMask m{cls, BinaryMask(w, h, 0), conf};
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.pixels.at(x, y) = 1;
  }
  return m;
}

}  // namespace

TEST(Fusion, HolesFilledFromBackground) {
  LabelMap rendered = make_label_map(4, 1);
  rendered.at(0, 0) = classes::kRoad;
  LabelMap background(4, 1, classes::kBuilding);
  background.at(3, 0) = kIgnoreLabel;
  const auto out = fuse(rendered, background, {}, reg());
  EXPECT_EQ(out.labels.at(0, 0), classes::kRoad);
  EXPECT_EQ(out.labels.at(1, 0), classes::kBuilding);
  EXPECT_EQ(out.labels.at(3, 0), kIgnoreLabel);
  EXPECT_EQ(out.holes, 1u);
}

TEST(Fusion, ObjectsNeverOverwriteRenderedMovables) {
  LabelMap rendered(3, 1, classes::kRoad);
  rendered.at(1, 0) = classes::kTruck;
  const LabelMap background(3, 1, classes::kRoad);
  const auto out = fuse(rendered, background, {box_mask(3, 1, 0, 0, 3, 1, classes::kPerson, 1.0)}, reg());
  EXPECT_EQ(out.labels.at(0, 0), classes::kPerson);
  EXPECT_EQ(out.labels.at(1, 0), classes::kTruck);
}

TEST(Fusion, ConfidenceOrderingAndThreshold) {
  const LabelMap rendered(4, 4, classes::kRoad);
  const LabelMap background(4, 4, classes::kRoad);
  const std::vector<ObjectMask> objs = {
      box_mask(4, 4, 0, 0, 3, 3, classes::kCar, 0.92),
      box_mask(4, 4, 1, 1, 4, 4, classes::kPerson, 0.95),
      box_mask(4, 4, 0, 0, 4, 4, classes::kTruck, 0.5),
  };
  const auto out = fuse(rendered, background, objs, reg(), 0.9);
  EXPECT_EQ(out.skipped_objects, 1u);
  EXPECT_EQ(out.labels.at(0, 0), classes::kCar);
  EXPECT_EQ(out.labels.at(2, 2), classes::kPerson);
  EXPECT_EQ(out.labels.at(3, 0), classes::kRoad);
  const auto all = fuse(rendered, background, objs, reg(), 0.0);
  EXPECT_EQ(all.labels.at(3, 0), classes::kTruck);
}

TEST(Fusion, MatchesPerPixelRules) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const int w = 24, h = 16;
    const std::vector<std::uint16_t> palette = {1, 4, 6, 9, 10, 15, 20, 255};
    LabelMap rendered(w, h, 0), background(w, h, 0);
    for (std::size_t i = 0; i < rendered.size(); ++i) {
      rendered[i] = palette[rng.below(palette.size())];
      background[i] = palette[rng.below(palette.size())];
    }
    std::vector<ObjectMask> objs;
    const std::vector<double> confs = {0.5, 0.9, 0.93, 0.97, 1.0};
    for (int o = 0; o < 6; ++o) {
      const int x0 = static_cast<int>(rng.below(w)), y0 = static_cast<int>(rng.below(h));
      objs.push_back(box_mask(w, h, x0, y0, std::min(w, x0 + 8), std::min(h, y0 + 6),
                              static_cast<std::uint16_t>(1 + rng.below(8)), confs[rng.below(confs.size())]));
    }
    const auto got = fuse(rendered, background, objs, reg(), 0.9);
    EXPECT_EQ(got.labels, oracle::fuse(rendered, background, objs, reg(), 0.9)) << seed;
    // Fusing the output again with the same masks changes nothing.
    EXPECT_EQ(fuse(got.labels, background, objs, reg(), 0.9).labels, got.labels) << seed;
  }
}

TEST(Fusion, Errors) {
  const LabelMap a(3, 3, 9), b(3, 2, 9);
  EXPECT_THROW(fuse(a, b, {}, reg()), Error);
  try {
    fuse(a, a, {box_mask(3, 3, 0, 0, 1, 1, classes::kRoad, 1.0)}, reg());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonMovableObject);
  }
  EXPECT_THROW(fuse(a, a, {box_mask(2, 2, 0, 0, 1, 1, classes::kCar, 1.0)}, reg()), Error);
}
