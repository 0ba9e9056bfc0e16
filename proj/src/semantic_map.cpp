#include "semloc/semantic_map.hpp"

#include "semloc/class_registry.hpp"
#include "semloc/error.hpp"
#include "semloc/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>

namespace semloc {

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

std::vector<bool> moving_keep_mask(const std::vector<SemanticPointCloud>& rounds,
                                   const MovingRemovalParams& params) {
  if (rounds.empty()) fail(ErrorCode::kInvalidArgument, "remove_moving needs at least one round");
  if (!(params.min_support > 0.0 && params.min_support <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "min_support must lie in (0, 1]");
  }
  if (!(params.match_radius > 0.0)) fail(ErrorCode::kInvalidArgument, "match_radius must be positive");

  const std::size_t r = rounds.size();
  std::vector<std::size_t> offsets(r + 1, 0);
  for (std::size_t i = 0; i < r; ++i) {
    for (const auto& p : rounds[i].points()) {
      if (p.round != i) {
        fail(ErrorCode::kMismatchedRounds, "cloud " + std::to_string(i) +
                                               " contains a point tagged round " +
                                               std::to_string(p.round));
      }
    }
    offsets[i + 1] = offsets[i] + rounds[i].size();
  }
  const std::size_t n = offsets[r];

  // One grid over every round with cells twice the match radius, so a query
  // ball touches at most 2x2x2 cells.
  const double eps = params.match_radius;
  const double cell = 2.0 * eps;
  std::vector<const Vec3*> pos(n);
  std::vector<std::uint32_t> round_of(n);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t k = 0; k < rounds[i].size(); ++k) {
      pos[offsets[i] + k] = &rounds[i].positions()[k];
      round_of[offsets[i] + k] = static_cast<std::uint32_t>(i);
    }
  }
  auto cell_of = [cell](double v) { return static_cast<std::int64_t>(std::floor(v / cell)); };
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> grid;
  grid.reserve(n / 4 + 1);
  for (std::size_t g = 0; g < n; ++g) {
    const Vec3& x = *pos[g];
    grid[{cell_of(x.x()), cell_of(x.y()), cell_of(x.z())}].push_back(static_cast<std::uint32_t>(g));
  }

  std::vector<char> keep(n, 0);
  parallel_for(n, params.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<char> seen(r, 0);
    for (std::size_t g = begin; g < end; ++g) {
      const Vec3& x = *pos[g];
      const std::uint32_t own = round_of[g];
      std::fill(seen.begin(), seen.end(), 0);
      seen[own] = 1;
      std::size_t support = 1;
      const std::int64_t x0 = cell_of(x.x() - eps), x1 = cell_of(x.x() + eps);
      const std::int64_t y0 = cell_of(x.y() - eps), y1 = cell_of(x.y() + eps);
      const std::int64_t z0 = cell_of(x.z() - eps), z1 = cell_of(x.z() + eps);
      for (std::int64_t cx = x0; cx <= x1 && support < r; ++cx) {
        for (std::int64_t cy = y0; cy <= y1 && support < r; ++cy) {
          for (std::int64_t cz = z0; cz <= z1 && support < r; ++cz) {
            const auto it = grid.find({cx, cy, cz});
            if (it == grid.end()) continue;
            for (const std::uint32_t h : it->second) {
              const std::uint32_t rh = round_of[h];
              if (seen[rh] || (*pos[h] - x).norm() >= eps) continue;
              seen[rh] = 1;
              ++support;
            }
          }
        }
      }
      const double fraction = static_cast<double>(support) / static_cast<double>(r);
      keep[g] = fraction >= params.min_support ? 1 : 0;
    }
  });
  return std::vector<bool>(keep.begin(), keep.end());
}

SemanticPointCloud remove_moving(const std::vector<SemanticPointCloud>& rounds,
                                 const MovingRemovalParams& params) {
  const auto mask = moving_keep_mask(rounds, params);
  std::vector<SemanticPoint> kept;
  std::size_t g = 0;
  for (const auto& cloud : rounds) {
    for (const auto& p : cloud.points()) {
      if (mask[g++]) kept.push_back(p);
    }
  }
  return SemanticPointCloud(std::move(kept));
}

std::vector<SemanticPoint> radius_neighbors(const SemanticPointCloud& cloud, const Vec3& center,
                                            double radius) {
  if (!(radius > 0.0)) fail(ErrorCode::kInvalidArgument, "radius must be positive");
  std::vector<SemanticPoint> out;
  for (std::size_t i : cloud.index().radius_query(center, radius)) out.push_back(cloud[i]);
  return out;
}

RoadFilterResult filter_road_points(const SemanticPointCloud& cloud,
                                    const RoadFilterParams& params) {
  if (cloud.empty()) fail(ErrorCode::kInvalidArgument, "filter_road_points on an empty cloud");
  if (!(params.max_normal_tilt_deg > 0.0 && params.max_normal_tilt_deg <= 90.0)) {
    fail(ErrorCode::kInvalidArgument, "max_normal_tilt_deg must lie in (0, 90]");
  }
  const KdTree tree(cloud.positions());
  const double cos_limit = std::cos(deg2rad(params.max_normal_tilt_deg));

  RoadFilterResult result;
  result.kept.assign(cloud.size(), false);
  std::vector<SemanticPoint> road;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud[i];
    if (params.use_labels &&
        (p.class_id == classes::kRoad || p.class_id == classes::kSidewalk)) {
      result.kept[i] = true;
      road.push_back(p);
      continue;
    }
    const auto nbrs = tree.knn(p.position, params.k_neighbors);
    if (nbrs.size() < 3) {
      ++result.degenerate;
      continue;
    }
    Vec3 mean = Vec3::Zero();
    for (auto n : nbrs) mean += cloud.positions()[n];
    mean /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (auto n : nbrs) {
      const Vec3 d = cloud.positions()[n] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 ev = eig.eigenvalues();  // ascending
    if (!(ev[2] > 0.0) || ev[1] <= 1e-10 * ev[2]) {
      ++result.degenerate;
      continue;
    }
    const Vec3 normal = eig.eigenvectors().col(0);
    if (std::abs(normal.z()) >= cos_limit) {
      result.kept[i] = true;
      road.push_back(p);
    }
  }
  result.road = SemanticPointCloud(std::move(road));
  return result;
}

}  // namespace semloc
