#pragma once

#include "semloc/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

namespace semloc {

struct SemanticPoint {
  Vec3 position = Vec3::Zero();
  std::uint16_t class_id = 255;
  float intensity = 0.0f;
  std::uint16_t round = 0;

  bool operator==(const SemanticPoint& o) const {
    return position == o.position && class_id == o.class_id && intensity == o.intensity &&
           round == o.round;
  }
};

/// Uniform voxel hash over a fixed point set. Radius queries are exact
/// (strict `<`) for any radius; cell size only affects speed.
class VoxelIndex {
 public:
  VoxelIndex() = default;
  VoxelIndex(const std::vector<Vec3>& positions, double cell_size);

  double cell_size() const { return cell_; }

  /// Indices of points with |x - center| < radius, ascending.
  std::vector<std::size_t> radius_query(const Vec3& center, double radius) const;
  bool any_within(const Vec3& center, double radius) const;

 private:
  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  Key key_of(const Vec3& p) const;

  template <typename Visit>
  void visit_candidates(const Vec3& center, double radius, Visit&& visit) const;

  double cell_ = 1.0;
  std::vector<Vec3> positions_;
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> cells_;
};

/// Static 3-D kd-tree for k-nearest-neighbour queries.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> positions);

  std::size_t size() const { return points_.size(); }

  /// Up to k nearest indices, closest first (ties by index).
  std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;
  /// Index and distance of the nearest point. Tree must be non-empty.
  std::pair<std::size_t, double> nearest(const Vec3& query) const;

 private:
  struct Node {
    std::uint32_t begin, end;  // range in order_
    std::int32_t left = -1, right = -1;
    int axis = -1;
    double split = 0.0;
  };
  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Immutable multi-round semantic point cloud with a radius-query index.
class SemanticPointCloud {
 public:
  static constexpr double kDefaultIndexCell = 0.25;

  SemanticPointCloud() : SemanticPointCloud(std::vector<SemanticPoint>{}) {}
  explicit SemanticPointCloud(std::vector<SemanticPoint> points,
                              double index_cell = kDefaultIndexCell);

  const std::vector<SemanticPoint>& points() const { return points_; }
  const std::vector<Vec3>& positions() const { return positions_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const SemanticPoint& operator[](std::size_t i) const { return points_[i]; }

  /// 1 + max round index present; 0 for an empty cloud.
  std::size_t rounds() const { return rounds_; }
  const VoxelIndex& index() const { return *index_; }

 private:
  std::vector<SemanticPoint> points_;
  std::vector<Vec3> positions_;
  std::size_t rounds_ = 0;
  std::shared_ptr<const VoxelIndex> index_;
};

/// Splits a merged cloud by the `round` field (cloud i holds round i).
std::vector<SemanticPointCloud> split_by_round(const SemanticPointCloud& cloud);
SemanticPointCloud merge_clouds(const std::vector<SemanticPointCloud>& clouds);

/// Drops points whose position and class repeat an earlier point; survivors
/// keep their order and are re-tagged `round`.
SemanticPointCloud deduplicate(const SemanticPointCloud& cloud, std::uint16_t round = 0);

}  // namespace semloc
