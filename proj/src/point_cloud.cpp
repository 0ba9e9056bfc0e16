#include "semloc/point_cloud.hpp"

#include "semloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_set>

namespace semloc {

std::size_t VoxelIndex::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
  h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

VoxelIndex::VoxelIndex(const std::vector<Vec3>& positions, double cell_size)
    : cell_(cell_size), positions_(positions) {
  if (!(cell_size > 0.0)) fail(ErrorCode::kInvalidArgument, "voxel cell size must be positive");
  if (positions_.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kInvalidArgument, "too many points for voxel index");
  }
  cells_.reserve(positions_.size() / 4 + 1);
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (!positions_[i].allFinite()) fail(ErrorCode::kNonFinite, "non-finite point position");
    cells_[key_of(positions_[i])].push_back(static_cast<std::uint32_t>(i));
  }
}

VoxelIndex::Key VoxelIndex::key_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_))};
}

template <typename Visit>
void VoxelIndex::visit_candidates(const Vec3& center, double radius, Visit&& visit) const {
  const Key lo = key_of(center - Vec3::Constant(radius));
  const Key hi = key_of(center + Vec3::Constant(radius));
  const double span = static_cast<double>(hi.x - lo.x + 1) * static_cast<double>(hi.y - lo.y + 1) *
                      static_cast<double>(hi.z - lo.z + 1);
  if (span > static_cast<double>(cells_.size())) {
    for (const auto& [key, ids] : cells_) {
      if (key.x < lo.x || key.x > hi.x || key.y < lo.y || key.y > hi.y || key.z < lo.z ||
          key.z > hi.z) {
        continue;
      }
      for (std::uint32_t id : ids) {
        if (!visit(id)) return;
      }
    }
    return;
  }
  for (std::int64_t x = lo.x; x <= hi.x; ++x) {
    for (std::int64_t y = lo.y; y <= hi.y; ++y) {
      for (std::int64_t z = lo.z; z <= hi.z; ++z) {
        auto it = cells_.find(Key{x, y, z});
        if (it == cells_.end()) continue;
        for (std::uint32_t id : it->second) {
          if (!visit(id)) return;
        }
      }
    }
  }
}

std::vector<std::size_t> VoxelIndex::radius_query(const Vec3& center, double radius) const {
  std::vector<std::size_t> out;
  if (!(radius > 0.0)) return out;
  visit_candidates(center, radius, [&](std::uint32_t id) {
    if ((positions_[id] - center).norm() < radius) out.push_back(id);
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

bool VoxelIndex::any_within(const Vec3& center, double radius) const {
  bool found = false;
  if (!(radius > 0.0)) return false;
  visit_candidates(center, radius, [&](std::uint32_t id) {
    if ((positions_[id] - center).norm() < radius) {
      found = true;
      return false;
    }
    return true;
  });
  return found;
}

KdTree::KdTree(std::vector<Vec3> positions) : points_(std::move(positions)) {
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kInvalidArgument, "too many points for kd-tree");
  }
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / 8 + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  constexpr std::uint32_t kLeafSize = 8;
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident: stay a leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<std::size_t> KdTree::knn(const Vec3& query, std::size_t k) const {
  using Entry = std::pair<double, std::uint32_t>;  // (squared distance, index)
  std::priority_queue<Entry> best;                 // max-heap: worst on top
  if (k == 0 || points_.empty()) return {};

  auto worst = [&] {
    return best.size() < k ? std::numeric_limits<double>::infinity() : best.top().first;
  };
  auto offer = [&](std::uint32_t idx) {
    const Entry e{(points_[idx] - query).squaredNorm(), idx};
    if (best.size() < k) {
      best.push(e);
    } else if (e < best.top()) {
      best.pop();
      best.push(e);
    }
  };
  auto visit = [&](auto&& self, std::int32_t node_id) -> void {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) offer(order_[i]);
      return;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    if (diff * diff <= worst()) self(self, far);
  };
  visit(visit, 0);

  std::vector<Entry> sorted;
  sorted.reserve(best.size());
  while (!best.empty()) {
    sorted.push_back(best.top());
    best.pop();
  }
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> out;
  out.reserve(sorted.size());
  for (const auto& e : sorted) out.push_back(e.second);
  return out;
}

std::pair<std::size_t, double> KdTree::nearest(const Vec3& query) const {
  if (points_.empty()) fail(ErrorCode::kInvalidArgument, "nearest() on an empty kd-tree");
  const auto idx = knn(query, 1).front();
  return {idx, (points_[idx] - query).norm()};
}

SemanticPointCloud::SemanticPointCloud(std::vector<SemanticPoint> points, double index_cell)
    : points_(std::move(points)) {
  positions_.reserve(points_.size());
  for (const auto& p : points_) {
    positions_.push_back(p.position);
    rounds_ = std::max<std::size_t>(rounds_, static_cast<std::size_t>(p.round) + 1);
  }
  index_ = std::make_shared<const VoxelIndex>(positions_, index_cell);
}

std::vector<SemanticPointCloud> split_by_round(const SemanticPointCloud& cloud) {
  std::vector<std::vector<SemanticPoint>> buckets(cloud.rounds());
  for (const auto& p : cloud.points()) buckets[p.round].push_back(p);
  std::vector<SemanticPointCloud> out;
  out.reserve(buckets.size());
  for (auto& b : buckets) out.emplace_back(std::move(b));
  return out;
}

SemanticPointCloud merge_clouds(const std::vector<SemanticPointCloud>& clouds) {
  std::vector<SemanticPoint> all;
  std::size_t total = 0;
  for (const auto& c : clouds) total += c.size();
  all.reserve(total);
  for (const auto& c : clouds) all.insert(all.end(), c.points().begin(), c.points().end());
  return SemanticPointCloud(std::move(all));
}

SemanticPointCloud deduplicate(const SemanticPointCloud& cloud, std::uint16_t round) {
  struct Key {
    Vec3 p;
    std::uint16_t c;
    bool operator==(const Key& o) const { return p == o.p && c == o.c; }
  };
  struct Hash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = k.c;
      for (int i = 0; i < 3; ++i) {
        h = h * 1000003u ^ std::hash<double>{}(k.p[i] == 0.0 ? 0.0 : k.p[i]);
      }
      return h;
    }
  };
  std::unordered_set<Key, Hash> seen;
  seen.reserve(cloud.size());
  std::vector<SemanticPoint> out;
  for (const auto& pt : cloud.points()) {
    if (!seen.insert(Key{pt.position, pt.class_id}).second) continue;
    SemanticPoint q = pt;
    q.round = round;
    out.push_back(q);
  }
  return SemanticPointCloud(std::move(out));
}

}  // namespace semloc
