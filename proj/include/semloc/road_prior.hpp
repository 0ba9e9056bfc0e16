#pragma once

#include "semloc/geometry.hpp"
#include "semloc/point_cloud.hpp"

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace semloc {

/// Grid distance under 8-connectivity with step costs 1 and sqrt(2), held
/// exactly as `straight + diagonal * sqrt(2)`.
struct ChamferDistance {
  std::int64_t straight = 0;
  std::int64_t diagonal = 0;

  static ChamferDistance between(int dx, int dy);
  double value() const;
  /// Exact comparison (no floating-point rounding).
  friend bool operator<(const ChamferDistance& a, const ChamferDistance& b);
  friend bool operator==(const ChamferDistance& a, const ChamferDistance& b) = default;
};

/// Cell (col, row) covers [origin + col*res, origin + (col+1)*res) along x
/// and likewise along y. Offsets are stored in meters.
class RoadOffsetField {
 public:
  RoadOffsetField() = default;

  /// Builds the field from a road mask by multi-source search; ties between
  /// equally distant road cells go to the smaller linear index.
  static RoadOffsetField from_mask(const Vec2& origin, double resolution, int width, int height,
                                   std::vector<std::uint8_t> mask);

  const Vec2& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  int width() const { return width_; }
  int height() const { return height_; }

  bool is_road(int col, int row) const { return mask_[linear(col, row)] != 0; }
  Vec2 offset(int col, int row) const;
  /// Linear index of the road cell chosen for (col, row).
  std::int64_t nearest(int col, int row) const { return nearest_[linear(col, row)]; }

  std::size_t linear(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }
  /// Cell containing (x, y), clamped to the grid.
  std::pair<int, int> cell_of(double x, double y) const;
  /// Unclamped cell coordinates.
  std::pair<std::int64_t, std::int64_t> raw_cell_of(double x, double y) const;

  const std::vector<std::uint8_t>& mask() const { return mask_; }

  void save(std::ostream& out) const;
  static RoadOffsetField load(std::istream& in);
  void save_file(const std::string& path) const;
  static RoadOffsetField load_file(const std::string& path);

 private:
  Vec2 origin_ = Vec2::Zero();
  double resolution_ = 0.05;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> mask_;
  std::vector<std::int64_t> nearest_;
};

struct RoadFieldParams {
  std::set<std::uint16_t> road_classes = {9, 10};
  double resolution = 0.05;
  double margin = 0.0;  // extra border around the map's xy extent (meters)
};

/// Rasterises road-class points into a mask spanning the map's xy extent and
/// precomputes offsets to the nearest road cell. The origin is snapped down
/// to a multiple of the resolution.
RoadOffsetField build_offset_field(const SemanticPointCloud& map, const RoadFieldParams& params = {});

/// Moves (x, y) by the offset stored at its cell; z is untouched. The result
/// lies inside the chosen road cell.
Vec3 rectify_translation(const Vec3& t, const RoadOffsetField& field);

}  // namespace semloc
