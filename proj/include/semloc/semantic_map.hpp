#pragma once

#include "semloc/point_cloud.hpp"

#include <cstddef>
#include <vector>

namespace semloc {

struct MovingRemovalParams {
  double min_support = 0.6;       // fraction of rounds a point must be seen in
  double match_radius = 0.025;    // meters
  unsigned threads = 1;
};

/// Temporal-consistency filter over pre-aligned acquisition rounds. A point
/// of round j survives when the number of rounds i (j included) holding a
/// neighbour closer than `match_radius`, divided by the round count, is at
/// least `min_support`. Cloud i must only contain points tagged round i.
SemanticPointCloud remove_moving(const std::vector<SemanticPointCloud>& rounds,
                                 const MovingRemovalParams& params = {});

/// Per-point keep mask of the same filter, in round-major order.
std::vector<bool> moving_keep_mask(const std::vector<SemanticPointCloud>& rounds,
                                   const MovingRemovalParams& params = {});

/// Points with |x - center| < radius (strict), in cloud order.
std::vector<SemanticPoint> radius_neighbors(const SemanticPointCloud& cloud,
                                            const Vec3& center, double radius);

struct RoadFilterParams {
  double max_normal_tilt_deg = 10.0;
  std::size_t k_neighbors = 16;
  bool use_labels = true;
};

struct RoadFilterResult {
  SemanticPointCloud road;
  std::vector<bool> kept;          // per input point
  std::size_t degenerate = 0;      // dropped for a rank-deficient neighbourhood
};

/// Keeps points whose local plane normal is within the tilt of vertical, or
/// which are labelled road/sidewalk.
RoadFilterResult filter_road_points(const SemanticPointCloud& cloud,
                                    const RoadFilterParams& params = {});

}  // namespace semloc
