#pragma once

#include "semloc/geometry.hpp"
#include "semloc/point_cloud.hpp"
#include "semloc/raster.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace semloc {

/// World-space splat side per class, clamped to [min_size, max_size].
struct SplatConfig {
  double min_size = 0.025;
  double max_size = 0.05;
  std::map<std::uint16_t, double> class_size;

  /// Classes without an entry use `min_size`.
  double size_for(std::uint16_t class_id) const;

  /// Every class rendered with a footprint of exactly one pixel.
  static SplatConfig single_pixel();
};

/// Per-class mean over points of the distance to the nearest pose centre,
/// rescaled linearly so the smallest mean maps to `min_size` and the largest
/// to `max_size`.
SplatConfig compute_splat_sizes(const SemanticPointCloud& cloud,
                                const std::vector<CameraPose>& poses, double min_size = 0.025,
                                double max_size = 0.05);

/// Per-class mean of min distance to the pose centres (before rescaling).
std::map<std::uint16_t, double> class_mean_min_distance(const SemanticPointCloud& cloud,
                                                        const std::vector<CameraPose>& poses);

struct RenderResult {
  LabelMap labels;
  DepthMap depth;
  std::vector<std::int64_t> source;  // winning point index per pixel, -1 if empty
};

/// Side of the screen-space square for a point at `depth`, at least 1 px.
double splat_side_pixels(double world_size, double fx, double depth);

/// Z-buffered square-splat rendering. Ties in depth go to the smaller point
/// index, so the result does not depend on `threads`.
RenderResult render(const SemanticPointCloud& cloud, const CameraPose& pose,
                    const CameraModel& cam, const SplatConfig& splat, unsigned threads = 1);

struct BirdviewBounds {
  double min_x = 0.0, min_y = 0.0, max_x = 1.0, max_y = 1.0;
};

/// Top-down orthographic raster. Cell (col, row) spans
/// [min_x + col*res, min_x + (col+1)*res) x [min_y + row*res, ...).
struct BirdviewRaster {
  BirdviewBounds bounds;
  double resolution = 0.05;
  Raster<float> intensity;
  LabelMap labels;
  Raster<double> top_z;
  std::vector<std::int64_t> source;

  bool occupied(int col, int row) const { return source[labels.index(col, row)] >= 0; }
};

BirdviewRaster render_birdview(const SemanticPointCloud& road, const BirdviewBounds& bounds,
                               double resolution);

/// Fraction of pixels holding a label other than 255.
double coverage(const LabelMap& labels);

}  // namespace semloc
