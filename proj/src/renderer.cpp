#include "semloc/renderer.hpp"

#include "semloc/error.hpp"
#include "semloc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace semloc {

double SplatConfig::size_for(std::uint16_t class_id) const {
  auto it = class_size.find(class_id);
  return it == class_size.end() ? min_size : it->second;
}

SplatConfig SplatConfig::single_pixel() {
  SplatConfig cfg;
  cfg.min_size = 0.0;
  cfg.max_size = 0.0;
  return cfg;
}

std::map<std::uint16_t, double> class_mean_min_distance(const SemanticPointCloud& cloud,
                                                        const std::vector<CameraPose>& poses) {
  if (cloud.empty()) fail(ErrorCode::kInvalidArgument, "splat sizes need a non-empty cloud");
  if (poses.empty()) fail(ErrorCode::kInvalidArgument, "splat sizes need at least one pose");
  std::vector<Vec3> centres;
  centres.reserve(poses.size());
  for (const auto& p : poses) centres.push_back(p.translation());
  const KdTree tree(std::move(centres));

  std::map<std::uint16_t, std::pair<double, std::size_t>> acc;
  for (const auto& p : cloud.points()) {
    auto& slot = acc[p.class_id];
    slot.first += tree.nearest(p.position).second;
    ++slot.second;
  }
  std::map<std::uint16_t, double> means;
  for (const auto& [cls, sum_count] : acc) {
    means[cls] = sum_count.first / static_cast<double>(sum_count.second);
  }
  return means;
}

SplatConfig compute_splat_sizes(const SemanticPointCloud& cloud,
                                const std::vector<CameraPose>& poses, double min_size,
                                double max_size) {
  if (!(min_size > 0.0) || !(max_size >= min_size)) {
    fail(ErrorCode::kInvalidArgument, "splat range must satisfy 0 < min <= max");
  }
  const auto means = class_mean_min_distance(cloud, poses);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [cls, m] : means) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  SplatConfig cfg;
  cfg.min_size = min_size;
  cfg.max_size = max_size;
  for (const auto& [cls, m] : means) {
    double s = min_size;
    if (hi > lo) s = min_size + (m - lo) / (hi - lo) * (max_size - min_size);
    cfg.class_size[cls] = std::clamp(s, min_size, max_size);
  }
  return cfg;
}

double splat_side_pixels(double world_size, double fx, double depth) {
  return std::max(1.0, world_size * fx / depth);
}

namespace {

struct Splat {
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
  double depth = 0.0;
  std::uint16_t class_id = 0;
  bool valid = false;
};

// Integer range of pixel centres c + 0.5 with lo < c + 0.5 <= hi.
void covered_range(double lo, double hi, int& first, int& last) {
  first = static_cast<int>(std::floor(lo - 0.5)) + 1;
  while (first - 1 + 0.5 > lo) --first;
  while (first + 0.5 <= lo) ++first;
  last = static_cast<int>(std::floor(hi - 0.5));
  while (last + 1 + 0.5 <= hi) ++last;
  while (last + 0.5 > hi) --last;
}

Splat make_splat(const SemanticPoint& p, const CameraPose& pose, const CameraModel& cam,
                 const SplatConfig& splat) {
  Splat s;
  const auto proj = project(p.position, pose, cam);
  if (!proj) return s;
  const double side = splat_side_pixels(splat.size_for(p.class_id), cam.fx, proj->depth);
  if (side <= 1.0) {
    s.x0 = s.x1 = static_cast<int>(std::floor(proj->u));
    s.y0 = s.y1 = static_cast<int>(std::floor(proj->v));
  } else {
    covered_range(proj->u - 0.5 * side, proj->u + 0.5 * side, s.x0, s.x1);
    covered_range(proj->v - 0.5 * side, proj->v + 0.5 * side, s.y0, s.y1);
  }
  s.x0 = std::max(s.x0, 0);
  s.y0 = std::max(s.y0, 0);
  s.x1 = std::min(s.x1, cam.width - 1);
  s.y1 = std::min(s.y1, cam.height - 1);
  s.depth = proj->depth;
  s.class_id = p.class_id;
  s.valid = s.x0 <= s.x1 && s.y0 <= s.y1;
  return s;
}

}  // namespace

RenderResult render(const SemanticPointCloud& cloud, const CameraPose& pose,
                    const CameraModel& cam, const SplatConfig& splat, unsigned threads) {
  cam.validate();
  RenderResult out{make_label_map(cam.width, cam.height), make_depth_map(cam.width, cam.height),
                   std::vector<std::int64_t>(static_cast<std::size_t>(cam.width) * cam.height, -1)};
  const std::size_t n = cloud.size();
  std::vector<Splat> splats(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) splats[i] = make_splat(cloud[i], pose, cam, splat);
  });

  // Row bands are independent; the (depth, index) order makes every band's
  // result independent of visiting order.
  parallel_for(static_cast<std::size_t>(cam.height), threads, [&](std::size_t row_begin,
                                                                 std::size_t row_end) {
    const int rb = static_cast<int>(row_begin);
    const int re = static_cast<int>(row_end) - 1;
    for (std::size_t i = 0; i < n; ++i) {
      const Splat& s = splats[i];
      if (!s.valid || s.y1 < rb || s.y0 > re) continue;
      const auto idx = static_cast<std::int64_t>(i);
      for (int y = std::max(s.y0, rb); y <= std::min(s.y1, re); ++y) {
        for (int x = s.x0; x <= s.x1; ++x) {
          const std::size_t pix = out.depth.index(x, y);
          const double cur = out.depth[pix];
          if (s.depth < cur || (s.depth == cur && idx < out.source[pix])) {
            out.depth[pix] = s.depth;
            out.labels[pix] = s.class_id;
            out.source[pix] = idx;
          }
        }
      }
    }
  });
  return out;
}

BirdviewRaster render_birdview(const SemanticPointCloud& road, const BirdviewBounds& bounds,
                               double resolution) {
  if (!(resolution > 0.0)) fail(ErrorCode::kInvalidArgument, "birdview resolution must be positive");
  if (!(bounds.max_x > bounds.min_x) || !(bounds.max_y > bounds.min_y)) {
    fail(ErrorCode::kInvalidArgument, "birdview bounds are degenerate");
  }
  const double cols_f = std::ceil((bounds.max_x - bounds.min_x) / resolution);
  const double rows_f = std::ceil((bounds.max_y - bounds.min_y) / resolution);
  if (cols_f * rows_f > 4e8) fail(ErrorCode::kInvalidArgument, "birdview raster too large");
  const int cols = static_cast<int>(cols_f);
  const int rows = static_cast<int>(rows_f);

  BirdviewRaster out;
  out.bounds = bounds;
  out.resolution = resolution;
  out.intensity = Raster<float>(cols, rows, 0.0f);
  out.labels = make_label_map(cols, rows);
  out.top_z = Raster<double>(cols, rows, -std::numeric_limits<double>::infinity());
  out.source.assign(static_cast<std::size_t>(cols) * rows, -1);

  for (std::size_t i = 0; i < road.size(); ++i) {
    const auto& p = road[i];
    const double fx = std::floor((p.position.x() - bounds.min_x) / resolution);
    const double fy = std::floor((p.position.y() - bounds.min_y) / resolution);
    if (fx < 0 || fy < 0 || fx >= cols || fy >= rows) continue;
    const std::size_t cell = out.labels.index(static_cast<int>(fx), static_cast<int>(fy));
    // Strict `>` keeps the earliest index among equal heights.
    if (out.source[cell] < 0 || p.position.z() > out.top_z[cell]) {
      out.top_z[cell] = p.position.z();
      out.intensity[cell] = p.intensity;
      out.labels[cell] = p.class_id;
      out.source[cell] = static_cast<std::int64_t>(i);
    }
  }
  return out;
}

double coverage(const LabelMap& labels) {
  if (labels.size() == 0) return 0.0;
  std::size_t covered = 0;
  for (auto v : labels.data()) covered += v != kIgnoreLabel ? 1 : 0;
  return static_cast<double>(covered) / static_cast<double>(labels.size());
}

}  // namespace semloc
