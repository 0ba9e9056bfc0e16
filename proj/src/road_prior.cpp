#include "semloc/road_prior.hpp"

#include "semloc/error.hpp"
#include "semloc/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>

namespace semloc {

using detail::read_le;
using detail::write_le;

ChamferDistance ChamferDistance::between(int dx, int dy) {
  const std::int64_t ax = std::abs(static_cast<std::int64_t>(dx));
  const std::int64_t ay = std::abs(static_cast<std::int64_t>(dy));
  const std::int64_t lo = std::min(ax, ay);
  const std::int64_t hi = std::max(ax, ay);
  return {hi - lo, lo};
}

double ChamferDistance::value() const {
  return static_cast<double>(straight) + static_cast<double>(diagonal) * std::sqrt(2.0);
}

bool operator<(const ChamferDistance& a, const ChamferDistance& b) {
  // a.s + a.d*sqrt2 < b.s + b.d*sqrt2  <=>  x < y*sqrt2 with x = a.s-b.s, y = b.d-a.d.
  const std::int64_t x = a.straight - b.straight;
  const std::int64_t y = b.diagonal - a.diagonal;
  if (y >= 0 && x < 0) return true;
  if (y <= 0 && x >= 0) return false;
  const auto x2 = static_cast<__int128>(x) * x;
  const auto y2 = static_cast<__int128>(y) * y * 2;
  if (y > 0) return x2 < y2;  // x >= 0 here
  return x2 > y2;             // x < 0, y < 0
}

namespace {

struct Candidate {
  ChamferDistance dist;
  std::int64_t source;
  std::int64_t cell;
};

bool better(const ChamferDistance& da, std::int64_t sa, const ChamferDistance& db,
            std::int64_t sb) {
  if (da < db) return true;
  if (db < da) return false;
  return sa < sb;
}

struct WorseFirst {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return better(b.dist, b.source, a.dist, a.source);
  }
};

}  // namespace

RoadOffsetField RoadOffsetField::from_mask(const Vec2& origin, double resolution, int width,
                                           int height, std::vector<std::uint8_t> mask) {
  if (!(resolution > 0.0)) fail(ErrorCode::kInvalidArgument, "field resolution must be positive");
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "field dims must be positive");
  const std::size_t cells = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (mask.size() != cells) fail(ErrorCode::kDimensionMismatch, "road mask size mismatch");

  RoadOffsetField f;
  f.origin_ = origin;
  f.resolution_ = resolution;
  f.width_ = width;
  f.height_ = height;
  f.mask_ = std::move(mask);
  f.nearest_.assign(cells, -1);

  std::vector<ChamferDistance> best_dist(cells);
  std::vector<std::int64_t> best_src(cells, -1);
  std::priority_queue<Candidate, std::vector<Candidate>, WorseFirst> frontier;
  for (std::size_t i = 0; i < cells; ++i) {
    if (f.mask_[i] != 0) {
      best_src[i] = static_cast<std::int64_t>(i);
      frontier.push({ChamferDistance{}, static_cast<std::int64_t>(i), static_cast<std::int64_t>(i)});
    }
  }
  if (frontier.empty()) fail(ErrorCode::kNoRoadCells, "road mask has no road cells");

  static constexpr std::array<std::array<int, 2>, 8> kSteps = {
      {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  while (!frontier.empty()) {
    const Candidate c = frontier.top();
    frontier.pop();
    if (f.nearest_[c.cell] >= 0) continue;
    if (c.source != best_src[c.cell] || !(c.dist == best_dist[c.cell])) continue;
    f.nearest_[c.cell] = c.source;
    const int cx = static_cast<int>(c.cell % width);
    const int cy = static_cast<int>(c.cell / width);
    const int sx = static_cast<int>(c.source % width);
    const int sy = static_cast<int>(c.source / width);
    for (const auto& step : kSteps) {
      const int nx = cx + step[0];
      const int ny = cy + step[1];
      if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
      const auto n = static_cast<std::int64_t>(ny) * width + nx;
      if (f.nearest_[n] >= 0) continue;
      const ChamferDistance d = ChamferDistance::between(nx - sx, ny - sy);
      if (best_src[n] < 0 || better(d, c.source, best_dist[n], best_src[n])) {
        best_dist[n] = d;
        best_src[n] = c.source;
        frontier.push({d, c.source, n});
      }
    }
  }
  return f;
}

Vec2 RoadOffsetField::offset(int col, int row) const {
  const std::int64_t n = nearest(col, row);
  const auto nc = static_cast<double>(n % width_);
  const auto nr = static_cast<double>(n / width_);
  return {(nc - col) * resolution_, (nr - row) * resolution_};
}

std::pair<std::int64_t, std::int64_t> RoadOffsetField::raw_cell_of(double x, double y) const {
  return {static_cast<std::int64_t>(std::floor((x - origin_.x()) / resolution_)),
          static_cast<std::int64_t>(std::floor((y - origin_.y()) / resolution_))};
}

std::pair<int, int> RoadOffsetField::cell_of(double x, double y) const {
  auto [c, r] = raw_cell_of(x, y);
  c = std::clamp<std::int64_t>(c, 0, width_ - 1);
  r = std::clamp<std::int64_t>(r, 0, height_ - 1);
  return {static_cast<int>(c), static_cast<int>(r)};
}

RoadOffsetField build_offset_field(const SemanticPointCloud& map, const RoadFieldParams& params) {
  if (map.empty()) fail(ErrorCode::kInvalidArgument, "road field needs a non-empty map");
  if (!(params.resolution > 0.0)) fail(ErrorCode::kInvalidArgument, "resolution must be positive");
  if (!(params.margin >= 0.0)) fail(ErrorCode::kInvalidArgument, "margin must be non-negative");
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const auto& p : map.points()) {
    lo = lo.cwiseMin(p.position.head<2>());
    hi = hi.cwiseMax(p.position.head<2>());
  }
  lo -= Vec2::Constant(params.margin);
  hi += Vec2::Constant(params.margin);
  // World-aligned grid: the origin sits on a multiple of the resolution.
  lo = (lo / params.resolution).array().floor().matrix() * params.resolution;
  const double wf = std::floor((hi.x() - lo.x()) / params.resolution) + 1.0;
  const double hf = std::floor((hi.y() - lo.y()) / params.resolution) + 1.0;
  if (wf * hf > 2e8) fail(ErrorCode::kInvalidArgument, "road field grid too large");
  const int width = static_cast<int>(wf);
  const int height = static_cast<int>(hf);

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height, 0);
  for (const auto& p : map.points()) {
    if (params.road_classes.count(p.class_id) == 0) continue;
    const auto c = std::clamp<std::int64_t>(
        static_cast<std::int64_t>(std::floor((p.position.x() - lo.x()) / params.resolution)), 0,
        width - 1);
    const auto r = std::clamp<std::int64_t>(
        static_cast<std::int64_t>(std::floor((p.position.y() - lo.y()) / params.resolution)), 0,
        height - 1);
    mask[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)] = 1;
  }
  return RoadOffsetField::from_mask(lo, params.resolution, width, height, std::move(mask));
}

namespace {

// Pulls `value` into [lo, lo + res) so that floor((value - origin)/res)
// yields `target`.
double settle_into_cell(double value, double origin, double res, std::int64_t target) {
  auto cell = [&](double v) {
    return static_cast<std::int64_t>(std::floor((v - origin) / res));
  };
  if (cell(value) == target) return value;
  const double lo = origin + static_cast<double>(target) * res;
  const double hi = lo + res;
  double v = std::clamp(value, lo, std::nextafter(hi, lo));
  for (int i = 0; i < 8 && cell(v) != target; ++i) {
    v = cell(v) < target ? std::nextafter(v, hi) : std::nextafter(v, lo);
  }
  if (cell(v) != target) v = lo + 0.5 * res;
  return v;
}

}  // namespace

Vec3 rectify_translation(const Vec3& t, const RoadOffsetField& field) {
  if (field.width() == 0) fail(ErrorCode::kInvalidArgument, "road field is empty");
  const auto [col, row] = field.cell_of(t.x(), t.y());
  const std::int64_t n = field.nearest(col, row);
  const std::int64_t nc = n % field.width();
  const std::int64_t nr = n / field.width();
  const Vec2 off = field.offset(col, row);
  Vec3 out(t.x() + off.x(), t.y() + off.y(), t.z());
  out.x() = settle_into_cell(out.x(), field.origin().x(), field.resolution(), nc);
  out.y() = settle_into_cell(out.y(), field.origin().y(), field.resolution(), nr);
  return out;
}

void RoadOffsetField::save(std::ostream& out) const {
  out.write("ROF1", 4);
  write_le<double>(out, origin_.x());
  write_le<double>(out, origin_.y());
  write_le<double>(out, resolution_);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(width_));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(height_));
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      write_le<std::uint8_t>(out, mask_[linear(c, r)]);
      const Vec2 o = offset(c, r);
      write_le<float>(out, static_cast<float>(o.x()));
      write_le<float>(out, static_cast<float>(o.y()));
    }
  }
}

RoadOffsetField RoadOffsetField::load(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "ROF1", 4) != 0) {
    fail(ErrorCode::kParse, "not a ROF1 road field");
  }
  RoadOffsetField f;
  f.origin_.x() = read_le<double>(in);
  f.origin_.y() = read_le<double>(in);
  f.resolution_ = read_le<double>(in);
  const auto w = read_le<std::uint32_t>(in);
  const auto h = read_le<std::uint32_t>(in);
  if (!(f.resolution_ > 0.0) || w == 0 || h == 0 ||
      static_cast<double>(w) * static_cast<double>(h) > 2e8) {
    fail(ErrorCode::kParse, "bad ROF1 header");
  }
  f.width_ = static_cast<int>(w);
  f.height_ = static_cast<int>(h);
  const std::size_t cells = static_cast<std::size_t>(w) * h;
  f.mask_.resize(cells);
  f.nearest_.resize(cells);
  for (int r = 0; r < f.height_; ++r) {
    for (int c = 0; c < f.width_; ++c) {
      const std::size_t i = f.linear(c, r);
      f.mask_[i] = read_le<std::uint8_t>(in);
      const double ox = read_le<float>(in);
      const double oy = read_le<float>(in);
      const auto nc = c + static_cast<std::int64_t>(std::llround(ox / f.resolution_));
      const auto nr = r + static_cast<std::int64_t>(std::llround(oy / f.resolution_));
      if (nc < 0 || nr < 0 || nc >= f.width_ || nr >= f.height_) {
        fail(ErrorCode::kParse, "ROF1 offset points outside the grid");
      }
      f.nearest_[i] = nr * f.width_ + nc;
    }
  }
  return f;
}

void RoadOffsetField::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot create " + path);
  save(out);
  if (!out) fail(ErrorCode::kIo, "failed writing " + path);
}

RoadOffsetField RoadOffsetField::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return load(in);
}

}  // namespace semloc
