#include "semloc/scene.hpp"

#include "semloc/class_registry.hpp"
#include "semloc/error.hpp"
#include "semloc/random.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace semloc {

SceneSpec SceneSpec::standard() {
  SceneSpec s;
  s.seed = 7;
  s.road_length = 50.0;
  s.road_spacing = 0.05;
  s.object_spacing = 0.15;
  s.waypoints = {Vec2(2.0, 0.0), Vec2(42.0, 0.0)};
  return s;
}

void SceneSpec::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfig, "scene spec: " + what);
  };
  require(rounds >= 1 && rounds <= 65535, "rounds must be in [1, 65535]");
  require(road_length > 0.0 && road_width > 0.0 && sidewalk_width >= 0.0, "extent must be positive");
  require(road_spacing > 0.0 && object_spacing > 0.0, "spacings must be positive");
  require(jitter >= 0.0 && jitter <= 1.0, "jitter must be in [0, 1]");
  require(buildings_per_side >= 0 && poles >= 0 && trees >= 0 && parked_cars >= 0 &&
              transients >= 0,
          "counts must be non-negative");
  require(traffic_lights >= 0 && traffic_signs >= 0 && traffic_lights + traffic_signs <= poles,
          "lights and signs are mounted on poles (lights + signs <= poles)");
  require(transients == 0 || (transient_rounds >= 1 && transient_rounds < rounds),
          "transient_rounds must be a strict, non-empty subset of rounds");
  require(camera_height > 0.0, "camera_height must be positive");
  if (waypoints.size() < 2) fail(ErrorCode::kDegenerateTrajectory, "need at least two waypoints");
  double length = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) length += (waypoints[i] - waypoints[i - 1]).norm();
  if (!(length > 0.0)) fail(ErrorCode::kDegenerateTrajectory, "trajectory has zero length");
  if (!(speed > 0.0) || !(frame_rate > 0.0)) {
    fail(ErrorCode::kDegenerateTrajectory, "speed and frame_rate must be positive");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(ErrorCode::kConfig, "scene spec: bad number for " + key + ": '" + v + "'");
  }
}

std::vector<Vec2> parse_waypoints(const std::string& v) {
  std::vector<Vec2> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto comma = item.find(',');
    if (comma == std::string::npos) fail(ErrorCode::kConfig, "scene spec: waypoint needs `x,y`");
    out.emplace_back(to_double("waypoints", trim(item.substr(0, comma))),
                     to_double("waypoints", trim(item.substr(comma + 1))));
  }
  return out;
}

}  // namespace

SceneSpec SceneSpec::parse(std::istream& in) {
  SceneSpec s;
  const std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"seed", [&](const std::string& v) { s.seed = static_cast<std::uint64_t>(to_double("seed", v)); }},
      {"rounds", [&](const std::string& v) { s.rounds = static_cast<int>(to_double("rounds", v)); }},
      {"road_length", [&](const std::string& v) { s.road_length = to_double("road_length", v); }},
      {"road_width", [&](const std::string& v) { s.road_width = to_double("road_width", v); }},
      {"sidewalk_width", [&](const std::string& v) { s.sidewalk_width = to_double("sidewalk_width", v); }},
      {"road_spacing", [&](const std::string& v) { s.road_spacing = to_double("road_spacing", v); }},
      {"object_spacing", [&](const std::string& v) { s.object_spacing = to_double("object_spacing", v); }},
      {"jitter", [&](const std::string& v) { s.jitter = to_double("jitter", v); }},
      {"buildings_per_side", [&](const std::string& v) { s.buildings_per_side = static_cast<int>(to_double("buildings_per_side", v)); }},
      {"poles", [&](const std::string& v) { s.poles = static_cast<int>(to_double("poles", v)); }},
      {"traffic_lights", [&](const std::string& v) { s.traffic_lights = static_cast<int>(to_double("traffic_lights", v)); }},
      {"traffic_signs", [&](const std::string& v) { s.traffic_signs = static_cast<int>(to_double("traffic_signs", v)); }},
      {"trees", [&](const std::string& v) { s.trees = static_cast<int>(to_double("trees", v)); }},
      {"parked_cars", [&](const std::string& v) { s.parked_cars = static_cast<int>(to_double("parked_cars", v)); }},
      {"transients", [&](const std::string& v) { s.transients = static_cast<int>(to_double("transients", v)); }},
      {"transient_rounds", [&](const std::string& v) { s.transient_rounds = static_cast<int>(to_double("transient_rounds", v)); }},
      {"waypoints", [&](const std::string& v) { s.waypoints = parse_waypoints(v); }},
      {"speed", [&](const std::string& v) { s.speed = to_double("speed", v); }},
      {"frame_rate", [&](const std::string& v) { s.frame_rate = to_double("frame_rate", v); }},
      {"camera_height", [&](const std::string& v) { s.camera_height = to_double("camera_height", v); }},
  };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfig, "scene spec line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorCode::kConfig, "scene spec: unknown key '" + key + "'");
    it->second(trim(line.substr(eq + 1)));
  }
  s.validate();
  return s;
}

SceneSpec SceneSpec::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open scene spec " + path);
  return parse(in);
}

void SceneSpec::write(std::ostream& out) const {
  out << "seed = " << seed << "\nrounds = " << rounds << "\nroad_length = " << format_double(road_length)
      << "\nroad_width = " << format_double(road_width)
      << "\nsidewalk_width = " << format_double(sidewalk_width)
      << "\nroad_spacing = " << format_double(road_spacing)
      << "\nobject_spacing = " << format_double(object_spacing)
      << "\njitter = " << format_double(jitter) << "\nbuildings_per_side = " << buildings_per_side
      << "\npoles = " << poles << "\ntraffic_lights = " << traffic_lights
      << "\ntraffic_signs = " << traffic_signs << "\ntrees = " << trees
      << "\nparked_cars = " << parked_cars << "\ntransients = " << transients
      << "\ntransient_rounds = " << transient_rounds << "\nwaypoints = ";
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    out << (i ? ";" : "") << format_double(waypoints[i].x()) << ',' << format_double(waypoints[i].y());
  }
  out << "\nspeed = " << format_double(speed) << "\nframe_rate = " << format_double(frame_rate)
      << "\ncamera_height = " << format_double(camera_height) << '\n';
}

Quat look_along(const Vec3& forward) {
  const Vec3 f = forward.normalized();
  const Vec3 down(0.0, 0.0, -1.0);
  const Vec3 right = down.cross(f).normalized();
  const Vec3 cam_down = f.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = cam_down;
  r.col(2) = f;
  return Quat(r);
}

std::vector<PoseRecord> trajectory_poses(const SceneSpec& spec) {
  spec.validate();
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < spec.waypoints.size(); ++i) {
    cumulative.push_back(cumulative.back() + (spec.waypoints[i] - spec.waypoints[i - 1]).norm());
  }
  const double total = cumulative.back();
  const double step = spec.speed / spec.frame_rate;
  std::vector<PoseRecord> poses;
  for (std::int64_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * step;
    if (s > total + 1e-9) break;
    std::size_t seg = 1;
    while (seg + 1 < cumulative.size() && cumulative[seg] < s) ++seg;
    // Skip zero-length segments when picking the heading.
    std::size_t hseg = seg;
    while (hseg + 1 < spec.waypoints.size() &&
           (spec.waypoints[hseg] - spec.waypoints[hseg - 1]).norm() == 0.0) {
      ++hseg;
    }
    const Vec2 a = spec.waypoints[seg - 1];
    const Vec2 b = spec.waypoints[seg];
    const double len = cumulative[seg] - cumulative[seg - 1];
    const double frac = len > 0.0 ? std::clamp((s - cumulative[seg - 1]) / len, 0.0, 1.0) : 0.0;
    const Vec2 p = a + frac * (b - a);
    const Vec2 dir2 = (spec.waypoints[hseg] - spec.waypoints[hseg - 1]).normalized();
    poses.push_back({k, CameraPose(look_along(Vec3(dir2.x(), dir2.y(), 0.0)),
                                   Vec3(p.x(), p.y(), spec.camera_height))});
  }
  return poses;
}

namespace {

class Builder {
 public:
  Builder(const SceneSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {}

  std::uint32_t begin(std::uint16_t cls, bool transient, const std::string& kind) {
    Primitive p;
    p.id = static_cast<std::uint32_t>(prims_.size());
    p.class_id = cls;
    p.transient = transient;
    p.kind = kind;
    prims_.push_back(p);
    points_.emplace_back();
    horizontal_.emplace_back();
    return p.id;
  }

  // Stratified jittered samples over origin + a*u + b*v, a in [0, la], b in [0, lb].
  void rect(const Vec3& origin, const Vec3& u, double la, const Vec3& v, double lb,
            double spacing, const std::function<float(const Vec3&)>& intensity) {
    const auto na = std::max<long>(1, static_cast<long>(std::ceil(la / spacing)));
    const auto nb = std::max<long>(1, static_cast<long>(std::ceil(lb / spacing)));
    const double da = la / na;
    const double db = lb / nb;
    auto& cls_points = points_.back();
    const bool flat_face = std::abs(u.cross(v).normalized().z()) > 0.999;
    for (long i = 0; i < na; ++i) {
      for (long j = 0; j < nb; ++j) {
        const double a = (i + 0.5 + spec_.jitter * (rng_.uniform() - 0.5)) * da;
        const double b = (j + 0.5 + spec_.jitter * (rng_.uniform() - 0.5)) * db;
        SemanticPoint p;
        p.position = origin + a * u + b * v;
        p.class_id = prims_.back().class_id;
        p.intensity = intensity(p.position);
        cls_points.push_back(p);
        horizontal_.back().push_back(flat_face);
      }
    }
  }

  // Sides and top of an axis-aligned box.
  void box(const Vec3& lo, const Vec3& hi, double spacing) {
    const Vec3 ext = hi - lo;
    auto flat = [this](const Vec3&) { return static_cast<float>(0.3 + 0.4 * rng_.uniform()); };
    const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
    rect(lo, ex, ext.x(), ez, ext.z(), spacing, flat);
    rect(Vec3(lo.x(), hi.y(), lo.z()), ex, ext.x(), ez, ext.z(), spacing, flat);
    rect(lo, ey, ext.y(), ez, ext.z(), spacing, flat);
    rect(Vec3(hi.x(), lo.y(), lo.z()), ey, ext.y(), ez, ext.z(), spacing, flat);
    rect(Vec3(lo.x(), lo.y(), hi.z()), ex, ext.x(), ey, ext.y(), spacing, flat);
  }

  void cylinder(const Vec3& base, double radius, double height, double spacing) {
    const auto na = std::max<long>(6, static_cast<long>(std::ceil(2.0 * kPi * radius / spacing)));
    const auto nz = std::max<long>(1, static_cast<long>(std::ceil(height / spacing)));
    auto& cls_points = points_.back();
    for (long i = 0; i < na; ++i) {
      for (long j = 0; j < nz; ++j) {
        const double ang = (i + 0.5 + spec_.jitter * (rng_.uniform() - 0.5)) * 2.0 * kPi / na;
        const double z = (j + 0.5 + spec_.jitter * (rng_.uniform() - 0.5)) * height / nz;
        SemanticPoint p;
        p.position = base + Vec3(radius * std::cos(ang), radius * std::sin(ang), z);
        p.class_id = prims_.back().class_id;
        p.intensity = static_cast<float>(0.5 + 0.2 * rng_.uniform());
        cls_points.push_back(p);
        horizontal_.back().push_back(false);
      }
    }
  }

  std::vector<Primitive>& primitives() { return prims_; }
  std::vector<std::vector<SemanticPoint>>& points() { return points_; }
  const std::vector<std::vector<bool>>& horizontal() const { return horizontal_; }

 private:
  const SceneSpec& spec_;
  Rng& rng_;
  std::vector<Primitive> prims_;
  std::vector<std::vector<SemanticPoint>> points_;
  std::vector<std::vector<bool>> horizontal_;  // parallel to points_
};

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Builder b(spec, rng);
  const double L = spec.road_length;
  const double hw = spec.road_width / 2.0;
  const double sw = spec.sidewalk_width;
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();

  // Road with a dashed centre line visible in intensity.
  b.begin(classes::kRoad, false, "road");
  b.rect(Vec3(0.0, -hw, 0.0), ex, L, ey, spec.road_width, spec.road_spacing, [&](const Vec3& p) {
    const bool line = std::abs(p.y()) < 0.075 && std::fmod(p.x(), 6.0) < 3.0;
    return static_cast<float>(line ? 0.9 : 0.15 + 0.1 * rng.uniform());
  });
  if (sw > 0.0) {
    for (int side : {-1, 1}) {
      b.begin(classes::kSidewalk, false, "sidewalk");
      const double y0 = side > 0 ? hw : -hw - sw;
      b.rect(Vec3(0.0, y0, 0.15), ex, L, ey, sw, spec.road_spacing,
             [&](const Vec3&) { return static_cast<float>(0.3 + 0.1 * rng.uniform()); });
    }
  }

  // Facades facing the road.
  const double facade_y = hw + sw + 1.0;
  for (int side : {-1, 1}) {
    for (int i = 0; i < spec.buildings_per_side; ++i) {
      const double seg = L / spec.buildings_per_side;
      const double x0 = i * seg + 0.5;
      const double height = rng.uniform(6.0, 10.0);
      b.begin(classes::kBuilding, false, "building");
      b.rect(Vec3(x0, side * facade_y, 0.0), ex, seg - 1.0, ez, height, spec.object_spacing,
             [&](const Vec3&) { return static_cast<float>(0.2 + 0.5 * rng.uniform()); });
    }
  }

  // Poles along both kerbs; the first ones carry lights, then signs.
  for (int i = 0; i < spec.poles; ++i) {
    const int side = i % 2 == 0 ? 1 : -1;
    const double x = (i + 0.5) * L / std::max(1, spec.poles) + rng.uniform(-1.0, 1.0);
    const double y = side * (hw + 0.4);
    const double fine = std::min(spec.object_spacing, 0.05);
    b.begin(classes::kPole, false, "pole");
    b.cylinder(Vec3(x, y, 0.15), 0.12, 6.0, fine);
    if (i < spec.traffic_lights) {
      b.begin(classes::kTrafficLight, false, "traffic_light");
      const double yl = y - side * 0.5;
      b.box(Vec3(x - 0.2, yl - 0.2, 5.0), Vec3(x + 0.2, yl + 0.2, 5.9), fine);
    } else if (i < spec.traffic_lights + spec.traffic_signs) {
      b.begin(classes::kTrafficSign, false, "traffic_sign");
      b.rect(Vec3(x - 0.15, y - 0.35, 2.3), ey, 0.7, ez, 0.7, fine,
             [&](const Vec3&) { return static_cast<float>(0.8 + 0.2 * rng.uniform()); });
    }
  }

  for (int i = 0; i < spec.trees; ++i) {
    const int side = i % 2 == 0 ? -1 : 1;
    const double x = (i + 0.5) * L / std::max(1, spec.trees) + rng.uniform(-1.5, 1.5);
    const double yc = side * (hw + sw * 0.5 + 0.2);
    b.begin(classes::kVegetation, false, "tree");
    b.box(Vec3(x - 1.0, yc - 0.9, 3.0), Vec3(x + 1.0, yc + 0.9, 4.8), spec.object_spacing);
  }

  // Parked cars in the left lane.
  for (int i = 0; i < spec.parked_cars; ++i) {
    const double slot = L / std::max(1, spec.parked_cars);
    const double x = i * slot + rng.uniform(1.0, std::max(1.0, slot - 5.0));
    b.begin(classes::kCar, false, "parked_car");
    b.box(Vec3(x, hw - 1.9, 0.3), Vec3(x + 4.2, hw - 0.1, 1.5), spec.object_spacing);
  }

  // Transient cars in the right lane, lifted clear of the road surface.
  for (int i = 0; i < spec.transients; ++i) {
    const double x = rng.uniform(5.0, std::max(5.0, L - 10.0));
    const std::uint32_t id = b.begin(classes::kCar, true, "transient_car");
    b.box(Vec3(x, -hw + 0.8, 0.35), Vec3(x + 4.2, -hw + 2.6, 1.55), spec.object_spacing);
    std::vector<int> all(static_cast<std::size_t>(spec.rounds));
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t k = all.size(); k > 1; --k) {
      std::swap(all[k - 1], all[static_cast<std::size_t>(rng.below(k))]);
    }
    all.resize(static_cast<std::size_t>(spec.transient_rounds));
    std::sort(all.begin(), all.end());
    b.primitives()[id].rounds = all;
  }

  Scene scene;
  for (auto& prim : b.primitives()) {
    if (!prim.transient) {
      prim.rounds.resize(static_cast<std::size_t>(spec.rounds));
      std::iota(prim.rounds.begin(), prim.rounds.end(), 0);
    }
  }
  for (int r = 0; r < spec.rounds; ++r) {
    std::vector<SemanticPoint> pts;
    std::vector<PointTag> tags;
    for (const auto& prim : b.primitives()) {
      if (std::find(prim.rounds.begin(), prim.rounds.end(), r) == prim.rounds.end()) continue;
      const auto& prim_points = b.points()[prim.id];
      for (std::size_t i = 0; i < prim_points.size(); ++i) {
        SemanticPoint p = prim_points[i];
        p.round = static_cast<std::uint16_t>(r);
        pts.push_back(p);
        tags.push_back({prim.id, prim.transient, b.horizontal()[prim.id][i]});
      }
    }
    scene.rounds.emplace_back(std::move(pts));
    scene.membership.push_back(std::move(tags));
  }
  scene.primitives = b.primitives();
  scene.gt_poses = trajectory_poses(spec);
  return scene;
}

SemanticPointCloud Scene::static_map() const {
  std::vector<SemanticPoint> pts;
  if (rounds.empty()) return SemanticPointCloud(std::move(pts));
  for (std::size_t i = 0; i < rounds[0].size(); ++i) {
    if (membership[0][i].transient) continue;
    SemanticPoint p = rounds[0][i];
    p.round = 0;
    pts.push_back(p);
  }
  return SemanticPointCloud(std::move(pts));
}

SemanticPointCloud Scene::transients_in(int round) const {
  std::vector<SemanticPoint> pts;
  const auto r = static_cast<std::size_t>(round);
  if (r >= rounds.size()) fail(ErrorCode::kInvalidArgument, "round out of range");
  for (std::size_t i = 0; i < rounds[r].size(); ++i) {
    if (membership[r][i].transient) pts.push_back(rounds[r][i]);
  }
  return SemanticPointCloud(std::move(pts));
}

int Scene::first_transient_round() const {
  for (std::size_t r = 0; r < membership.size(); ++r) {
    for (const auto& t : membership[r]) {
      if (t.transient) return static_cast<int>(r);
    }
  }
  return 0;
}

void write_scene(const Scene& scene, const SceneSpec& spec, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  write_points_file((root / "rounds.spc").string(), merge_clouds(scene.rounds).points(), true);
  write_poses_file((root / "gt_poses.txt").string(), scene.gt_poses);
  {
    std::ofstream out(root / "membership.txt");
    if (!out) fail(ErrorCode::kIo, "cannot create membership.txt");
    out << "# round primitive transient horizontal  (one line per point of rounds.spc, same order)\n";
    for (std::size_t r = 0; r < scene.membership.size(); ++r) {
      for (const auto& t : scene.membership[r]) {
        out << r << ' ' << t.primitive << ' ' << (t.transient ? 1 : 0) << ' '
            << (t.horizontal ? 1 : 0) << '\n';
      }
    }
  }
  std::ofstream cfg(root / "scene.cfg");
  if (!cfg) fail(ErrorCode::kIo, "cannot create scene.cfg");
  spec.write(cfg);
}

}  // namespace semloc
