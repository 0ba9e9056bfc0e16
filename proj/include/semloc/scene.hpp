#pragma once

#include "semloc/geometry.hpp"
#include "semloc/io.hpp"
#include "semloc/point_cloud.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace semloc {

/// Synthetic street: straight road along +x with sidewalks, facades, poles,
/// lights, signs, trees, parked cars and transient cars, plus a camera
/// trajectory. Read from / written as `key = value` lines.
struct SceneSpec {
  std::uint64_t seed = 1;
  int rounds = 6;
  // Extent (meters).
  double road_length = 60.0;
  double road_width = 8.0;
  double sidewalk_width = 2.0;
  // Sampling.
  double road_spacing = 0.025;
  double object_spacing = 0.05;
  double jitter = 0.5;  // fraction of a grid cell
  // Inventory.
  int buildings_per_side = 4;
  int poles = 6;
  int traffic_lights = 2;
  int traffic_signs = 3;
  int trees = 4;
  int parked_cars = 2;
  int transients = 1;
  int transient_rounds = 1;  // rounds each transient appears in (< rounds)
  // Trajectory.
  std::vector<Vec2> waypoints = {Vec2(2.0, 0.0), Vec2(50.0, 0.0)};
  double speed = 10.0;       // m/s
  double frame_rate = 10.0;  // Hz
  double camera_height = 1.5;

  /// Default pipeline scene (~3e5 points per round, road sampled on the
  /// 0.05 m grid).
  static SceneSpec standard();

  void validate() const;

  static SceneSpec parse(std::istream& in);
  static SceneSpec parse_file(const std::string& path);
  void write(std::ostream& out) const;
};

struct PointTag {
  std::uint32_t primitive = 0;
  bool transient = false;
  bool horizontal = false;  // sampled from a face with a vertical normal
};

struct Primitive {
  std::uint32_t id = 0;
  std::uint16_t class_id = 0;
  bool transient = false;
  std::vector<int> rounds;  // rounds containing it (all rounds when static)
  std::string kind;
};

struct Scene {
  std::vector<SemanticPointCloud> rounds;
  std::vector<std::vector<PointTag>> membership;  // parallel to rounds
  std::vector<Primitive> primitives;
  std::vector<PoseRecord> gt_poses;

  /// Static points of one round (round 0 by default), tagged round 0.
  SemanticPointCloud static_map() const;
  /// Transient points present in `round`.
  SemanticPointCloud transients_in(int round) const;
  /// First round holding a transient, or 0.
  int first_transient_round() const;
};

Scene generate_scene(const SceneSpec& spec);

/// Camera-to-world orientation looking along `forward` with world z up
/// (camera x right, y down, z forward).
Quat look_along(const Vec3& forward);

/// Poses every speed/frame_rate meters along the waypoint polyline.
std::vector<PoseRecord> trajectory_poses(const SceneSpec& spec);

/// Writes `rounds.spc`, `gt_poses.txt`, `membership.txt`, `scene.cfg`.
void write_scene(const Scene& scene, const SceneSpec& spec, const std::string& dir);

}  // namespace semloc
