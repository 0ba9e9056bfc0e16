#pragma once

#include "semloc/geometry.hpp"
#include "semloc/point_cloud.hpp"
#include "semloc/raster.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace semloc {

struct PoseRecord {
  std::int64_t frame_id = 0;
  CameraPose pose;
};

/// Shortest decimal that round-trips the double exactly.
std::string format_double(double value);

// Pose file: `frame_id tx ty tz qw qx qy qz` per line, `#` comments.
std::vector<PoseRecord> read_poses(std::istream& in);
std::vector<PoseRecord> read_poses_file(const std::string& path);
void write_poses(std::ostream& out, const std::vector<PoseRecord>& poses);
void write_poses_file(const std::string& path, const std::vector<PoseRecord>& poses);

// Point cloud: ASCII `x y z class_id intensity round` lines, or the binary
// `SPC1` layout (u64 count, then 3 x f64, u16, f32, u16 per point, LE).
std::vector<SemanticPoint> read_points(std::istream& in);
std::vector<SemanticPoint> read_points_file(const std::string& path);
void write_points_ascii(std::ostream& out, const std::vector<SemanticPoint>& points);
void write_points_binary(std::ostream& out, const std::vector<SemanticPoint>& points);
void write_points_file(const std::string& path, const std::vector<SemanticPoint>& points,
                       bool binary = true);

// Label maps as binary PGM (P5); 8-bit when every value fits, else 16-bit.
void write_pgm(std::ostream& out, const LabelMap& labels);
void write_pgm_file(const std::string& path, const LabelMap& labels);
LabelMap read_pgm(std::istream& in);
LabelMap read_pgm_file(const std::string& path);

// Depth maps: `DPT1`, u32 width, u32 height, f32 empty sentinel, then f32
// row-major depths.
void write_depth(std::ostream& out, const DepthMap& depth);
void write_depth_file(const std::string& path, const DepthMap& depth);
DepthMap read_depth(std::istream& in);
DepthMap read_depth_file(const std::string& path);

namespace detail {
template <typename T>
void write_le(std::ostream& out, T value);
template <typename T>
T read_le(std::istream& in);
}  // namespace detail

}  // namespace semloc
