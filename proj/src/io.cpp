#include "semloc/io.hpp"

#include "semloc/error.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace semloc {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

template <typename T>
void write_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    fail(ErrorCode::kParse, "unexpected end of binary stream");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

template void write_le<std::uint8_t>(std::ostream&, std::uint8_t);
template void write_le<std::uint16_t>(std::ostream&, std::uint16_t);
template void write_le<std::uint32_t>(std::ostream&, std::uint32_t);
template void write_le<std::uint64_t>(std::ostream&, std::uint64_t);
template void write_le<float>(std::ostream&, float);
template void write_le<double>(std::ostream&, double);
template std::uint8_t read_le<std::uint8_t>(std::istream&);
template std::uint16_t read_le<std::uint16_t>(std::istream&);
template std::uint32_t read_le<std::uint32_t>(std::istream&);
template std::uint64_t read_le<std::uint64_t>(std::istream&);
template float read_le<float>(std::istream&);
template double read_le<double>(std::istream&);

}  // namespace detail

using detail::read_le;
using detail::write_le;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot create " + path);
  return out;
}

void check_written(std::ostream& out, const std::string& what) {
  if (!out) fail(ErrorCode::kIo, "failed writing " + what);
}

std::string strip_comment(std::string line) {
  if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
  return line;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

std::vector<PoseRecord> read_poses(std::istream& in) {
  std::vector<PoseRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_comment(line);
    if (blank(line)) continue;
    std::istringstream fields(line);
    std::int64_t id = 0;
    double tx, ty, tz, qw, qx, qy, qz;
    std::string extra;
    if (!(fields >> id >> tx >> ty >> tz >> qw >> qx >> qy >> qz) || (fields >> extra)) {
      fail(ErrorCode::kParse, "pose line " + std::to_string(line_no) +
                                  ": expected `frame_id tx ty tz qw qx qy qz`");
    }
    try {
      out.push_back({id, CameraPose(Quat(qw, qx, qy, qz), Vec3(tx, ty, tz))});
    } catch (const Error& e) {
      fail(ErrorCode::kParse, "pose line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<PoseRecord> read_poses_file(const std::string& path) {
  auto in = open_in(path);
  return read_poses(in);
}

void write_poses(std::ostream& out, const std::vector<PoseRecord>& poses) {
  out << "# frame_id tx ty tz qw qx qy qz\n";
  for (const auto& r : poses) {
    const auto& t = r.pose.translation();
    const auto& q = r.pose.rotation();
    out << r.frame_id << ' ' << format_double(t.x()) << ' ' << format_double(t.y()) << ' '
        << format_double(t.z()) << ' ' << format_double(q.w()) << ' ' << format_double(q.x())
        << ' ' << format_double(q.y()) << ' ' << format_double(q.z()) << '\n';
  }
}

void write_poses_file(const std::string& path, const std::vector<PoseRecord>& poses) {
  auto out = open_out(path);
  write_poses(out, poses);
  check_written(out, path);
}

std::vector<SemanticPoint> read_points(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  const auto got = in.gcount();
  if (got == 4 && std::memcmp(magic.data(), "SPC1", 4) == 0) {
    const auto count = read_le<std::uint64_t>(in);
    std::vector<SemanticPoint> pts;
    pts.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 26)));
    for (std::uint64_t i = 0; i < count; ++i) {
      SemanticPoint p;
      p.position.x() = read_le<double>(in);
      p.position.y() = read_le<double>(in);
      p.position.z() = read_le<double>(in);
      p.class_id = read_le<std::uint16_t>(in);
      p.intensity = read_le<float>(in);
      p.round = read_le<std::uint16_t>(in);
      if (!p.position.allFinite()) fail(ErrorCode::kParse, "non-finite point in SPC1 stream");
      pts.push_back(p);
    }
    return pts;
  }
  // ASCII: put the sniffed bytes back in front of the rest.
  std::string text(magic.data(), static_cast<std::size_t>(got));
  text.append(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  std::istringstream body(text);
  std::vector<SemanticPoint> pts;
  std::string line;
  int line_no = 0;
  while (std::getline(body, line)) {
    ++line_no;
    line = strip_comment(line);
    if (blank(line)) continue;
    std::istringstream fields(line);
    double x, y, z, intensity;
    long cls, round;
    std::string extra;
    if (!(fields >> x >> y >> z >> cls >> intensity >> round) || (fields >> extra)) {
      fail(ErrorCode::kParse, "point line " + std::to_string(line_no) +
                                  ": expected `x y z class_id intensity round`");
    }
    if (cls < 0 || cls > 65535 || round < 0 || round > 65535 || !std::isfinite(x) ||
        !std::isfinite(y) || !std::isfinite(z)) {
      fail(ErrorCode::kParse, "point line " + std::to_string(line_no) + ": value out of range");
    }
    SemanticPoint p;
    p.position = Vec3(x, y, z);
    p.class_id = static_cast<std::uint16_t>(cls);
    p.intensity = static_cast<float>(intensity);
    p.round = static_cast<std::uint16_t>(round);
    pts.push_back(p);
  }
  return pts;
}

std::vector<SemanticPoint> read_points_file(const std::string& path) {
  auto in = open_in(path);
  return read_points(in);
}

void write_points_ascii(std::ostream& out, const std::vector<SemanticPoint>& points) {
  out << "# x y z class_id intensity round\n";
  for (const auto& p : points) {
    out << format_double(p.position.x()) << ' ' << format_double(p.position.y()) << ' '
        << format_double(p.position.z()) << ' ' << p.class_id << ' '
        << format_double(static_cast<double>(p.intensity)) << ' ' << p.round << '\n';
  }
}

void write_points_binary(std::ostream& out, const std::vector<SemanticPoint>& points) {
  out.write("SPC1", 4);
  write_le<std::uint64_t>(out, points.size());
  for (const auto& p : points) {
    write_le<double>(out, p.position.x());
    write_le<double>(out, p.position.y());
    write_le<double>(out, p.position.z());
    write_le<std::uint16_t>(out, p.class_id);
    write_le<float>(out, p.intensity);
    write_le<std::uint16_t>(out, p.round);
  }
}

void write_points_file(const std::string& path, const std::vector<SemanticPoint>& points,
                       bool binary) {
  auto out = open_out(path);
  if (binary) {
    write_points_binary(out, points);
  } else {
    write_points_ascii(out, points);
  }
  check_written(out, path);
}

void write_pgm(std::ostream& out, const LabelMap& labels) {
  std::uint16_t max_value = 0;
  for (auto v : labels.data()) max_value = std::max(max_value, v);
  const bool wide = max_value > 255;
  out << "P5\n" << labels.width() << ' ' << labels.height() << '\n' << (wide ? 65535 : 255) << '\n';
  for (auto v : labels.data()) {
    if (wide) {
      // PGM stores 16-bit samples big-endian.
      const unsigned char be[2] = {static_cast<unsigned char>(v >> 8),
                                   static_cast<unsigned char>(v & 0xFF)};
      out.write(reinterpret_cast<const char*>(be), 2);
    } else {
      out.put(static_cast<char>(v));
    }
  }
}

void write_pgm_file(const std::string& path, const LabelMap& labels) {
  auto out = open_out(path);
  write_pgm(out, labels);
  check_written(out, path);
}

namespace {

long read_pgm_token(std::istream& in) {
  std::string token;
  while (true) {
    int c = in.get();
    if (c == EOF) fail(ErrorCode::kParse, "truncated PGM header");
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  long value = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    fail(ErrorCode::kParse, "bad PGM header token '" + token + "'");
  }
  return value;
}

}  // namespace

LabelMap read_pgm(std::istream& in) {
  char p = 0, five = 0;
  in.get(p);
  in.get(five);
  if (p != 'P' || five != '5') fail(ErrorCode::kParse, "not a binary PGM (P5)");
  const long w = read_pgm_token(in);
  const long h = read_pgm_token(in);
  const long maxval = read_pgm_token(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) fail(ErrorCode::kParse, "bad PGM header");
  LabelMap labels(static_cast<int>(w), static_cast<int>(h), 0);
  const bool wide = maxval > 255;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (wide) {
      unsigned char be[2];
      if (!in.read(reinterpret_cast<char*>(be), 2)) fail(ErrorCode::kParse, "truncated PGM data");
      labels[i] = static_cast<std::uint16_t>((be[0] << 8) | be[1]);
    } else {
      const int c = in.get();
      if (c == EOF) fail(ErrorCode::kParse, "truncated PGM data");
      labels[i] = static_cast<std::uint16_t>(c);
    }
  }
  return labels;
}

LabelMap read_pgm_file(const std::string& path) {
  auto in = open_in(path);
  return read_pgm(in);
}

void write_depth(std::ostream& out, const DepthMap& depth) {
  out.write("DPT1", 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(depth.width()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(depth.height()));
  write_le<float>(out, std::numeric_limits<float>::infinity());
  for (double d : depth.data()) write_le<float>(out, static_cast<float>(d));
}

void write_depth_file(const std::string& path, const DepthMap& depth) {
  auto out = open_out(path);
  write_depth(out, depth);
  check_written(out, path);
}

DepthMap read_depth(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "DPT1", 4) != 0) {
    fail(ErrorCode::kParse, "not a DPT1 depth raster");
  }
  const auto w = read_le<std::uint32_t>(in);
  const auto h = read_le<std::uint32_t>(in);
  const float sentinel = read_le<float>(in);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) fail(ErrorCode::kParse, "bad DPT1 dims");
  DepthMap depth = make_depth_map(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const float v = read_le<float>(in);
    const bool empty = std::isinf(sentinel) ? std::isinf(v) : v == sentinel;
    depth[i] = empty ? std::numeric_limits<double>::infinity() : static_cast<double>(v);
  }
  return depth;
}

DepthMap read_depth_file(const std::string& path) {
  auto in = open_in(path);
  return read_depth(in);
}

}  // namespace semloc
