// semloc command-line front end: one subcommand per pipeline stage.

#include "semloc/class_registry.hpp"
#include "semloc/error.hpp"
#include "semloc/fusion.hpp"
#include "semloc/io.hpp"
#include "semloc/localization.hpp"
#include "semloc/metrics.hpp"
#include "semloc/parallel.hpp"
#include "semloc/pipeline.hpp"
#include "semloc/renderer.hpp"
#include "semloc/road_prior.hpp"
#include "semloc/scene.hpp"
#include "semloc/semantic_map.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace semloc;

namespace {

struct Globals {
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

Globals g;

void log(const std::string& msg) {
  if (g.verbose) std::cerr << msg << '\n';
}

std::vector<double> split_numbers(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::kParse, std::string("bad number in ") + what + ": '" + item + "'");
    }
  }
  if (expected != 0 && out.size() != expected) {
    fail(ErrorCode::kParse, std::string(what) + " expects " + std::to_string(expected) + " values");
  }
  return out;
}

CameraModel parse_camera(const std::string& text) {
  const auto v = split_numbers(text, 6, "--cam");
  CameraModel cam(v[0], v[1], v[2], v[3], static_cast<int>(v[4]), static_cast<int>(v[5]));
  cam.validate();
  return cam;
}

std::string frame_name(const char* prefix, std::int64_t id, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%06lld.%s", prefix, static_cast<long long>(id), ext);
  return buf;
}

SemanticPointCloud load_cloud(const std::string& path) {
  return SemanticPointCloud(read_points_file(path));
}

std::vector<CameraPose> centres_of(const std::vector<PoseRecord>& poses) {
  std::vector<CameraPose> out;
  for (const auto& p : poses) out.push_back(p.pose);
  return out;
}

// Sorted *.pgm files of a directory.
std::vector<fs::path> pgm_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> read_sidecar(const fs::path& mask, std::size_t fields) {
  fs::path side = mask;
  side.replace_extension(".txt");
  std::ifstream in(side);
  if (!in) fail(ErrorCode::kIo, "missing sidecar " + side.string());
  std::vector<double> v;
  double x = 0.0;
  while (v.size() < fields && in >> x) v.push_back(x);
  if (v.size() != fields) fail(ErrorCode::kParse, "malformed sidecar " + side.string());
  return v;
}

BinaryMask to_binary(const LabelMap& m) {
  BinaryMask out(m.width(), m.height(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] != 0 ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------

int cmd_gen_scene(const std::string& spec_path, const std::string& out) {
  SceneSpec spec = spec_path.empty() ? SceneSpec::standard() : SceneSpec::parse_file(spec_path);
  if (g.seed) spec.seed = *g.seed;
  const Scene scene = generate_scene(spec);
  write_scene(scene, spec, out);
  std::size_t total = 0;
  for (const auto& r : scene.rounds) total += r.size();
  log("gen-scene: " + std::to_string(scene.rounds.size()) + " rounds, " + std::to_string(total) +
      " points, " + std::to_string(scene.gt_poses.size()) + " poses");
  return 0;
}

int cmd_filter_moving(const std::string& in, const std::string& out, double support,
                      double radius, bool dedupe) {
  const auto rounds = split_by_round(load_cloud(in));
  MovingRemovalParams params;
  params.min_support = support;
  params.match_radius = radius;
  params.threads = g.threads;
  SemanticPointCloud kept = remove_moving(rounds, params);
  if (dedupe) kept = deduplicate(kept);
  write_points_file(out, kept.points(), true);
  std::size_t total = 0;
  for (const auto& r : rounds) total += r.size();
  log("filter-moving: kept " + std::to_string(kept.size()) + " of " + std::to_string(total));
  return 0;
}

int cmd_render(const std::string& map_path, const std::string& poses_path, const std::string& cam_text,
               const std::string& splat_range, bool single_pixel, const std::string& out) {
  const SemanticPointCloud map = load_cloud(map_path);
  const auto poses = read_poses_file(poses_path);
  const CameraModel cam = parse_camera(cam_text);
  SplatConfig splat = SplatConfig::single_pixel();
  if (!single_pixel) {
    const auto range = split_numbers(splat_range, 2, "--splat-range");
    splat = compute_splat_sizes(map, centres_of(poses), range[0], range[1]);
  }
  fs::create_directories(out);
  for (const auto& rec : poses) {
    const RenderResult r = render(map, rec.pose, cam, splat, g.threads);
    write_pgm_file((fs::path(out) / frame_name("labels", rec.frame_id, "pgm")).string(), r.labels);
    write_depth_file((fs::path(out) / frame_name("depth", rec.frame_id, "dpt")).string(), r.depth);
    log("render: frame " + std::to_string(rec.frame_id) + " coverage " +
        format_double(coverage(r.labels)));
  }
  return 0;
}

int cmd_render_birdview(const std::string& map_path, double resolution, bool labels_only,
                        const std::string& out) {
  const SemanticPointCloud map = load_cloud(map_path);
  if (map.empty()) fail(ErrorCode::kInvalidArgument, "empty map");
  SemanticPointCloud road;
  if (labels_only) {
    std::vector<SemanticPoint> pts;
    for (const auto& p : map.points()) {
      if (p.class_id == classes::kRoad || p.class_id == classes::kSidewalk) pts.push_back(p);
    }
    road = SemanticPointCloud(std::move(pts));
  } else {
    road = filter_road_points(map).road;
  }
  BirdviewBounds b{map[0].position.x(), map[0].position.y(), map[0].position.x(),
                   map[0].position.y()};
  for (const auto& p : map.points()) {
    b.min_x = std::min(b.min_x, p.position.x());
    b.min_y = std::min(b.min_y, p.position.y());
    b.max_x = std::max(b.max_x, p.position.x());
    b.max_y = std::max(b.max_y, p.position.y());
  }
  // Cells are half-open, so pad by one cell to keep points on the max edge.
  b.max_x += resolution;
  b.max_y += resolution;
  const BirdviewRaster bv = render_birdview(road, b, resolution);
  LabelMap intensity(bv.labels.width(), bv.labels.height(), 0);
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    if (bv.source[i] < 0) continue;
    const double v = std::clamp(static_cast<double>(bv.intensity[i]), 0.0, 1.0);
    intensity[i] = static_cast<std::uint16_t>(std::lround(v * 254.0) + 1);
  }
  write_pgm_file(out + "_intensity.pgm", intensity);
  write_pgm_file(out + "_labels.pgm", bv.labels);
  log("render-birdview: " + std::to_string(road.size()) + " road points, " +
      std::to_string(bv.labels.width()) + "x" + std::to_string(bv.labels.height()));
  return 0;
}

int cmd_build_road_field(const std::string& map_path, double resolution, const std::string& class_list,
                         const std::string& out) {
  RoadFieldParams params;
  params.resolution = resolution;
  params.road_classes.clear();
  for (double c : split_numbers(class_list, 0, "--classes")) {
    params.road_classes.insert(static_cast<std::uint16_t>(c));
  }
  const RoadOffsetField field = build_offset_field(load_cloud(map_path), params);
  field.save_file(out);
  log("build-road-field: " + std::to_string(field.width()) + "x" + std::to_string(field.height()));
  return 0;
}

int cmd_simulate_noise(const std::string& poses, double trans_max, double rot_max,
                       const std::string& out) {
  NoiseModel model;
  model.trans_max = trans_max;
  model.rot_max = rot_max;
  model.seed = g.seed.value_or(0);
  model.validate();
  write_poses_file(out, perturb_stream(read_poses_file(poses), model));
  return 0;
}

int cmd_rectify(const std::string& field_path, const std::string& poses, const std::string& out) {
  const RoadOffsetField field = RoadOffsetField::load_file(field_path);
  auto recs = read_poses_file(poses);
  for (auto& r : recs) {
    r.pose = CameraPose(r.pose.rotation(), rectify_translation(r.pose.translation(), field));
  }
  write_poses_file(out, recs);
  return 0;
}

int cmd_refine(const std::string& map_path, const std::string& coarse_path, const std::string& gt_path,
               const std::string& cam_text, const std::string& weights_path,
               const std::string& splat_range, int stride, const std::string& out) {
  const SemanticPointCloud map = load_cloud(map_path);
  const auto coarse = read_poses_file(coarse_path);
  const auto gt = read_poses_file(gt_path);
  if (coarse.size() != gt.size()) fail(ErrorCode::kLengthMismatch, "--coarse and --gt differ in length");
  const CameraModel cam = parse_camera(cam_text);
  const auto range = split_numbers(splat_range, 2, "--splat-range");
  const SplatConfig splat = compute_splat_sizes(map, centres_of(gt), range[0], range[1]);
  const SemanticWeightTable weights = weights_path.empty()
                                          ? SemanticWeightTable::defaults()
                                          : SemanticWeightTable::load_csv_file(weights_path);
  std::vector<PoseRecord> refined = coarse;
  std::vector<std::exception_ptr> errors(coarse.size());
  parallel_for(coarse.size(), g.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        if (coarse[i].frame_id != gt[i].frame_id) {
          fail(ErrorCode::kInvalidArgument, "frame ids of --coarse and --gt differ");
        }
        const RenderResult ref = render(map, gt[i].pose, cam, splat);
        const auto obs = make_observation(ref.depth, ref.labels, gt[i].pose, cam, stride);
        refined[i].pose = refine_pose(coarse[i].pose, obs, cam, weights, {}).pose;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  });
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  write_poses_file(out, refined);
  return 0;
}

int cmd_smooth(const std::string& poses, double dt, double q, double r, const std::string& out) {
  KalmanOptions opts;
  opts.process_noise = q;
  opts.measurement_noise = r;
  const KalmanResult res = kalman_smooth(read_poses_file(poses), dt, opts);
  write_poses_file(out, res.poses);
  log("smooth: measurement noise " + format_double(res.measurement_noise));
  return 0;
}

int cmd_fuse(const std::string& rendered, const std::string& background, const std::string& objects_dir,
             double min_conf, const std::string& out) {
  std::vector<ObjectMask> objects;
  if (!objects_dir.empty()) {
    for (const auto& path : pgm_files(objects_dir)) {
      const auto side = read_sidecar(path, 2);
      objects.push_back({static_cast<std::uint16_t>(side[0]), to_binary(read_pgm_file(path.string())),
                         side[1]});
    }
  }
  const FusionResult res = fuse(read_pgm_file(rendered), read_pgm_file(background), objects,
                                ClassRegistry::builtin(), min_conf);
  write_pgm_file(out, res.labels);
  log("fuse: " + std::to_string(res.holes) + " holes, " + std::to_string(res.skipped_objects) +
      " objects below threshold");
  return 0;
}

int cmd_eval_pose(const std::string& est, const std::string& gt, const std::string& out) {
  const PoseStreamErrors err = evaluate_pose_stream(read_poses_file(est), read_poses_file(gt));
  std::ostringstream csv;
  csv << "median_translation_m,median_rotation_deg\n"
      << format_double(err.median_translation) << ',' << format_double(err.median_rotation) << '\n';
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream(out) << csv.str();
  }
  return 0;
}

int cmd_eval_seg(const std::string& gt_dir, const std::string& pred_dir, const std::string& classes_path,
                 const std::string& out) {
  const ClassRegistry reg =
      classes_path.empty() ? ClassRegistry::builtin() : load_registry_file(classes_path);
  ConfusionMatrix conf;
  std::size_t images = 0;
  for (const auto& gt_path : pgm_files(gt_dir)) {
    const fs::path pred_path = fs::path(pred_dir) / gt_path.filename();
    if (!fs::exists(pred_path)) fail(ErrorCode::kIo, "missing prediction " + pred_path.string());
    accumulate(conf, read_pgm_file(gt_path.string()), read_pgm_file(pred_path.string()));
    ++images;
  }
  const SegmentationSummary s = summarize(conf);
  std::ostringstream csv;
  csv << "class_id,name,accuracy,iou,gt_pixels\n";
  for (const auto& c : s.classes) {
    const ClassInfo* info = reg.find(static_cast<std::uint16_t>(c.class_id));
    csv << c.class_id << ',' << (info ? info->name : "unknown") << ',' << format_double(c.accuracy)
        << ',' << format_double(c.iou) << ',' << c.gt_pixels << '\n';
  }
  csv << "mean,pixel_accuracy," << format_double(s.pixel_accuracy) << ",,\n"
      << "mean,mean_accuracy," << format_double(s.mean_accuracy) << ",,\n"
      << "mean,mean_iou,," << format_double(s.mean_iou) << ",\n";
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream(out) << csv.str();
  }
  log("eval-seg: " + std::to_string(images) + " images");
  return 0;
}

// Instance masks live either directly in the directory (one image) or in one
// subdirectory per image. Images are stacked vertically so masks of different
// images never overlap and matching stays per image.
struct InstanceSet {
  std::vector<std::vector<std::pair<fs::path, std::vector<double>>>> images;
};

InstanceSet read_instances(const fs::path& dir, std::size_t fields) {
  InstanceSet set;
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) subdirs.push_back(e.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) subdirs.push_back(dir);
  for (const auto& d : subdirs) {
    auto& img = set.images.emplace_back();
    for (const auto& p : pgm_files(d)) img.emplace_back(p, read_sidecar(p, fields));
  }
  return set;
}

int cmd_eval_instance(const std::string& gt_dir, const std::string& pred_dir, const std::string& out) {
  const InstanceSet gts = read_instances(gt_dir, 1);
  const InstanceSet preds = read_instances(pred_dir, 2);
  if (gts.images.size() != preds.images.size()) {
    fail(ErrorCode::kLengthMismatch, "gt and prediction directories hold different image counts");
  }
  // Every mask of one image shares its size; find the per-image heights.
  std::vector<int> heights(gts.images.size(), 0);
  int width = -1;
  std::vector<std::vector<LabelMap>> gt_masks(gts.images.size()), pred_masks(preds.images.size());
  auto load = [&](const InstanceSet& s, std::vector<std::vector<LabelMap>>& dst) {
    for (std::size_t i = 0; i < s.images.size(); ++i) {
      for (const auto& [path, side] : s.images[i]) {
        LabelMap m = read_pgm_file(path.string());
        if (width < 0) width = m.width();
        if (m.width() != width || (heights[i] != 0 && m.height() != heights[i])) {
          fail(ErrorCode::kDimensionMismatch, "mask size differs: " + path.string());
        }
        heights[i] = m.height();
        dst[i].push_back(std::move(m));
      }
    }
  };
  load(gts, gt_masks);
  load(preds, pred_masks);
  int total = 0;
  std::vector<int> top(heights.size(), 0);
  for (std::size_t i = 0; i < heights.size(); ++i) {
    top[i] = total;
    total += heights[i];
  }
  auto stack = [&](std::size_t image, const LabelMap& m) {
    BinaryMask out_mask(std::max(width, 1), std::max(total, 1), 0);
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) out_mask.at(x, top[image] + y) = m.at(x, y) != 0;
    }
    return out_mask;
  };
  std::vector<InstanceGroundTruth> gt_list;
  std::vector<InstancePrediction> pred_list;
  for (std::size_t i = 0; i < gts.images.size(); ++i) {
    for (std::size_t k = 0; k < gt_masks[i].size(); ++k) {
      gt_list.push_back({stack(i, gt_masks[i][k]), static_cast<std::uint16_t>(gts.images[i][k].second[0])});
    }
    for (std::size_t k = 0; k < pred_masks[i].size(); ++k) {
      const auto& side = preds.images[i][k].second;
      pred_list.push_back({stack(i, pred_masks[i][k]), static_cast<std::uint16_t>(side[0]), side[1]});
    }
  }
  const InstanceApResult ap = instance_ap(pred_list, gt_list);
  std::ostringstream csv;
  csv << "class_id,ap\n";
  for (const auto& [c, v] : ap.per_class) csv << c << ',' << format_double(v) << '\n';
  csv << "mean," << format_double(ap.mean_ap) << '\n';
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream(out) << csv.str();
  }
  return 0;
}

int cmd_pipeline(const std::string& config_path, const std::vector<std::string>& overrides,
                 const std::string& out, bool threads_given) {
  PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = PipelineConfig::parse_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail(ErrorCode::kConfig, "--set expects key=value, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
  } catch (const std::exception& e) {
    std::cerr << "semloc: " << e.what() << '\n';
    return static_cast<int>(StageCode::kConfig);
  }
  if (!out.empty()) cfg.out_dir = out;
  if (g.seed) cfg.seed = *g.seed;
  if (threads_given) cfg.threads = g.threads;
  const PipelineResult res = run_pipeline(cfg, g.verbose);
  if (res.code != StageCode::kOk) {
    std::cerr << "semloc: pipeline failed: " << res.message << '\n';
    return res.exit_code();
  }
  for (const auto& row : res.pose_rows) {
    std::cout << row.stage << ": median translation " << format_double(row.median_translation)
              << " m, rotation " << format_double(row.median_rotation) << " deg\n";
  }
  if (res.has_segmentation) {
    std::cout << "fused: pixel accuracy " << format_double(res.pixel_accuracy) << ", mIoU "
              << format_double(res.mean_iou) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-map localization and labeling toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  auto* threads_opt = app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_flag("--verbose,-v", g.verbose, "Progress on stderr");

  const std::string default_cam = "300,300,152,128,304,256";

  std::string spec, out;
  auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic scene");
  gen->add_option("--spec", spec, "Scene spec (key = value); default: standard scene");
  gen->add_option("--out", out, "Output directory")->required();

  std::string in;
  double support = 0.6, radius = 0.025;
  bool dedupe = false;
  auto* filt = app.add_subcommand("filter-moving", "Remove points not seen in enough rounds");
  filt->add_option("--in", in, "Point file holding all rounds")->required();
  filt->add_option("--out", out, "Output point file")->required();
  filt->add_option("--min-support", support, "Fraction of rounds required")->capture_default_str();
  filt->add_option("--radius", radius, "Match radius (m)")->capture_default_str();
  filt->add_flag("--dedupe", dedupe, "Drop repeated positions in the output");

  std::string map, poses, cam = default_cam, splat_range = "0.025,0.05";
  bool single_pixel = false;
  auto* rend = app.add_subcommand("render", "Render label and depth maps");
  rend->add_option("--map", map, "Map point file")->required();
  rend->add_option("--poses", poses, "Pose file")->required();
  rend->add_option("--cam", cam, "fx,fy,cx,cy,w,h")->capture_default_str();
  rend->add_option("--splat-range", splat_range, "min,max splat size (m)")->capture_default_str();
  rend->add_flag("--single-pixel", single_pixel, "One pixel per point");
  rend->add_option("--out", out, "Output directory")->required();

  double resolution = 0.05;
  bool labels_only = false;
  auto* bird = app.add_subcommand("render-birdview", "Top-down road raster");
  bird->add_option("--map", map, "Map point file")->required();
  bird->add_option("--resolution", resolution, "Meters per cell")->capture_default_str();
  bird->add_flag("--labels-only", labels_only, "Select road by label instead of plane fit");
  bird->add_option("--out", out, "Output prefix (_intensity.pgm, _labels.pgm)")->required();

  std::string class_list = "9,10";
  auto* field = app.add_subcommand("build-road-field", "Road mask and offset field");
  field->add_option("--map", map, "Map point file")->required();
  field->add_option("--resolution", resolution, "Meters per cell")->capture_default_str();
  field->add_option("--classes", class_list, "Road class IDs")->capture_default_str();
  field->add_option("--out", out, "Output field file")->required();

  double trans_max = 7.5, rot_max = 15.0;
  auto* noise = app.add_subcommand("simulate-noise", "Perturb poses");
  noise->add_option("--poses", poses, "Pose file")->required();
  noise->add_option("--trans-max", trans_max, "Max translation offset (m)")->capture_default_str();
  noise->add_option("--rot-max", rot_max, "Max rotation (deg)")->capture_default_str();
  noise->add_option("--out", out, "Output pose file")->required();

  std::string field_path;
  auto* rect = app.add_subcommand("rectify", "Snap translations onto the road");
  rect->add_option("--field", field_path, "Road field file")->required();
  rect->add_option("--poses", poses, "Pose file")->required();
  rect->add_option("--out", out, "Output pose file")->required();

  std::string coarse, gt, weights;
  int stride = 4;
  auto* ref = app.add_subcommand("refine", "Refine coarse poses against map renders");
  ref->add_option("--map", map, "Map point file")->required();
  ref->add_option("--coarse", coarse, "Coarse poses")->required();
  ref->add_option("--gt", gt, "Reference poses the observations are rendered at")->required();
  ref->add_option("--cam", cam, "fx,fy,cx,cy,w,h")->capture_default_str();
  ref->add_option("--weights", weights, "class_id,weight CSV");
  ref->add_option("--splat-range", splat_range, "min,max splat size (m)")->capture_default_str();
  ref->add_option("--stride", stride, "Observation pixel stride")->capture_default_str()->check(CLI::PositiveNumber);
  ref->add_option("--out", out, "Output pose file")->required();

  double dt = 0.1, q = 0.1, r = -1.0;
  auto* sm = app.add_subcommand("smooth", "Constant-velocity Kalman filter");
  sm->add_option("--poses", poses, "Pose file")->required();
  sm->add_option("--dt", dt, "Frame interval (s)")->capture_default_str();
  sm->add_option("--process-noise", q, "Process noise density")->capture_default_str();
  sm->add_option("--measurement-noise", r, "Measurement variance; negative = estimate")->capture_default_str();
  sm->add_option("--out", out, "Output pose file")->required();

  std::string rendered, background, objects_dir;
  double min_conf = 0.9;
  auto* fu = app.add_subcommand("fuse", "Fuse rendered, background and object labels");
  fu->add_option("--rendered", rendered, "Rendered label PGM")->required();
  fu->add_option("--background", background, "Background label PGM")->required();
  fu->add_option("--objects-dir", objects_dir, "Object mask PGMs with .txt sidecars");
  fu->add_option("--min-confidence", min_conf, "Object confidence threshold")->capture_default_str();
  fu->add_option("--out", out, "Output label PGM")->required();

  std::string est;
  auto* ep = app.add_subcommand("eval-pose", "Median pose errors");
  ep->add_option("--est", est, "Estimated poses")->required();
  ep->add_option("--gt", gt, "Ground-truth poses")->required();
  ep->add_option("--out", out, "CSV output (default stdout)");

  std::string gt_dir, pred_dir, classes_path;
  auto* es = app.add_subcommand("eval-seg", "Segmentation metrics");
  es->add_option("--gt-dir", gt_dir, "Ground-truth label PGMs")->required();
  es->add_option("--pred-dir", pred_dir, "Predicted label PGMs (same names)")->required();
  es->add_option("--classes", classes_path, "Class table");
  es->add_option("--out", out, "CSV output (default stdout)");

  auto* ei = app.add_subcommand("eval-instance", "Instance AP");
  ei->add_option("--gt-dir", gt_dir, "GT masks with `class_id` sidecars")->required();
  ei->add_option("--pred-dir", pred_dir, "Predicted masks with `class_id score` sidecars")->required();
  ei->add_option("--out", out, "CSV output (default stdout)");

  std::string config_path;
  std::vector<std::string> overrides;
  auto* pipe = app.add_subcommand("pipeline", "Run the end-to-end pipeline");
  pipe->add_option("--config", config_path, "Pipeline config (key = value)");
  pipe->add_option("--set", overrides, "Override a config key (key=value)");
  pipe->add_option("--out", out, "Artifact directory (overrides out_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_gen_scene(spec, out);
    if (*filt) return cmd_filter_moving(in, out, support, radius, dedupe);
    if (*rend) return cmd_render(map, poses, cam, splat_range, single_pixel, out);
    if (*bird) return cmd_render_birdview(map, resolution, labels_only, out);
    if (*field) return cmd_build_road_field(map, resolution, class_list, out);
    if (*noise) return cmd_simulate_noise(poses, trans_max, rot_max, out);
    if (*rect) return cmd_rectify(field_path, poses, out);
    if (*ref) return cmd_refine(map, coarse, gt, cam, weights, splat_range, stride, out);
    if (*sm) return cmd_smooth(poses, dt, q, r, out);
    if (*fu) return cmd_fuse(rendered, background, objects_dir, min_conf, out);
    if (*ep) return cmd_eval_pose(est, gt, out);
    if (*es) return cmd_eval_seg(gt_dir, pred_dir, classes_path, out);
    if (*ei) return cmd_eval_instance(gt_dir, pred_dir, out);
    if (*pipe) return cmd_pipeline(config_path, overrides, out, threads_opt->count() > 0);
  } catch (const Error& e) {
    std::cerr << "semloc: " << e.what() << " [" << to_string(e.code()) << "]\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "semloc: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
