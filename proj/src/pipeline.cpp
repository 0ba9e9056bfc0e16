#include "semloc/pipeline.hpp"

#include "semloc/class_registry.hpp"
#include "semloc/error.hpp"
#include "semloc/fusion.hpp"
#include "semloc/io.hpp"
#include "semloc/localization.hpp"
#include "semloc/metrics.hpp"
#include "semloc/parallel.hpp"
#include "semloc/renderer.hpp"
#include "semloc/road_prior.hpp"
#include "semloc/scene.hpp"
#include "semloc/semantic_map.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace semloc {

const char* stage_name(StageCode code) {
  switch (code) {
    case StageCode::kOk: return "ok";
    case StageCode::kConfig: return "config";
    case StageCode::kGenerate: return "generate";
    case StageCode::kFilter: return "filter";
    case StageCode::kRender: return "render";
    case StageCode::kPerturb: return "perturb";
    case StageCode::kRectify: return "rectify";
    case StageCode::kRefine: return "refine";
    case StageCode::kSmooth: return "smooth";
    case StageCode::kFuse: return "fuse";
    case StageCode::kEvaluate: return "evaluate";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorCode::kConfig, "config: bad value for " + key + ": '" + value + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  double d = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return d;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int i = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return i;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  bad_value(key, v);
}

const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& v) {
  static const std::map<std::string, std::function<void(PipelineConfig&, const std::string&,
                                                        const std::string&)>>
      setters = {
          {"out_dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
          {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_int<std::uint64_t>(k, v); }},
          {"threads", [](auto& c, auto& k, auto& v) { c.threads = parse_int<unsigned>(k, v); }},
          {"scene_spec", [](auto& c, auto&, auto& v) { c.scene_spec = v; }},
          {"input_rounds", [](auto& c, auto&, auto& v) { c.input_rounds = v; }},
          {"input_poses", [](auto& c, auto&, auto& v) { c.input_poses = v; }},
          {"observation_round", [](auto& c, auto& k, auto& v) { c.observation_round = parse_int<int>(k, v); }},
          {"frame_step", [](auto& c, auto& k, auto& v) { c.frame_step = parse_int<int>(k, v); }},
          {"frame_rate", [](auto& c, auto& k, auto& v) { c.frame_rate = parse_real(k, v); }},
          {"stage_filter", [](auto& c, auto& k, auto& v) { c.stage_filter = parse_bool(k, v); }},
          {"stage_perturb", [](auto& c, auto& k, auto& v) { c.stage_perturb = parse_bool(k, v); }},
          {"stage_rectify", [](auto& c, auto& k, auto& v) { c.stage_rectify = parse_bool(k, v); }},
          {"stage_refine", [](auto& c, auto& k, auto& v) { c.stage_refine = parse_bool(k, v); }},
          {"stage_smooth", [](auto& c, auto& k, auto& v) { c.stage_smooth = parse_bool(k, v); }},
          {"stage_fuse", [](auto& c, auto& k, auto& v) { c.stage_fuse = parse_bool(k, v); }},
          {"stage_evaluate", [](auto& c, auto& k, auto& v) { c.stage_evaluate = parse_bool(k, v); }},
          {"min_support", [](auto& c, auto& k, auto& v) { c.min_support = parse_real(k, v); }},
          {"match_radius", [](auto& c, auto& k, auto& v) { c.match_radius = parse_real(k, v); }},
          {"splat_min", [](auto& c, auto& k, auto& v) { c.splat_min = parse_real(k, v); }},
          {"splat_max", [](auto& c, auto& k, auto& v) { c.splat_max = parse_real(k, v); }},
          {"grid_resolution", [](auto& c, auto& k, auto& v) { c.grid_resolution = parse_real(k, v); }},
          {"trans_max", [](auto& c, auto& k, auto& v) { c.trans_max = parse_real(k, v); }},
          {"rot_max", [](auto& c, auto& k, auto& v) { c.rot_max = parse_real(k, v); }},
          {"weights_file", [](auto& c, auto&, auto& v) { c.weights_file = v; }},
          {"observation_stride", [](auto& c, auto& k, auto& v) { c.observation_stride = parse_int<int>(k, v); }},
          {"max_iterations", [](auto& c, auto& k, auto& v) { c.max_iterations = parse_int<int>(k, v); }},
          {"multi_start", [](auto& c, auto& k, auto& v) { c.multi_start = parse_bool(k, v); }},
          {"kalman_process_noise", [](auto& c, auto& k, auto& v) { c.kalman_process_noise = parse_real(k, v); }},
          {"kalman_measurement_noise", [](auto& c, auto& k, auto& v) { c.kalman_measurement_noise = parse_real(k, v); }},
          {"fusion_confidence", [](auto& c, auto& k, auto& v) { c.fusion_confidence = parse_real(k, v); }},
          {"camera_fx", [](auto& c, auto& k, auto& v) { c.camera.fx = parse_real(k, v); }},
          {"camera_fy", [](auto& c, auto& k, auto& v) { c.camera.fy = parse_real(k, v); }},
          {"camera_cx", [](auto& c, auto& k, auto& v) { c.camera.cx = parse_real(k, v); }},
          {"camera_cy", [](auto& c, auto& k, auto& v) { c.camera.cy = parse_real(k, v); }},
          {"camera_width", [](auto& c, auto& k, auto& v) { c.camera.width = parse_int<int>(k, v); }},
          {"camera_height", [](auto& c, auto& k, auto& v) { c.camera.height = parse_int<int>(k, v); }},
      };
  auto it = setters.find(key);
  if (it == setters.end()) fail(ErrorCode::kConfig, "config: unknown key '" + key + "'");
  it->second(*this, key, v);
}

void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfig, "config: " + what);
  };
  require(!out_dir.empty(), "out_dir must be set");
  require(threads >= 1, "threads must be >= 1");
  require(input_rounds.empty() == input_poses.empty(), "input_rounds and input_poses go together");
  require(input_rounds.empty() || scene_spec.empty(), "scene_spec conflicts with input_rounds");
  require(frame_step >= 1, "frame_step must be >= 1");
  require(frame_rate > 0.0, "frame_rate must be positive");
  require(min_support > 0.0 && min_support <= 1.0, "min_support must be in (0, 1]");
  require(match_radius > 0.0, "match_radius must be positive");
  require(splat_min > 0.0 && splat_min <= splat_max, "need 0 < splat_min <= splat_max");
  require(grid_resolution > 0.0, "grid_resolution must be positive");
  require(trans_max >= 0.0 && rot_max >= 0.0, "noise ranges must be non-negative");
  require(observation_stride >= 1, "observation_stride must be >= 1");
  require(max_iterations >= 1, "max_iterations must be >= 1");
  require(kalman_process_noise > 0.0, "kalman_process_noise must be positive");
  require(fusion_confidence >= 0.0 && fusion_confidence <= 1.0,
          "fusion_confidence must be in [0, 1]");
  require(camera.fx > 0.0 && camera.fy > 0.0 && camera.width > 0 && camera.height > 0,
          "camera intrinsics must be positive");
}

PipelineConfig PipelineConfig::parse(std::istream& in) {
  PipelineConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfig, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

PipelineConfig PipelineConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfig, "cannot open config " + path);
  return parse(in);
}

void PipelineConfig::write(std::ostream& out, bool execution_settings) const {
  if (execution_settings) out << "out_dir = " << out_dir << "\nthreads = " << threads << '\n';
  out << "seed = " << seed << "\nscene_spec = " << scene_spec << "\ninput_rounds = " << input_rounds
      << "\ninput_poses = " << input_poses << "\nobservation_round = " << observation_round
      << "\nframe_step = " << frame_step << "\nframe_rate = " << format_double(frame_rate)
      << "\nstage_filter = " << flag(stage_filter) << "\nstage_perturb = " << flag(stage_perturb)
      << "\nstage_rectify = " << flag(stage_rectify) << "\nstage_refine = " << flag(stage_refine)
      << "\nstage_smooth = " << flag(stage_smooth) << "\nstage_fuse = " << flag(stage_fuse)
      << "\nstage_evaluate = " << flag(stage_evaluate)
      << "\nmin_support = " << format_double(min_support)
      << "\nmatch_radius = " << format_double(match_radius)
      << "\nsplat_min = " << format_double(splat_min) << "\nsplat_max = " << format_double(splat_max)
      << "\ngrid_resolution = " << format_double(grid_resolution)
      << "\ntrans_max = " << format_double(trans_max) << "\nrot_max = " << format_double(rot_max)
      << "\nweights_file = " << weights_file << "\nobservation_stride = " << observation_stride
      << "\nmax_iterations = " << max_iterations << "\nmulti_start = " << flag(multi_start)
      << "\nkalman_process_noise = " << format_double(kalman_process_noise)
      << "\nkalman_measurement_noise = " << format_double(kalman_measurement_noise)
      << "\nfusion_confidence = " << format_double(fusion_confidence)
      << "\ncamera_fx = " << format_double(camera.fx) << "\ncamera_fy = " << format_double(camera.fy)
      << "\ncamera_cx = " << format_double(camera.cx) << "\ncamera_cy = " << format_double(camera.cy)
      << "\ncamera_width = " << camera.width << "\ncamera_height = " << camera.height << '\n';
}

namespace {

struct StageFailure {
  StageCode code;
  std::string message;
};

// Runs fn(i) for every frame; the first failure (lowest frame) is rethrown.
template <typename Fn>
void for_frames(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  });
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

std::string frame_file(const fs::path& dir, const char* prefix, std::int64_t id, const char* ext) {
  char name[64];
  std::snprintf(name, sizeof(name), "%s_%06lld.%s", prefix, static_cast<long long>(id), ext);
  return (dir / name).string();
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg, bool verbose) : cfg_(cfg), verbose_(verbose), out_(cfg.out_dir) {}

  void run(PipelineResult& result) {
    stage(StageCode::kGenerate, [&] { generate(); });
    stage(StageCode::kFilter, [&] { filter(); });
    stage(StageCode::kRender, [&] { render_frames(); });
    current_ = gt_;
    if (cfg_.stage_perturb) {
      stage(StageCode::kPerturb, [&] { perturb_poses(); });
      rows_.push_back(row("noisy"));
    }
    if (cfg_.stage_rectify) {
      stage(StageCode::kRectify, [&] { rectify(); });
      rows_.push_back(row("rectified"));
    }
    if (cfg_.stage_refine) {
      stage(StageCode::kRefine, [&] { refine(); });
      rows_.push_back(row("refined"));
    }
    if (cfg_.stage_smooth) {
      stage(StageCode::kSmooth, [&] { smooth(); });
      rows_.push_back(row("smoothed"));
    }
    if (cfg_.stage_fuse) stage(StageCode::kFuse, [&] { fuse_frames(); });
    if (cfg_.stage_evaluate) stage(StageCode::kEvaluate, [&] { evaluate(result); });
    result.pose_rows = rows_;
  }

 private:
  template <typename Fn>
  void stage(StageCode code, Fn&& fn) {
    if (verbose_) std::cerr << "[pipeline] " << stage_name(code) << '\n';
    try {
      fn();
    } catch (const std::exception& e) {
      throw StageFailure{code, std::string(stage_name(code)) + ": " + e.what()};
    }
  }

  SummaryRow row(const char* name) const {
    const auto err = evaluate_pose_stream(current_, gt_);
    return {name, err.median_translation, err.median_rotation};
  }

  void generate() {
    std::vector<PoseRecord> poses;
    if (!cfg_.input_rounds.empty()) {
      rounds_ = split_by_round(SemanticPointCloud(read_points_file(cfg_.input_rounds)));
      poses = read_poses_file(cfg_.input_poses);
      dt_ = 1.0 / cfg_.frame_rate;
      obs_round_ = cfg_.observation_round < 0 ? 0 : cfg_.observation_round;
    } else {
      const SceneSpec spec =
          cfg_.scene_spec.empty() ? SceneSpec::standard() : SceneSpec::parse_file(cfg_.scene_spec);
      Scene scene = generate_scene(spec);
      rounds_ = std::move(scene.rounds);
      poses = scene.gt_poses;
      dt_ = 1.0 / spec.frame_rate;
      obs_round_ = cfg_.observation_round < 0 ? scene.first_transient_round() : cfg_.observation_round;
      std::ofstream spec_out(out_ / "scene.cfg");
      spec.write(spec_out);
    }
    if (rounds_.empty()) fail(ErrorCode::kInvalidArgument, "no rounds in input");
    if (obs_round_ < 0 || static_cast<std::size_t>(obs_round_) >= rounds_.size()) {
      fail(ErrorCode::kInvalidArgument, "observation_round out of range");
    }
    for (std::size_t i = 0; i < poses.size(); i += static_cast<std::size_t>(cfg_.frame_step)) {
      gt_.push_back(poses[i]);
    }
    if (gt_.empty()) fail(ErrorCode::kInvalidArgument, "no ground-truth poses");
    dt_ *= cfg_.frame_step;
    write_poses_file((out_ / "gt_poses.txt").string(), gt_);
  }

  void filter() {
    std::vector<SemanticPoint> removed;
    if (cfg_.stage_filter) {
      MovingRemovalParams params;
      params.min_support = cfg_.min_support;
      params.match_radius = cfg_.match_radius;
      params.threads = cfg_.threads;
      const std::vector<bool> keep = moving_keep_mask(rounds_, params);
      std::vector<SemanticPoint> kept;
      std::size_t flat = 0;
      for (std::size_t r = 0; r < rounds_.size(); ++r) {
        for (const auto& p : rounds_[r].points()) {
          if (keep[flat]) {
            kept.push_back(p);
          } else if (static_cast<int>(r) == obs_round_) {
            removed.push_back(p);
          }
          ++flat;
        }
      }
      map_ = deduplicate(SemanticPointCloud(std::move(kept)));
    } else {
      map_ = deduplicate(merge_clouds(rounds_));
    }
    removed_ = SemanticPointCloud(std::move(removed));
    write_points_file((out_ / "map.spc").string(), map_.points(), true);
    if (verbose_) {
      std::cerr << "[pipeline] map points " << map_.size() << ", removed in observed round "
                << removed_.size() << '\n';
    }
  }

  void render_frames() {
    std::vector<CameraPose> centres;
    for (const auto& r : gt_) centres.push_back(r.pose);
    splat_ = compute_splat_sizes(map_, centres, cfg_.splat_min, cfg_.splat_max);
    const fs::path dir = out_ / "renders";
    fs::create_directories(dir);
    const std::size_t n = gt_.size();
    gt_labels_.resize(n);
    background_.resize(n);
    objects_.resize(n);
    const SemanticPointCloud& observed = rounds_[static_cast<std::size_t>(obs_round_)];
    for_frames(n, cfg_.threads, [&](std::size_t i) {
      const CameraPose& pose = gt_[i].pose;
      RenderResult full = render(observed, pose, cfg_.camera, splat_);
      background_[i] = render(map_, pose, cfg_.camera, splat_);
      if (!removed_.empty()) {
        // Removed points that stay in front of everything stand in for detections.
        const RenderResult moving = render(removed_, pose, cfg_.camera, splat_);
        std::map<std::uint16_t, BinaryMask> per_class;
        for (std::size_t k = 0; k < moving.labels.size(); ++k) {
          const std::uint16_t c = moving.labels[k];
          if (c == kIgnoreLabel || moving.depth[k] > full.depth[k]) continue;
          auto [it, fresh] = per_class.try_emplace(
              c, BinaryMask(cfg_.camera.width, cfg_.camera.height, 0));
          it->second[k] = 1;
        }
        for (auto& [c, mask] : per_class) objects_[i].push_back({c, std::move(mask), 1.0});
      }
      gt_labels_[i] = std::move(full.labels);
      write_pgm_file(frame_file(dir, "gt", gt_[i].frame_id, "pgm"), gt_labels_[i]);
      write_pgm_file(frame_file(dir, "map", gt_[i].frame_id, "pgm"), background_[i].labels);
      write_depth_file(frame_file(dir, "map", gt_[i].frame_id, "dpt"), background_[i].depth);
    });
  }

  void perturb_poses() {
    NoiseModel model;
    model.trans_max = cfg_.trans_max;
    model.rot_max = cfg_.rot_max;
    model.seed = cfg_.seed;
    current_ = perturb_stream(gt_, model);
    write_poses_file((out_ / "noisy_poses.txt").string(), current_);
  }

  void rectify() {
    RoadFieldParams params;
    params.resolution = cfg_.grid_resolution;
    const RoadOffsetField field = build_offset_field(map_, params);
    field.save_file((out_ / "road_field.rof").string());
    for (auto& rec : current_) {
      rec.pose = CameraPose(rec.pose.rotation(), rectify_translation(rec.pose.translation(), field));
    }
    write_poses_file((out_ / "rectified_poses.txt").string(), current_);
  }

  void refine() {
    const SemanticWeightTable weights = cfg_.weights_file.empty()
                                            ? SemanticWeightTable::defaults()
                                            : SemanticWeightTable::load_csv_file(cfg_.weights_file);
    RefineOptions opts;
    opts.max_iterations = cfg_.max_iterations;
    opts.multi_start = cfg_.multi_start;
    std::vector<PoseRecord> refined = current_;
    for_frames(current_.size(), cfg_.threads, [&](std::size_t i) {
      const PoseObservation obs = make_observation(background_[i].depth, background_[i].labels,
                                                   gt_[i].pose, cfg_.camera, cfg_.observation_stride);
      refined[i].pose = refine_pose(current_[i].pose, obs, cfg_.camera, weights, opts).pose;
    });
    current_ = std::move(refined);
    write_poses_file((out_ / "refined_poses.txt").string(), current_);
  }

  void smooth() {
    if (current_.size() < 2) fail(ErrorCode::kInvalidArgument, "smoothing needs at least two frames");
    KalmanOptions opts;
    opts.process_noise = cfg_.kalman_process_noise;
    opts.measurement_noise = cfg_.kalman_measurement_noise;
    current_ = kalman_smooth(current_, dt_, opts).poses;
    write_poses_file((out_ / "smoothed_poses.txt").string(), current_);
  }

  void fuse_frames() {
    const ClassRegistry registry = ClassRegistry::builtin();
    const fs::path dir = out_ / "fused";
    fs::create_directories(dir);
    fused_.resize(gt_.size());
    for_frames(gt_.size(), cfg_.threads, [&](std::size_t i) {
      const RenderResult rendered = render(map_, current_[i].pose, cfg_.camera, splat_);
      fused_[i] = fuse(rendered.labels, background_[i].labels, objects_[i], registry,
                       cfg_.fusion_confidence)
                      .labels;
      write_pgm_file(frame_file(dir, "fused", gt_[i].frame_id, "pgm"), fused_[i]);
    });
  }

  void evaluate(PipelineResult& result) {
    std::ofstream out(out_ / "summary.csv");
    if (!out) fail(ErrorCode::kIo, "cannot create summary.csv");
    out << "stage,median_translation_m,median_rotation_deg,pixel_accuracy,mean_accuracy,mean_iou\n";
    for (const auto& r : rows_) {
      out << r.stage << ',' << format_double(r.median_translation) << ','
          << format_double(r.median_rotation) << ",,,\n";
    }
    if (!fused_.empty()) {
      ConfusionMatrix conf;
      for (std::size_t i = 0; i < fused_.size(); ++i) accumulate(conf, gt_labels_[i], fused_[i]);
      const SegmentationSummary s = summarize(conf);
      result.has_segmentation = true;
      result.pixel_accuracy = s.pixel_accuracy;
      result.mean_accuracy = s.mean_accuracy;
      result.mean_iou = s.mean_iou;
      out << "fused,,," << format_double(s.pixel_accuracy) << ',' << format_double(s.mean_accuracy)
          << ',' << format_double(s.mean_iou) << '\n';
    }
  }

  const PipelineConfig& cfg_;
  bool verbose_;
  fs::path out_;
  std::vector<SemanticPointCloud> rounds_;
  int obs_round_ = 0;
  double dt_ = 0.1;
  std::vector<PoseRecord> gt_;
  std::vector<PoseRecord> current_;
  SemanticPointCloud map_;
  SemanticPointCloud removed_;
  SplatConfig splat_;
  std::vector<LabelMap> gt_labels_;
  std::vector<RenderResult> background_;
  std::vector<std::vector<ObjectMask>> objects_;
  std::vector<LabelMap> fused_;
  std::vector<SummaryRow> rows_;
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, bool verbose) {
  PipelineResult result;
  try {
    config.validate();
    config.camera.validate();
  } catch (const std::exception& e) {
    result.code = StageCode::kConfig;
    result.message = e.what();
    return result;
  }
  try {
    fs::create_directories(config.out_dir);
    std::ofstream snap(fs::path(config.out_dir) / "config.resolved");
    if (!snap) fail(ErrorCode::kIo, "cannot write into " + config.out_dir);
    config.write(snap, false);
  } catch (const std::exception& e) {
    result.code = StageCode::kConfig;
    result.message = std::string("config: ") + e.what();
    return result;
  }
  Runner runner(config, verbose);
  try {
    runner.run(result);
  } catch (const StageFailure& f) {
    result.code = f.code;
    result.message = f.message;
  }
  return result;
}

}  // namespace semloc
