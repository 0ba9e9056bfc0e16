#pragma once

#include "semloc/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace semloc {

/// Exit status of `run_pipeline`; each stage fails with its own code.
enum class StageCode : int {
  kOk = 0,
  kConfig = 2,
  kGenerate = 3,
  kFilter = 4,
  kRender = 5,
  kPerturb = 6,
  kRectify = 7,
  kRefine = 8,
  kSmooth = 9,
  kFuse = 10,
  kEvaluate = 11,
};

const char* stage_name(StageCode code);

/// Plain `key = value` configuration. Unknown keys are rejected.
struct PipelineConfig {
  std::string out_dir = "pipeline_out";
  std::uint64_t seed = 1;
  unsigned threads = 1;

  // Input: a scene spec to generate, or recorded rounds + ground-truth poses.
  std::string scene_spec;    // empty = built-in standard scene
  std::string input_rounds;  // point file holding all rounds
  std::string input_poses;   // required with input_rounds
  int observation_round = -1;  // round rendered as ground truth; -1 = first with transients
  int frame_step = 1;
  double frame_rate = 10.0;  // Hz, for recorded input (generated scenes use their spec)

  bool stage_filter = true;
  bool stage_perturb = true;
  bool stage_rectify = true;
  bool stage_refine = true;
  bool stage_smooth = true;
  bool stage_fuse = true;
  bool stage_evaluate = true;

  double min_support = 0.6;
  double match_radius = 0.025;
  double splat_min = 0.025;
  double splat_max = 0.05;
  double grid_resolution = 0.05;
  double trans_max = 7.5;
  double rot_max = 15.0;
  std::string weights_file;
  int observation_stride = 4;
  int max_iterations = 100;
  bool multi_start = true;
  double kalman_process_noise = 0.1;
  double kalman_measurement_noise = -1.0;  // negative = estimate
  double fusion_confidence = 0.9;
  CameraModel camera{300.0, 300.0, 152.0, 128.0, 304, 256};

  /// Throws Error(kConfig) on any invalid value.
  void validate() const;
  /// Throws Error(kConfig) for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);

  static PipelineConfig parse(std::istream& in);
  static PipelineConfig parse_file(const std::string& path);
  /// `execution_settings` = false leaves out `out_dir` and `threads`, which
  /// never change results.
  void write(std::ostream& out, bool execution_settings = true) const;
};

struct SummaryRow {
  std::string stage;
  double median_translation = 0.0;
  double median_rotation = 0.0;
};

struct PipelineResult {
  StageCode code = StageCode::kOk;
  std::string message;
  std::vector<SummaryRow> pose_rows;
  bool has_segmentation = false;
  double pixel_accuracy = 0.0;
  double mean_accuracy = 0.0;
  double mean_iou = 0.0;

  int exit_code() const { return static_cast<int>(code); }
};

/// Runs the enabled stages in fixed order, writing artifacts under
/// `config.out_dir`. Never throws; failures are reported through `code`.
/// Nothing is written when the configuration is invalid.
PipelineResult run_pipeline(const PipelineConfig& config, bool verbose = false);

}  // namespace semloc
