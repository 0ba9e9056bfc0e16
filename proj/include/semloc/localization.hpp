#pragma once

#include "semloc/geometry.hpp"
#include "semloc/io.hpp"
#include "semloc/point_cloud.hpp"
#include "semloc/random.hpp"
#include "semloc/raster.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace semloc {

// ---------------------------------------------------------------------------
// GPS/IMU noise simulation

struct NoiseModel {
  double trans_max = 7.5;  // meters
  double rot_max = 15.0;   // degrees
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws perturbations from one seeded stream: translation offset with a
/// direction uniform on the sphere and magnitude ~ U(0, trans_max); rotation
/// about a uniform axis by an angle ~ U(0, rot_max), pre-multiplied onto q.
class PoseNoise {
 public:
  explicit PoseNoise(const NoiseModel& model);

  CameraPose perturb(const CameraPose& pose);

 private:
  NoiseModel model_;
  Rng rng_;
};

/// Single draw with a fresh stream seeded from `model.seed`.
CameraPose perturb(const CameraPose& pose, const NoiseModel& model);
std::vector<PoseRecord> perturb_stream(const std::vector<PoseRecord>& poses,
                                       const NoiseModel& model);

// ---------------------------------------------------------------------------
// Semantic weights

class SemanticWeightTable {
 public:
  SemanticWeightTable() = default;

  /// 2.0 for traffic light, pole and traffic sign, 1.0 otherwise.
  static SemanticWeightTable defaults();

  double weight(std::uint16_t class_id) const;
  void set(std::uint16_t class_id, double weight);
  void set_default(double weight);
  double default_weight() const { return default_; }
  SemanticWeightTable scaled(double factor) const;

  static SemanticWeightTable load_csv(std::istream& in);
  static SemanticWeightTable load_csv_file(const std::string& path);

 private:
  std::map<std::uint16_t, double> weights_;
  double default_ = 1.0;
};

// ---------------------------------------------------------------------------
// Geometric matching loss

struct LossValue {
  double loss = 0.0;
  std::size_t clamped = 0;  // points that left the view under the candidate pose
  std::size_t used = 0;     // points visible under the reference pose
};

/// Sum over points visible under `gt` of w * |pi(x, pose) - pi(x, gt)|_2;
/// points leaving the view under `pose` cost the image diagonal instead.
/// Throws kEmptyVisibleSet when no point is visible under `gt`.
LossValue pose_loss(const CameraPose& pose, const CameraPose& gt,
                    const std::vector<SemanticPoint>& points, const CameraModel& cam,
                    const SemanticWeightTable& weights);

/// World points with the pixel they were observed at.
struct PoseObservation {
  std::vector<SemanticPoint> points;
  std::vector<Vec2> targets;
};

/// Back-projects every covered pixel centre: x_cam = depth * K^-1 (u, v, 1).
std::vector<SemanticPoint> back_project(const DepthMap& depth, const LabelMap& labels,
                                        const CameraPose& pose, const CameraModel& cam);

/// Observation built from a render at the reference pose; `stride` keeps
/// every stride-th covered pixel along both axes.
PoseObservation make_observation(const DepthMap& depth, const LabelMap& labels,
                                 const CameraPose& pose, const CameraModel& cam, int stride = 1);

/// Loss of `pose` against fixed pixel targets (same clamping rule).
LossValue observation_loss(const CameraPose& pose, const PoseObservation& obs,
                           const CameraModel& cam, const SemanticWeightTable& weights);

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Applies a local increment: t += delta[0..2] (world), q = Exp(delta[3..5]) * q.
CameraPose retract(const CameraPose& pose, const Vec6& delta);

/// Analytic gradient of `observation_loss` w.r.t. the retraction increment
/// at zero.
Vec6 observation_loss_gradient(const CameraPose& pose, const PoseObservation& obs,
                               const CameraModel& cam, const SemanticWeightTable& weights);

struct RefineOptions {
  int max_iterations = 100;
  int patience = 5;
  bool multi_start = true;
  double jitter_deg = 8.0;          // rotation offsets of the extra starts
  double min_relative_decrease = 1e-12;
  double min_step = 1e-12;
};

struct RefineReport {
  CameraPose pose;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;
  int start_index = 0;              // which start produced the result
  std::vector<double> loss_history; // accepted losses of the winning start
};

/// Damped Gauss-Newton on the reweighted loss with backtracking; returns the
/// best pose over the coarse start and (optionally) four rotation-jittered
/// starts. Never returns a pose with a higher loss than `coarse`.
RefineReport refine_pose(const CameraPose& coarse, const PoseObservation& obs,
                         const CameraModel& cam, const SemanticWeightTable& weights,
                         const RefineOptions& opts = {});

// ---------------------------------------------------------------------------
// Constant-velocity Kalman baseline

struct KalmanOptions {
  double process_noise = 0.1;       // q_p, continuous white-acceleration density
  double measurement_noise = -1.0;  // r_m; negative = estimate from the first frames
  int estimation_frames = 10;
  double min_measurement_noise = 1e-12;
};

struct KalmanState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Mat6 covariance = Mat6::Zero();
};

struct KalmanResult {
  std::vector<PoseRecord> poses;
  std::vector<KalmanState> states;  // posterior after each measurement
  double measurement_noise = 0.0;
};

/// Filters translations with a constant-velocity model whose initial
/// velocity is the stream's average; rotations pass through unchanged.
KalmanResult kalman_smooth(const std::vector<PoseRecord>& stream, double dt,
                           const KalmanOptions& opts = {});

// ---------------------------------------------------------------------------
// Evaluation

struct PoseStreamErrors {
  double median_translation = 0.0;  // meters
  double median_rotation = 0.0;     // degrees
  std::vector<double> translation;
  std::vector<double> rotation;
};

/// Even counts take the mean of the two middle values.
double median(std::vector<double> values);

PoseStreamErrors evaluate_pose_stream(const std::vector<PoseRecord>& estimates,
                                      const std::vector<PoseRecord>& ground_truth);

}  // namespace semloc
