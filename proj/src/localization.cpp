#include "semloc/localization.hpp"

#include "semloc/class_registry.hpp"
#include "semloc/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace semloc {

// ---------------------------------------------------------------------------
// Noise

void NoiseModel::validate() const {
  if (!(trans_max >= 0.0) || !std::isfinite(trans_max)) {
    fail(ErrorCode::kInvalidArgument, "trans_max must be finite and >= 0");
  }
  if (!(rot_max >= 0.0) || !std::isfinite(rot_max)) {
    fail(ErrorCode::kInvalidArgument, "rot_max must be finite and >= 0");
  }
}

PoseNoise::PoseNoise(const NoiseModel& model) : model_(model), rng_(model.seed) {
  model_.validate();
}

CameraPose PoseNoise::perturb(const CameraPose& pose) {
  // Fixed draw order: direction, magnitude, axis, angle.
  const Vec3 dir = rng_.unit_vector();
  const double magnitude = rng_.uniform(0.0, model_.trans_max);
  const Vec3 axis = rng_.unit_vector();
  const double angle = deg2rad(rng_.uniform(0.0, model_.rot_max));
  const Quat dq(Eigen::AngleAxisd(angle, axis));
  return CameraPose(dq * pose.rotation(), pose.translation() + magnitude * dir);
}

CameraPose perturb(const CameraPose& pose, const NoiseModel& model) {
  PoseNoise noise(model);
  return noise.perturb(pose);
}

std::vector<PoseRecord> perturb_stream(const std::vector<PoseRecord>& poses,
                                       const NoiseModel& model) {
  PoseNoise noise(model);
  std::vector<PoseRecord> out;
  out.reserve(poses.size());
  for (const auto& r : poses) out.push_back({r.frame_id, noise.perturb(r.pose)});
  return out;
}

// ---------------------------------------------------------------------------
// Weights

SemanticWeightTable SemanticWeightTable::defaults() {
  SemanticWeightTable t;
  t.set(classes::kTrafficLight, 2.0);
  t.set(classes::kPole, 2.0);
  t.set(classes::kTrafficSign, 2.0);
  return t;
}

double SemanticWeightTable::weight(std::uint16_t class_id) const {
  auto it = weights_.find(class_id);
  return it == weights_.end() ? default_ : it->second;
}

void SemanticWeightTable::set(std::uint16_t class_id, double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    fail(ErrorCode::kInvalidArgument, "semantic weights must be finite and >= 0");
  }
  weights_[class_id] = weight;
}

void SemanticWeightTable::set_default(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    fail(ErrorCode::kInvalidArgument, "semantic weights must be finite and >= 0");
  }
  default_ = weight;
}

SemanticWeightTable SemanticWeightTable::scaled(double factor) const {
  SemanticWeightTable t;
  t.set_default(default_ * factor);
  for (const auto& [cls, w] : weights_) t.set(cls, w * factor);
  return t;
}

SemanticWeightTable SemanticWeightTable::load_csv(std::istream& in) {
  SemanticWeightTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::string id_text;
    double weight = 0.0;
    std::string extra;
    if (!(fields >> id_text)) continue;
    if (id_text == "class_id") continue;  // header
    long id = 0;
    try {
      std::size_t used = 0;
      id = std::stol(id_text, &used);
      if (used != id_text.size()) throw std::invalid_argument(id_text);
    } catch (const std::exception&) {
      fail(ErrorCode::kParse, "weights line " + std::to_string(line_no) + ": bad class id");
    }
    if (!(fields >> weight) || (fields >> extra) || id < 0 || id > 65535) {
      fail(ErrorCode::kParse, "weights line " + std::to_string(line_no) + ": expected `class_id,weight`");
    }
    t.set(static_cast<std::uint16_t>(id), weight);
  }
  return t;
}

SemanticWeightTable SemanticWeightTable::load_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return load_csv(in);
}

// ---------------------------------------------------------------------------
// Loss

LossValue pose_loss(const CameraPose& pose, const CameraPose& gt,
                    const std::vector<SemanticPoint>& points, const CameraModel& cam,
                    const SemanticWeightTable& weights) {
  const double penalty = cam.diagonal();
  LossValue out;
  for (const auto& p : points) {
    const auto ref = project(p.position, gt, cam);
    if (!ref) continue;
    ++out.used;
    const double w = weights.weight(p.class_id);
    const auto cur = project(p.position, pose, cam);
    if (!cur) {
      out.loss += w * penalty;
      ++out.clamped;
      continue;
    }
    out.loss += w * std::hypot(cur->u - ref->u, cur->v - ref->v);
  }
  if (out.used == 0) fail(ErrorCode::kEmptyVisibleSet, "no point is visible under the reference pose");
  return out;
}

std::vector<SemanticPoint> back_project(const DepthMap& depth, const LabelMap& labels,
                                        const CameraPose& pose, const CameraModel& cam) {
  if (!depth.same_shape(labels)) fail(ErrorCode::kDimensionMismatch, "depth/label size mismatch");
  std::vector<SemanticPoint> out;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const double d = depth.at(x, y);
      if (!std::isfinite(d)) continue;
      const double u = x + 0.5;
      const double v = y + 0.5;
      const Vec3 x_cam(d * (u - cam.cx) / cam.fx, d * (v - cam.cy) / cam.fy, d);
      SemanticPoint p;
      p.position = pose.camera_to_world(x_cam);
      p.class_id = labels.at(x, y);
      out.push_back(p);
    }
  }
  return out;
}

PoseObservation make_observation(const DepthMap& depth, const LabelMap& labels,
                                 const CameraPose& pose, const CameraModel& cam, int stride) {
  if (stride < 1) fail(ErrorCode::kInvalidArgument, "stride must be >= 1");
  if (!depth.same_shape(labels)) fail(ErrorCode::kDimensionMismatch, "depth/label size mismatch");
  PoseObservation obs;
  for (int y = stride / 2; y < depth.height(); y += stride) {
    for (int x = stride / 2; x < depth.width(); x += stride) {
      const double d = depth.at(x, y);
      if (!std::isfinite(d)) continue;
      const double u = x + 0.5;
      const double v = y + 0.5;
      const Vec3 x_cam(d * (u - cam.cx) / cam.fx, d * (v - cam.cy) / cam.fy, d);
      SemanticPoint p;
      p.position = pose.camera_to_world(x_cam);
      p.class_id = labels.at(x, y);
      obs.points.push_back(p);
      obs.targets.emplace_back(u, v);
    }
  }
  return obs;
}

LossValue observation_loss(const CameraPose& pose, const PoseObservation& obs,
                           const CameraModel& cam, const SemanticWeightTable& weights) {
  if (obs.points.size() != obs.targets.size()) {
    fail(ErrorCode::kLengthMismatch, "observation points/targets size mismatch");
  }
  if (obs.points.empty()) fail(ErrorCode::kEmptyVisibleSet, "observation has no points");
  const double penalty = cam.diagonal();
  LossValue out;
  out.used = obs.points.size();
  for (std::size_t i = 0; i < obs.points.size(); ++i) {
    const double w = weights.weight(obs.points[i].class_id);
    const auto cur = project(obs.points[i].position, pose, cam);
    if (!cur) {
      out.loss += w * penalty;
      ++out.clamped;
      continue;
    }
    out.loss += w * std::hypot(cur->u - obs.targets[i].x(), cur->v - obs.targets[i].y());
  }
  return out;
}

CameraPose retract(const CameraPose& pose, const Vec6& delta) {
  return CameraPose(quat_from_rotation_vector(delta.tail<3>()) * pose.rotation(),
                    pose.translation() + delta.head<3>());
}

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

using Mat26 = Eigen::Matrix<double, 2, 6>;

// Jacobian of the pixel position w.r.t. the retraction increment.
Mat26 pixel_jacobian(const Vec3& x, const CameraPose& pose, const CameraModel& cam,
                     const Vec3& x_cam) {
  const Mat3 rt = pose.rotation_matrix().transpose();
  Eigen::Matrix<double, 3, 6> dxc;
  dxc.leftCols<3>() = -rt;
  dxc.rightCols<3>() = rt * skew(x - pose.translation());
  const double iz = 1.0 / x_cam.z();
  Eigen::Matrix<double, 2, 3> dpi;
  dpi << cam.fx * iz, 0.0, -cam.fx * x_cam.x() * iz * iz, 0.0, cam.fy * iz,
      -cam.fy * x_cam.y() * iz * iz;
  return dpi * dxc;
}

struct Linearization {
  Vec6 gradient = Vec6::Zero();
  Mat6 normal = Mat6::Zero();
};

Linearization linearize(const CameraPose& pose, const PoseObservation& obs,
                        const CameraModel& cam, const SemanticWeightTable& weights,
                        bool with_normal) {
  constexpr double kMinResidual = 1e-9;
  Linearization lin;
  for (std::size_t i = 0; i < obs.points.size(); ++i) {
    const Vec3& x = obs.points[i].position;
    const auto proj = project(x, pose, cam);
    if (!proj) continue;  // clamped points have a constant cost
    const Vec2 r(proj->u - obs.targets[i].x(), proj->v - obs.targets[i].y());
    const double n = r.norm();
    const double w = weights.weight(obs.points[i].class_id);
    if (w == 0.0) continue;
    const Mat26 j = pixel_jacobian(x, pose, cam, pose.world_to_camera(x));
    if (n > 0.0) lin.gradient += w * (j.transpose() * r) / n;
    if (with_normal) lin.normal += (w / std::max(n, kMinResidual)) * (j.transpose() * j);
  }
  return lin;
}

struct StartResult {
  CameraPose pose;
  double loss = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

StartResult descend(const CameraPose& start, const PoseObservation& obs, const CameraModel& cam,
                    const SemanticWeightTable& weights, const RefineOptions& opts) {
  StartResult res{start, observation_loss(start, obs, cam, weights).loss, 0, {}};
  res.history.push_back(res.loss);
  double damping = 1e-4;
  int increases = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (res.loss == 0.0) break;
    const Linearization lin = linearize(res.pose, obs, cam, weights, true);
    if (lin.gradient.isZero(0.0)) break;
    const double scale = std::max(lin.normal.trace() / 6.0, std::numeric_limits<double>::min());
    bool accepted = false;
    Vec6 step = Vec6::Zero();
    for (int attempt = 0; attempt < 12; ++attempt) {
      Mat6 a = lin.normal;
      a.diagonal() += damping * lin.normal.diagonal() + Vec6::Constant(1e-12 * scale);
      step = a.ldlt().solve(-lin.gradient);
      if (!step.allFinite()) {
        damping *= 10.0;
        continue;
      }
      const CameraPose cand = retract(res.pose, step);
      const double loss = observation_loss(cand, obs, cam, weights).loss;
      if (!std::isfinite(loss)) fail(ErrorCode::kDivergence, "pose loss became non-finite");
      if (loss < res.loss) {
        increases = 0;
        const double decrease = (res.loss - loss) / res.loss;
        res.pose = cand;
        res.loss = loss;
        res.history.push_back(loss);
        damping = std::max(damping * 0.1, 1e-9);
        accepted = true;
        if (decrease < opts.min_relative_decrease) it = opts.max_iterations;
        break;
      }
      damping *= 10.0;
    }
    ++res.iterations;
    if (!accepted) break;
    if (res.history.size() >= 2 && res.history.back() > res.history[res.history.size() - 2]) {
      if (++increases >= opts.patience) {
        fail(ErrorCode::kDivergence, "pose loss increased for too many consecutive steps");
      }
    }
    if (step.norm() < opts.min_step) break;
  }
  return res;
}

}  // namespace

Vec6 observation_loss_gradient(const CameraPose& pose, const PoseObservation& obs,
                               const CameraModel& cam, const SemanticWeightTable& weights) {
  return linearize(pose, obs, cam, weights, false).gradient;
}

RefineReport refine_pose(const CameraPose& coarse, const PoseObservation& obs,
                         const CameraModel& cam, const SemanticWeightTable& weights,
                         const RefineOptions& opts) {
  cam.validate();
  const double initial = observation_loss(coarse, obs, cam, weights).loss;

  std::vector<CameraPose> starts{coarse};
  if (opts.multi_start) {
    const double a = deg2rad(opts.jitter_deg);
    const std::array<Vec3, 4> axes{Vec3::UnitX(), Vec3(-Vec3::UnitX()), Vec3::UnitY(),
                                   Vec3(-Vec3::UnitY())};
    for (const Vec3& axis : axes) {
      // Camera-frame tilt (pitch / yaw) of the coarse orientation.
      starts.emplace_back(coarse.rotation() * Quat(Eigen::AngleAxisd(a, axis)),
                          coarse.translation());
    }
  }

  RefineReport report;
  report.pose = coarse;
  report.initial_loss = initial;
  report.final_loss = initial;
  report.loss_history = {initial};
  for (std::size_t s = 0; s < starts.size(); ++s) {
    StartResult r = descend(starts[s], obs, cam, weights, opts);
    if (r.loss < report.final_loss) {
      report.pose = r.pose;
      report.final_loss = r.loss;
      report.iterations = r.iterations;
      report.start_index = static_cast<int>(s);
      report.loss_history = std::move(r.history);
    }
    if (report.final_loss == 0.0) break;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Kalman

namespace {

double estimate_measurement_noise(const std::vector<PoseRecord>& stream, int frames) {
  const int m = std::min<int>(frames, static_cast<int>(stream.size()));
  if (m < 3) return 0.0;
  // Residual variance about a per-axis straight-line fit.
  double sum_sq = 0.0;
  const double kbar = (m - 1) / 2.0;
  double skk = 0.0;
  for (int k = 0; k < m; ++k) skk += (k - kbar) * (k - kbar);
  for (int axis = 0; axis < 3; ++axis) {
    double mean = 0.0;
    for (int k = 0; k < m; ++k) mean += stream[k].pose.translation()[axis];
    mean /= m;
    double skt = 0.0;
    for (int k = 0; k < m; ++k) skt += (k - kbar) * (stream[k].pose.translation()[axis] - mean);
    const double slope = skt / skk;
    for (int k = 0; k < m; ++k) {
      const double fit = mean + slope * (k - kbar);
      const double res = stream[k].pose.translation()[axis] - fit;
      sum_sq += res * res;
    }
  }
  return sum_sq / (3.0 * (m - 2));
}

}  // namespace

KalmanResult kalman_smooth(const std::vector<PoseRecord>& stream, double dt,
                           const KalmanOptions& opts) {
  if (stream.size() < 2) fail(ErrorCode::kInvalidArgument, "kalman_smooth needs at least 2 poses");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::kInvalidArgument, "dt must be positive");
  if (!(opts.process_noise >= 0.0)) fail(ErrorCode::kInvalidArgument, "process noise must be >= 0");
  for (const auto& r : stream) {
    if (!r.pose.translation().allFinite() || !r.pose.rotation().coeffs().allFinite()) {
      fail(ErrorCode::kNonFinite, "non-finite pose in stream");
    }
  }

  double rm = opts.measurement_noise;
  if (rm < 0.0) rm = estimate_measurement_noise(stream, opts.estimation_frames);
  rm = std::max(rm, opts.min_measurement_noise);
  const double q = opts.process_noise;

  const Mat3 I3 = Mat3::Identity();
  Mat6 F = Mat6::Identity();
  F.topRightCorner<3, 3>() = dt * I3;
  Mat6 Q;
  Q << (dt * dt * dt / 3.0) * I3, (dt * dt / 2.0) * I3, (dt * dt / 2.0) * I3, dt * I3;
  Q *= q;
  Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
  H.leftCols<3>() = I3;
  const Mat3 R = rm * I3;

  const std::size_t n = stream.size();
  Vec6 x;
  x.head<3>() = stream.front().pose.translation();
  x.tail<3>() = (stream.back().pose.translation() - stream.front().pose.translation()) /
                (static_cast<double>(n - 1) * dt);
  Mat6 P = Mat6::Zero();
  P.topLeftCorner<3, 3>() = rm * I3;
  P.bottomRightCorner<3, 3>() = (2.0 * rm / (dt * dt) + q * dt) * I3;

  KalmanResult out;
  out.measurement_noise = rm;
  out.poses.reserve(n);
  out.states.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      x = F * x;
      P = F * P * F.transpose() + Q;
    }
    const Vec3 z = stream[k].pose.translation();
    const Mat3 S = H * P * H.transpose() + R;
    const Eigen::Matrix<double, 6, 3> K = P * H.transpose() * S.inverse();
    x += K * (z - H * x);
    const Mat6 A = Mat6::Identity() - K * H;
    P = A * P * A.transpose() + K * R * K.transpose();  // Joseph form
    P = 0.5 * (P + P.transpose());
    out.states.push_back({x.head<3>(), x.tail<3>(), P});
    out.poses.push_back({stream[k].frame_id, CameraPose(stream[k].pose.rotation(), x.head<3>())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::kInvalidArgument, "median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

PoseStreamErrors evaluate_pose_stream(const std::vector<PoseRecord>& estimates,
                                      const std::vector<PoseRecord>& ground_truth) {
  if (estimates.size() != ground_truth.size()) {
    fail(ErrorCode::kLengthMismatch, "estimate and ground-truth streams differ in length");
  }
  if (estimates.empty()) fail(ErrorCode::kInvalidArgument, "empty pose streams");
  PoseStreamErrors out;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].frame_id != ground_truth[i].frame_id) {
      fail(ErrorCode::kInvalidArgument,
           "frame id mismatch at position " + std::to_string(i) + ": " +
               std::to_string(estimates[i].frame_id) + " vs " +
               std::to_string(ground_truth[i].frame_id));
    }
    out.translation.push_back(
        (estimates[i].pose.translation() - ground_truth[i].pose.translation()).norm());
    out.rotation.push_back(rotation_angle_deg(estimates[i].pose, ground_truth[i].pose));
  }
  out.median_translation = median(out.translation);
  out.median_rotation = median(out.rotation);
  return out;
}

}  // namespace semloc
