// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any of them fails.

#include "oracles.hpp"
#include "semloc/fusion.hpp"
#include "semloc/localization.hpp"
#include "semloc/metrics.hpp"
#include "semloc/pipeline.hpp"
#include "semloc/renderer.hpp"
#include "semloc/road_prior.hpp"
#include "semloc/scene.hpp"
#include "semloc/semantic_map.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace semloc;
namespace fs = std::filesystem;

namespace {

// Tolerances and bands.
constexpr int kNoiseFrames = 10000;
constexpr double kNoiseTransLo = 3.20, kNoiseTransHi = 3.70;
constexpr double kNoiseRotLo = 6.7, kNoiseRotHi = 9.0;
constexpr double kNoiseSeconds = 10.0;
constexpr std::size_t kOracleSubsetMax = 1000;
constexpr double kRemovalSeconds = 30.0;
constexpr double kSplatTol = 1e-9;
constexpr double kCoverageMin = 0.98;
constexpr double kRoadRange = 20.0;
constexpr int kRefineTrials = 100;
constexpr double kRefineTrans = 0.1, kRefineRot = 0.1, kConvergedMin = 0.95;
constexpr double kGradientTol = 1e-4;
constexpr double kRefineSeconds = 120.0;
constexpr double kKalmanReduction = 0.20;
constexpr double kPsdTol = 1e-9;
constexpr double kMetricTol = 1e-12;

const CameraModel kCam(300, 300, 152, 128, 304, 256);

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome noise_floor() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PoseRecord> gt;
  for (int i = 0; i < kNoiseFrames; ++i) {
    gt.push_back({i, CameraPose(look_along(Vec3::UnitX()), Vec3(0.1 * i, 0, 1.5))});
  }
  const auto noisy = perturb_stream(gt, NoiseModel{7.5, 15.0, 2024});
  const auto e = evaluate_pose_stream(noisy, gt);
  const double secs = seconds_since(t0);
  const bool t_ok = e.median_translation >= kNoiseTransLo && e.median_translation <= kNoiseTransHi;
  const bool r_ok = e.median_rotation >= kNoiseRotLo && e.median_rotation <= kNoiseRotHi;
  return {t_ok && r_ok && secs < kNoiseSeconds,
          fmt("median translation %.4f m (band [3.20, 3.70]), rotation %.4f deg (band [6.7, 9.0]), "
              "%.2f s",
              e.median_translation, e.median_rotation, secs)};
}

// 2 ---------------------------------------------------------------------------

Outcome moving_removal(const Scene& scene) {
  std::size_t total = 0;
  for (const auto& r : scene.rounds) total += r.size();
  const auto t0 = std::chrono::steady_clock::now();
  const auto keep = moving_keep_mask(scene.rounds);
  const double secs = seconds_since(t0);
  std::size_t transients = 0, transients_removed = 0, statics = 0, statics_removed = 0, g = 0;
  for (std::size_t r = 0; r < scene.rounds.size(); ++r) {
    for (const auto& tag : scene.membership[r]) {
      const bool removed = !keep[g++];
      if (tag.transient) {
        ++transients;
        transients_removed += removed;
      } else {
        ++statics;
        statics_removed += removed;
      }
    }
  }

  // Oracle comparison on local crops: one around a transient, others random.
  Rng rng(77);
  std::vector<Vec3> centres;
  const int tr = scene.first_transient_round();
  const auto trans = scene.transients_in(tr);
  if (!trans.empty()) centres.push_back(trans[trans.size() / 2].position);
  for (int i = 0; i < 9; ++i) {
    const auto& round0 = scene.rounds[0];
    centres.push_back(round0[rng.below(round0.size())].position);
  }
  int oracle_ok = 0;
  for (const Vec3& c : centres) {
    std::vector<SemanticPointCloud> crop;
    std::vector<std::vector<Vec3>> crop_pos;
    double half = 0.4;
    for (;;) {
      crop.clear();
      crop_pos.clear();
      std::size_t n = 0;
      for (std::size_t r = 0; r < scene.rounds.size(); ++r) {
        std::vector<SemanticPoint> pts;
        for (const auto& p : scene.rounds[r].points()) {
          if (((p.position - c).array().abs() < half).all()) pts.push_back(p);
        }
        n += pts.size();
        crop.emplace_back(pts);
        crop_pos.push_back(crop.back().positions());
      }
      if (n <= kOracleSubsetMax) break;
      half *= 0.8;
    }
    oracle_ok += moving_keep_mask(crop) == oracle::moving_keep(crop_pos, 0.6, 0.025);
  }

  // Timing at 1e5 points: an equal prefix of every round.
  std::vector<SemanticPointCloud> sub;
  std::size_t sub_n = 0;
  for (const auto& r : scene.rounds) {
    std::vector<SemanticPoint> pts(r.points().begin(),
                                   r.points().begin() + std::min<std::size_t>(r.size(), 100000 / scene.rounds.size()));
    sub_n += pts.size();
    sub.emplace_back(pts);
  }
  const auto t1 = std::chrono::steady_clock::now();
  moving_keep_mask(sub);
  const double sub_secs = seconds_since(t1);

  const bool pass = transients_removed == transients && statics_removed == 0 &&
                    oracle_ok == static_cast<int>(centres.size()) && sub_secs < kRemovalSeconds;
  return {pass, fmt("transient recall %.4f, static false-removal %.6f, ", static_cast<double>(transients_removed) / transients,
                    static_cast<double>(statics_removed) / statics) +
                    fmt("oracle crops %.0f/%.0f, %.3f s at 1e5 points", oracle_ok, static_cast<double>(centres.size()), sub_secs) +
                    fmt(" (%.2f s for %.0f points)", secs, static_cast<double>(total))};
}

// 3 ---------------------------------------------------------------------------

Outcome splat_sizes() {
  double worst = 0.0;
  bool clamped = true, ends = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(500 + seed);
    const auto pts = oracle::random_points(rng, 2000, Vec3(-30, -10, 0), Vec3(30, 10, 6), {1, 9, 10, 14, 15, 20, 21});
    std::vector<CameraPose> poses;
    for (int i = 0; i < 25; ++i) {
      poses.emplace_back(look_along(Vec3::UnitX()), Vec3(rng.uniform(-30, 30), rng.uniform(-2, 2), 1.5));
    }
    std::map<std::uint16_t, std::pair<double, double>> acc;
    for (const auto& p : pts) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : poses) best = std::min(best, (p.position - c.translation()).norm());
      acc[p.class_id].first += best;
      acc[p.class_id].second += 1;
    }
    const SemanticPointCloud cloud(pts);
    const auto means = class_mean_min_distance(cloud, poses);
    for (const auto& [c, sc] : acc) worst = std::max(worst, std::abs(means.at(c) - sc.first / sc.second));
    const auto cfg = compute_splat_sizes(cloud, poses, 0.025, 0.05);
    double lo = 1, hi = 0;
    for (const auto& [c, s] : cfg.class_size) {
      clamped = clamped && s >= 0.025 && s <= 0.05;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    ends = ends && lo == 0.025 && hi == 0.05;
  }
  return {worst <= kSplatTol && clamped && ends,
          fmt("max |mean-min-distance - brute force| %.3g, sizes within [0.025, 0.05]: ", worst) +
              (clamped && ends ? "yes" : "no")};
}

// 4 ---------------------------------------------------------------------------

Outcome renderer() {
  int identical = 0;
  const CameraModel cam(60, 60, 32, 32, 64, 64);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(900 + seed);
    std::vector<SemanticPoint> pts(300);
    for (auto& p : pts) {
      const double z = rng.uniform(0.5, 10.0);
      p.position = Vec3(rng.uniform(-0.6, 0.6) * z, rng.uniform(-0.6, 0.6) * z, z);
      p.class_id = static_cast<std::uint16_t>(1 + rng.below(6));
    }
    SplatConfig splat;
    for (std::uint16_t c = 1; c <= 6; ++c) splat.class_size[c] = 0.025 + 0.005 * c;
    const auto got = render(SemanticPointCloud(pts), CameraPose(), cam, splat);
    const auto want = oracle::render(pts, CameraPose(), cam, splat.class_size, splat.min_size);
    identical += got.labels == want.labels && got.depth == want.depth;
  }

  // Road-only street sampled at the default spacing, viewed from the lane.
  SceneSpec s = SceneSpec::standard();
  s.rounds = 1;
  s.transients = 0;
  s.transient_rounds = 0;
  s.road_spacing = 0.025;
  s.sidewalk_width = 0.0;
  s.buildings_per_side = 0;
  s.poles = s.traffic_lights = s.traffic_signs = s.trees = s.parked_cars = 0;
  const Scene scene = generate_scene(s);
  const double hw = 0.5 * s.road_width;
  std::size_t region = 0, covered = 0;
  for (const auto& rec : scene.gt_poses) {
    const CameraPose& pose = rec.pose;
    if (pose.translation().x() + kRoadRange > s.road_length - 0.2) continue;
    const auto rr = render(scene.rounds[0], pose, kCam, SplatConfig{});
    const Mat3 rot = pose.rotation_matrix();
    for (int y = 0; y < kCam.height; ++y) {
      for (int x = 0; x < kCam.width; ++x) {
        const Vec3 ray = rot * Vec3((x + 0.5 - kCam.cx) / kCam.fx, (y + 0.5 - kCam.cy) / kCam.fy, 1.0);
        if (ray.z() >= 0) continue;
        const double lambda = -pose.translation().z() / ray.z();
        const Vec3 hit = pose.translation() + lambda * ray;
        if ((hit - pose.translation()).norm() > kRoadRange) continue;
        if (std::abs(hit.y()) > hw - 0.2 || hit.x() < 0.2 || hit.x() > s.road_length - 0.2) continue;
        ++region;
        covered += rr.labels.at(x, y) != kIgnoreLabel;
      }
    }
  }
  const double cov = region ? static_cast<double>(covered) / static_cast<double>(region) : 0.0;
  return {identical == 20 && cov >= kCoverageMin,
          fmt("oracle-identical %.0f/20, road coverage within 20 m %.4f (min 0.98)", identical, cov)};
}

// 5 ---------------------------------------------------------------------------

Outcome road_prior() {
  int matched = 0;
  bool on_road = true, idempotent = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(300 + seed);
    std::vector<std::uint8_t> mask(64 * 64, 0);
    for (auto& v : mask) v = rng.uniform() < 0.03 ? 1 : 0;
    mask[rng.below(mask.size())] = 1;
    const auto f = RoadOffsetField::from_mask(Vec2(-1.6, 0.4), 0.05, 64, 64, mask);
    const auto want = oracle::nearest_road(64, 64, mask);
    bool same = true;
    for (int r = 0; r < 64; ++r) {
      for (int c = 0; c < 64; ++c) same = same && f.nearest(c, r) == want[static_cast<std::size_t>(r) * 64 + c];
    }
    matched += same;
    for (int q = 0; q < 100; ++q) {
      const Vec3 t(rng.uniform(-1.8, 1.8), rng.uniform(0.2, 3.8), 1.5);
      const Vec3 out = rectify_translation(t, f);
      const auto [c, r] = f.raw_cell_of(out.x(), out.y());
      on_road = on_road && c >= 0 && r >= 0 && c < 64 && r < 64 && f.is_road(static_cast<int>(c), static_cast<int>(r));
      idempotent = idempotent && rectify_translation(out, f) == out;
    }
  }
  return {matched == 10 && on_road && idempotent,
          fmt("chamfer-oracle match %.0f/10 masks; 1000 queries on road: ", matched) +
              (on_road ? "yes" : "no") + ", idempotent: " + (idempotent ? "yes" : "no")};
}

// 6 ---------------------------------------------------------------------------

Outcome refinement() {
  const auto t0 = std::chrono::steady_clock::now();
  const SceneSpec spec = SceneSpec::standard();
  const Scene scene = generate_scene(spec);
  const auto map = deduplicate(remove_moving(scene.rounds));
  std::vector<CameraPose> poses;
  for (const auto& p : scene.gt_poses) poses.push_back(p.pose);
  const auto splat = compute_splat_sizes(map, poses);
  const auto field = build_offset_field(map);
  const auto weights = SemanticWeightTable::defaults();
  std::vector<double> te, re;
  int converged = 0;
  double worst_grad = 0.0;
  for (int k = 0; k < kRefineTrials; ++k) {
    const CameraPose& gt = poses[static_cast<std::size_t>(k) % poses.size()];
    const auto rr = render(map, gt, kCam, splat);
    const auto obs = make_observation(rr.depth, rr.labels, gt, kCam, 4);
    const CameraPose coarse = perturb(gt, NoiseModel{7.5, 15.0, static_cast<std::uint64_t>(1000 + k)});
    const CameraPose rect(coarse.rotation(), rectify_translation(coarse.translation(), field));
    const auto rep = refine_pose(rect, obs, kCam, weights);
    te.push_back((rep.pose.translation() - gt.translation()).norm());
    re.push_back(rotation_angle_deg(rep.pose.rotation(), gt.rotation()));
    converged += te.back() < kRefineTrans && re.back() < kRefineRot;

    if (k < 10) {
      // Gradient check near the optimum, where no point leaves the view.
      Rng rng(40 + k);
      Vec6 d;
      for (int i = 0; i < 3; ++i) d[i] = rng.uniform(-0.1, 0.1);
      for (int i = 3; i < 6; ++i) d[i] = rng.uniform(-0.01, 0.01);
      const CameraPose at = retract(gt, d);
      const Vec6 g = observation_loss_gradient(at, obs, kCam, weights);
      for (int i = 0; i < 6; ++i) {
        Vec6 e = Vec6::Zero();
        e[i] = 1e-6;
        const double fd = (observation_loss(retract(at, e), obs, kCam, weights).loss -
                           observation_loss(retract(at, -e), obs, kCam, weights).loss) /
                          2e-6;
        worst_grad = std::max(worst_grad, std::abs(fd - g[i]) / std::max(1.0, std::abs(fd)));
      }
    }
  }
  const double secs = seconds_since(t0);
  const double mt = median(te), mr = median(re);
  const double rate = static_cast<double>(converged) / kRefineTrials;
  return {mt < kRefineTrans && mr < kRefineRot && rate >= kConvergedMin && worst_grad < kGradientTol &&
              secs < kRefineSeconds,
          fmt("median %.3g m / %.3g deg, converged %.2f, gradient rel. error %.3g", mt, mr, rate, worst_grad) +
              fmt(", %.1f s", secs)};
}

// 7 ---------------------------------------------------------------------------

Outcome kalman() {
  double worst_reduction = 1.0, worst_eig = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Vec3 v(rng.uniform(5, 15), rng.uniform(-1, 1), 0);
    std::vector<PoseRecord> truth, noisy;
    for (int i = 0; i < 200; ++i) {
      const Vec3 t = Vec3(0, 0, 1.5) + v * (0.1 * i);
      truth.push_back({i, CameraPose(Quat::Identity(), t)});
      noisy.push_back({i, CameraPose(Quat::Identity(), t + Vec3(rng.normal(), rng.normal(), rng.normal()))});
    }
    const auto res = kalman_smooth(noisy, 0.1);
    double raw = 0, filt = 0;
    for (int i = 0; i < 200; ++i) {
      raw += (noisy[i].pose.translation() - truth[i].pose.translation()).squaredNorm();
      filt += (res.poses[i].pose.translation() - truth[i].pose.translation()).squaredNorm();
    }
    worst_reduction = std::min(worst_reduction, 1.0 - std::sqrt(filt / raw));
    for (const auto& s : res.states) {
      const Eigen::SelfAdjointEigenSolver<Mat6> es(s.covariance);
      worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff());
    }
  }
  return {worst_reduction >= kKalmanReduction && worst_eig >= -kPsdTol,
          fmt("smallest RMSE reduction over 50 seeds %.3f (min 0.20), smallest covariance eigenvalue %.3g",
              worst_reduction, worst_eig)};
}

// 8 ---------------------------------------------------------------------------

BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BinaryMask m(w, h, 0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.at(x, y) = 1;
  }
  return m;
}

Outcome metrics() {
  // Half of each of two classes swapped: IoU 1/3 for both.
  LabelMap gt(4, 1, 1), pred(4, 1, 1);
  gt.at(2, 0) = gt.at(3, 0) = 2;
  pred.at(1, 0) = 2;
  pred.at(3, 0) = 2;
  ConfusionMatrix conf;
  accumulate(conf, gt, pred);
  const auto s = summarize(conf);
  const bool swap_ok = std::abs(s.mean_iou - 1.0 / 3.0) < kMetricTol && std::abs(s.pixel_accuracy - 0.5) < kMetricTol;

  // 255 in ground truth is never counted, whatever the prediction.
  LabelMap gi(3, 1, 9), pi(3, 1, 9);
  gi.at(0, 0) = kIgnoreLabel;
  pi.at(0, 0) = 4;
  ConfusionMatrix ci;
  accumulate(ci, gi, pi);
  const auto si = summarize(ci);
  const bool ignore_ok = ci.total() == 2 && si.mean_iou == 1.0 && si.classes.size() == 1;

  int ap_ok = 0;
  for (std::uint64_t c = 0; c < 10; ++c) {
    Rng rng(60 + c);
    std::vector<InstanceGroundTruth> gts;
    std::vector<InstancePrediction> preds;
    const int n = 2 + static_cast<int>(c % 4);
    for (int i = 0; i < n; ++i) {
      const int x = 4 * i, y = static_cast<int>(rng.below(16));
      gts.push_back({rect_mask(40, 32, x, y, x + 6 + i % 3, y + 8), static_cast<std::uint16_t>(1 + i % 2)});
    }
    for (int i = 0; i < n + 2; ++i) {
      const int x = static_cast<int>(rng.below(30)), y = static_cast<int>(rng.below(20));
      preds.push_back({rect_mask(40, 32, x, y, x + 6, y + 8), static_cast<std::uint16_t>(1 + rng.below(2)),
                       std::round(rng.uniform() * 4) / 4});
    }
    // Near-copies of two ground truths so some thresholds match.
    preds.push_back({gts[0].mask, gts[0].class_id, 0.9});
    BinaryMask shifted = gts[1].mask;
    for (int y = 0; y < 32; ++y) shifted.at(39, y) = 1;
    preds.push_back({shifted, gts[1].class_id, 0.7});

    double want = 0.0;
    std::set<std::uint16_t> classes;
    for (const auto& g : gts) classes.insert(g.class_id);
    for (auto cls : classes) {
      double ap = 0.0;
      for (double t : coco_iou_thresholds()) ap += oracle::average_precision(preds, gts, cls, t);
      want += ap / 10.0;
    }
    want /= static_cast<double>(classes.size());
    ap_ok += std::abs(instance_ap(preds, gts).mean_ap - want) < kMetricTol;
  }
  return {swap_ok && ignore_ok && ap_ok == 10,
          fmt("half-swap mIoU %.6f (1/3), 255 ignored: ", s.mean_iou) + (ignore_ok ? "yes" : "no") +
              fmt(", instance AP oracle cases %.0f/10", ap_ok)};
}

// 9 ---------------------------------------------------------------------------

Outcome fusion() {
  const ClassRegistry reg = ClassRegistry::builtin();
  int equal = 0;
  bool movable_kept = true;
  const std::vector<std::uint16_t> palette = {1, 2, 4, 6, 9, 10, 15, 17, 20, 21, 255};
  const std::vector<std::uint16_t> movable = {1, 2, 3, 4, 5, 6, 7, 8};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const int w = 8 + static_cast<int>(rng.below(12)), h = 6 + static_cast<int>(rng.below(10));
    LabelMap rendered(w, h, 0), background(w, h, 0);
    for (std::size_t i = 0; i < rendered.size(); ++i) {
      rendered[i] = palette[rng.below(palette.size())];
      background[i] = palette[rng.below(palette.size())];
    }
    std::vector<ObjectMask> objs(rng.below(5));
    for (auto& o : objs) {
      o.class_id = movable[rng.below(movable.size())];
      o.confidence = std::round(rng.uniform(0.7, 1.0) * 20) / 20;
      o.pixels = BinaryMask(w, h, 0);
      for (std::size_t i = 0; i < o.pixels.size(); ++i) o.pixels[i] = rng.uniform() < 0.4;
    }
    const auto out = fuse(rendered, background, objs, reg, 0.9);
    equal += out.labels == oracle::fuse(rendered, background, objs, reg, 0.9);
    for (std::size_t i = 0; i < rendered.size(); ++i) {
      if (rendered[i] != kIgnoreLabel && reg.is_movable(rendered[i])) {
        movable_kept = movable_kept && out.labels[i] == rendered[i];
      }
    }
  }
  return {equal == 1000 && movable_kept,
          fmt("oracle-equal %.0f/1000, rendered movable pixels preserved: ", equal) +
              (movable_kept ? "yes" : "no")};
}

// 10 --------------------------------------------------------------------------

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t differing_files(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::size_t diff = 0;
  files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ++files;
    if (!fs::exists(b / rel) || read_all(e.path()) != read_all(b / rel)) ++diff;
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file() && !fs::exists(a / fs::relative(e.path(), b))) ++diff;
  }
  return diff;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "semloc_acceptance_determinism";
  fs::remove_all(root);
  PipelineConfig c;
  c.seed = 11;
  c.threads = 1;
  c.out_dir = (root / "a").string();
  const auto ra = run_pipeline(c);
  c.out_dir = (root / "b").string();
  const auto rb = run_pipeline(c);
  c.out_dir = (root / "t8").string();
  c.threads = 8;
  const auto rc = run_pipeline(c);
  if (ra.code != StageCode::kOk || rb.code != StageCode::kOk || rc.code != StageCode::kOk) {
    return {false, "pipeline failed: " + ra.message + rb.message + rc.message};
  }
  std::size_t files_ab = 0, files_t = 0;
  const std::size_t d_ab = differing_files(root / "a", root / "b", files_ab);
  const std::size_t d_t = differing_files(root / "a", root / "t8", files_t);
  fs::remove_all(root);
  return {d_ab == 0 && d_t == 0 && files_ab > 0,
          fmt("repeat run: %.0f of %.0f files differ; threads 1 vs 8: %.0f of %.0f differ",
              static_cast<double>(d_ab), static_cast<double>(files_ab), static_cast<double>(d_t),
              static_cast<double>(files_t))};
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  const Scene standard = generate_scene(SceneSpec::standard());
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"noise floor", noise_floor},
      {"moving-object removal", [&] { return moving_removal(standard); }},
      {"splat sizes", splat_sizes},
      {"renderer", renderer},
      {"road prior", road_prior},
      {"pose refinement", refinement},
      {"kalman baseline", kalman},
      {"metrics", metrics},
      {"fusion", fusion},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Outcome o = guarded(criteria[i].second);
    failed += !o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
