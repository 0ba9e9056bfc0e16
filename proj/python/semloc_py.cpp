#include "semloc/class_registry.hpp"
#include "semloc/error.hpp"
#include "semloc/fusion.hpp"
#include "semloc/io.hpp"
#include "semloc/localization.hpp"
#include "semloc/metrics.hpp"
#include "semloc/pipeline.hpp"
#include "semloc/renderer.hpp"
#include "semloc/road_prior.hpp"
#include "semloc/scene.hpp"
#include "semloc/semantic_map.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace py = pybind11;
using namespace semloc;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U16 = py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// Poses cross the boundary as 7-vectors (tx, ty, tz, qw, qx, qy, qz).
CameraPose pose_from(const std::vector<double>& v) {
  if (v.size() != 7) throw py::value_error("pose must be (tx, ty, tz, qw, qx, qy, qz)");
  return CameraPose(Quat(v[3], v[4], v[5], v[6]), Vec3(v[0], v[1], v[2]));
}

std::vector<double> pose_to(const CameraPose& p) {
  const auto& q = p.rotation();
  const auto& t = p.translation();
  return {t.x(), t.y(), t.z(), q.w(), q.x(), q.y(), q.z()};
}

CameraModel camera_from(const std::vector<double>& c) {
  if (c.size() != 6) throw py::value_error("camera must be (fx, fy, cx, cy, width, height)");
  return CameraModel(c[0], c[1], c[2], c[3], static_cast<int>(c[4]), static_cast<int>(c[5]));
}

// Points as parallel arrays: xyz (N, 3), class ids (N,), optional round (N,).
std::vector<SemanticPoint> points_from(const F64& xyz, const U16& cls,
                                       const std::optional<U16>& rounds = std::nullopt) {
  if (xyz.ndim() != 2 || xyz.shape(1) != 3) throw py::value_error("xyz must have shape (N, 3)");
  const auto n = static_cast<std::size_t>(xyz.shape(0));
  if (static_cast<std::size_t>(cls.size()) != n) throw py::value_error("class array length differs from xyz");
  if (rounds && static_cast<std::size_t>(rounds->size()) != n) {
    throw py::value_error("round array length differs from xyz");
  }
  std::vector<SemanticPoint> pts(n);
  const double* p = xyz.data();
  for (std::size_t i = 0; i < n; ++i) {
    pts[i].position = Vec3(p[3 * i], p[3 * i + 1], p[3 * i + 2]);
    pts[i].class_id = cls.data()[i];
    if (rounds) pts[i].round = rounds->data()[i];
  }
  return pts;
}

py::dict points_to(const std::vector<SemanticPoint>& pts) {
  const auto n = static_cast<py::ssize_t>(pts.size());
  F64 xyz({n, static_cast<py::ssize_t>(3)});
  U16 cls(n), rnd(n);
  py::array_t<float> inten(n);
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& p = pts[static_cast<std::size_t>(i)];
    for (int k = 0; k < 3; ++k) xyz.mutable_data()[3 * i + k] = p.position[k];
    cls.mutable_data()[i] = p.class_id;
    rnd.mutable_data()[i] = p.round;
    inten.mutable_data()[i] = p.intensity;
  }
  py::dict d;
  d["xyz"] = xyz;
  d["class_id"] = cls;
  d["intensity"] = inten;
  d["round"] = rnd;
  return d;
}

template <typename T, typename A>
Raster<T> raster_from(const A& a) {
  if (a.ndim() != 2) throw py::value_error("raster must be 2-D");
  Raster<T> r(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), T{});
  std::copy(a.data(), a.data() + a.size(), r.data().begin());
  return r;
}

template <typename T>
py::array_t<T> raster_to(const Raster<T>& r) {
  py::array_t<T> a({static_cast<py::ssize_t>(r.height()), static_cast<py::ssize_t>(r.width())});
  std::copy(r.data().begin(), r.data().end(), a.mutable_data());
  return a;
}

std::vector<SemanticPointCloud> split_rounds(const std::vector<SemanticPoint>& pts) {
  return split_by_round(SemanticPointCloud(pts));
}

}  // namespace

PYBIND11_MODULE(_semloc, m) {
  m.doc() = "Semantic map localization and labeling toolkit";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("project",
        [](const std::vector<double>& x, const std::vector<double>& pose, const std::vector<double>& cam)
            -> std::optional<std::tuple<double, double, double>> {
          if (x.size() != 3) throw py::value_error("point must have 3 coordinates");
          const auto p = project(Vec3(x[0], x[1], x[2]), pose_from(pose), camera_from(cam));
          if (!p) return std::nullopt;
          return std::make_tuple(p->u, p->v, p->depth);
        },
        py::arg("point"), py::arg("pose"), py::arg("camera"),
        "Pixel (u, v, depth) of a world point, or None when out of view.");

  m.def("rotation_angle_deg",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          return rotation_angle_deg(pose_from(a).rotation(), pose_from(b).rotation());
        },
        py::arg("pose_a"), py::arg("pose_b"));

  m.def("remove_moving",
        [](const F64& xyz, const U16& cls, const U16& rounds, double min_support, double match_radius,
           unsigned threads) {
          const auto pts = points_from(xyz, cls, rounds);
          MovingRemovalParams params{min_support, match_radius, threads};
          const auto by_round = split_rounds(pts);
          const auto keep = moving_keep_mask(by_round, params);
          // Mask back in input order.
          std::vector<std::size_t> offset(by_round.size() + 1, 0);
          for (std::size_t r = 0; r < by_round.size(); ++r) offset[r + 1] = offset[r] + by_round[r].size();
          std::vector<std::size_t> seen(by_round.size(), 0);
          py::array_t<bool> out(static_cast<py::ssize_t>(pts.size()));
          for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto r = pts[i].round;
            out.mutable_data()[i] = keep[offset[r] + seen[r]++];
          }
          return out;
        },
        py::arg("xyz"), py::arg("class_id"), py::arg("round"), py::arg("min_support") = 0.6,
        py::arg("match_radius") = 0.025, py::arg("threads") = 1,
        "Keep mask of the multi-round consistency filter, in input order.");

  m.def("render",
        [](const F64& xyz, const U16& cls, const std::vector<double>& pose, const std::vector<double>& cam,
           const std::map<std::uint16_t, double>& class_size, double min_size, double max_size,
           unsigned threads) {
          SplatConfig splat;
          splat.min_size = min_size;
          splat.max_size = max_size;
          splat.class_size = class_size;
          const auto r = render(SemanticPointCloud(points_from(xyz, cls)), pose_from(pose),
                                camera_from(cam), splat, threads);
          return py::make_tuple(raster_to(r.labels), raster_to(r.depth));
        },
        py::arg("xyz"), py::arg("class_id"), py::arg("pose"), py::arg("camera"),
        py::arg("class_size") = std::map<std::uint16_t, double>{}, py::arg("min_size") = 0.025,
        py::arg("max_size") = 0.05, py::arg("threads") = 1,
        "Z-buffered splat render; returns (labels uint16 HxW, depth float64 HxW).");

  m.def("splat_sizes",
        [](const F64& xyz, const U16& cls, const std::vector<std::vector<double>>& poses, double lo,
           double hi) {
          std::vector<CameraPose> ps;
          for (const auto& p : poses) ps.push_back(pose_from(p));
          return compute_splat_sizes(SemanticPointCloud(points_from(xyz, cls)), ps, lo, hi).class_size;
        },
        py::arg("xyz"), py::arg("class_id"), py::arg("poses"), py::arg("min_size") = 0.025,
        py::arg("max_size") = 0.05);

  py::class_<RoadOffsetField>(m, "RoadField")
      .def_static(
          "from_points",
          [](const F64& xyz, const U16& cls, double resolution, const std::set<std::uint16_t>& road) {
            RoadFieldParams params;
            params.resolution = resolution;
            params.road_classes = road;
            return build_offset_field(SemanticPointCloud(points_from(xyz, cls)), params);
          },
          py::arg("xyz"), py::arg("class_id"), py::arg("resolution") = 0.05,
          py::arg("road_classes") = std::set<std::uint16_t>{9, 10})
      .def_static(
          "from_mask",
          [](const U8& mask, std::pair<double, double> origin, double resolution) {
            const auto r = raster_from<std::uint8_t>(mask);
            return RoadOffsetField::from_mask(Vec2(origin.first, origin.second), resolution, r.width(),
                                              r.height(), r.data());
          },
          py::arg("mask"), py::arg("origin") = std::make_pair(0.0, 0.0), py::arg("resolution") = 0.05)
      .def_static("load", &RoadOffsetField::load_file)
      .def("save", &RoadOffsetField::save_file)
      .def_property_readonly("shape", [](const RoadOffsetField& f) { return py::make_tuple(f.height(), f.width()); })
      .def_property_readonly("resolution", &RoadOffsetField::resolution)
      .def("rectify",
           [](const RoadOffsetField& f, const std::vector<double>& t) {
             if (t.size() != 3) throw py::value_error("translation must have 3 coordinates");
             const Vec3 out = rectify_translation(Vec3(t[0], t[1], t[2]), f);
             return std::make_tuple(out.x(), out.y(), out.z());
           },
           py::arg("translation"));

  m.def("perturb",
        [](const std::vector<std::vector<double>>& poses, double trans_max, double rot_max, std::uint64_t seed) {
          std::vector<PoseRecord> recs;
          for (std::size_t i = 0; i < poses.size(); ++i) {
            recs.push_back({static_cast<std::int64_t>(i), pose_from(poses[i])});
          }
          std::vector<std::vector<double>> out;
          for (const auto& r : perturb_stream(recs, NoiseModel{trans_max, rot_max, seed})) out.push_back(pose_to(r.pose));
          return out;
        },
        py::arg("poses"), py::arg("trans_max") = 7.5, py::arg("rot_max") = 15.0, py::arg("seed") = 0);

  m.def("refine",
        [](const std::vector<double>& coarse, const std::vector<double>& gt, const F64& depth,
           const U16& labels, const std::vector<double>& cam, int stride, int max_iterations) {
          const CameraModel c = camera_from(cam);
          const auto obs = make_observation(raster_from<double>(depth), raster_from<std::uint16_t>(labels),
                                            pose_from(gt), c, stride);
          RefineOptions opts;
          opts.max_iterations = max_iterations;
          const auto rep = refine_pose(pose_from(coarse), obs, c, SemanticWeightTable::defaults(), opts);
          py::dict d;
          d["pose"] = pose_to(rep.pose);
          d["initial_loss"] = rep.initial_loss;
          d["final_loss"] = rep.final_loss;
          d["iterations"] = rep.iterations;
          return d;
        },
        py::arg("coarse"), py::arg("gt"), py::arg("depth"), py::arg("labels"), py::arg("camera"),
        py::arg("stride") = 4, py::arg("max_iterations") = 100,
        "Refines `coarse` against the observation rendered at `gt`.");

  m.def("kalman_smooth",
        [](const F64& translations, double dt, double process_noise, double measurement_noise) {
          if (translations.ndim() != 2 || translations.shape(1) != 3) {
            throw py::value_error("translations must have shape (N, 3)");
          }
          std::vector<PoseRecord> recs;
          const double* p = translations.data();
          for (py::ssize_t i = 0; i < translations.shape(0); ++i) {
            recs.push_back({i, CameraPose(Quat::Identity(), Vec3(p[3 * i], p[3 * i + 1], p[3 * i + 2]))});
          }
          KalmanOptions opts;
          opts.process_noise = process_noise;
          opts.measurement_noise = measurement_noise;
          const auto res = kalman_smooth(recs, dt, opts);
          F64 out({translations.shape(0), static_cast<py::ssize_t>(3)});
          for (std::size_t i = 0; i < res.poses.size(); ++i) {
            for (int k = 0; k < 3; ++k) out.mutable_data()[3 * i + k] = res.poses[i].pose.translation()[k];
          }
          return out;
        },
        py::arg("translations"), py::arg("dt") = 0.1, py::arg("process_noise") = 0.1,
        py::arg("measurement_noise") = -1.0);

  m.def("fuse",
        [](const U16& rendered, const U16& background,
           const std::vector<std::tuple<std::uint16_t, U8, double>>& objects, double min_confidence) {
          std::vector<ObjectMask> objs;
          for (const auto& [cls, mask, conf] : objects) objs.push_back({cls, raster_from<std::uint8_t>(mask), conf});
          const auto res = fuse(raster_from<std::uint16_t>(rendered), raster_from<std::uint16_t>(background),
                                objs, ClassRegistry::builtin(), min_confidence);
          return raster_to(res.labels);
        },
        py::arg("rendered"), py::arg("background"), py::arg("objects") = std::vector<std::tuple<std::uint16_t, U8, double>>{},
        py::arg("min_confidence") = 0.9,
        "Objects are (class_id, mask HxW, confidence) triples.");

  m.def("segmentation_scores",
        [](const U16& gt, const U16& pred) {
          ConfusionMatrix conf;
          accumulate(conf, raster_from<std::uint16_t>(gt), raster_from<std::uint16_t>(pred));
          const auto s = summarize(conf);
          py::dict d;
          d["pixel_accuracy"] = s.pixel_accuracy;
          d["mean_accuracy"] = s.mean_accuracy;
          d["mean_iou"] = s.mean_iou;
          py::dict per;
          for (const auto& c : s.classes) per[py::int_(c.class_id)] = py::make_tuple(c.accuracy, c.iou);
          d["classes"] = per;
          return d;
        },
        py::arg("gt"), py::arg("pred"));

  m.def("instance_ap",
        [](const std::vector<std::tuple<U8, std::uint16_t, double>>& preds,
           const std::vector<std::tuple<U8, std::uint16_t>>& gts) {
          std::vector<InstancePrediction> p;
          std::vector<InstanceGroundTruth> g;
          for (const auto& [mask, cls, score] : preds) p.push_back({raster_from<std::uint8_t>(mask), cls, score});
          for (const auto& [mask, cls] : gts) g.push_back({raster_from<std::uint8_t>(mask), cls});
          return instance_ap(p, g).mean_ap;
        },
        py::arg("predictions"), py::arg("ground_truth"),
        "Predictions are (mask, class_id, score); ground truth is (mask, class_id).");

  m.def("generate_scene",
        [](const std::string& spec_text) {
          std::istringstream in(spec_text);
          const SceneSpec spec = spec_text.empty() ? SceneSpec::standard() : SceneSpec::parse(in);
          const Scene scene = generate_scene(spec);
          std::vector<SemanticPoint> all;
          std::vector<bool> transient;
          for (std::size_t r = 0; r < scene.rounds.size(); ++r) {
            all.insert(all.end(), scene.rounds[r].points().begin(), scene.rounds[r].points().end());
            for (const auto& t : scene.membership[r]) transient.push_back(t.transient);
          }
          py::dict d = points_to(all);
          py::array_t<bool> tr(static_cast<py::ssize_t>(transient.size()));
          for (std::size_t i = 0; i < transient.size(); ++i) tr.mutable_data()[i] = transient[i];
          d["transient"] = tr;
          std::vector<std::vector<double>> poses;
          for (const auto& p : scene.gt_poses) poses.push_back(pose_to(p.pose));
          d["poses"] = poses;
          return d;
        },
        py::arg("spec") = std::string(),
        "Synthetic street from `key = value` spec text (empty = standard scene).");

  m.def("read_points", [](const std::string& path) { return points_to(read_points_file(path)); },
        py::arg("path"));

  m.def("run_pipeline",
        [](const std::map<std::string, std::string>& settings) {
          PipelineConfig c;
          for (const auto& [k, v] : settings) c.set(k, v);
          const auto res = run_pipeline(c);
          py::dict d;
          d["exit_code"] = res.exit_code();
          d["message"] = res.message;
          py::dict rows;
          for (const auto& r : res.pose_rows) rows[py::str(r.stage)] = py::make_tuple(r.median_translation, r.median_rotation);
          d["poses"] = rows;
          if (res.has_segmentation) {
            d["pixel_accuracy"] = res.pixel_accuracy;
            d["mean_accuracy"] = res.mean_accuracy;
            d["mean_iou"] = res.mean_iou;
          }
          return d;
        },
        py::arg("settings"), "Runs the pipeline with `key -> value` settings; never raises on stage failure.");
}
