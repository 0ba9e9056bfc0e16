#pragma once

#include "semloc/raster.hpp"

#include <cstdint>
#include <vector>

namespace semloc {

/// Counts indexed by (ground-truth class, predicted class) over IDs 0..255;
/// pixels whose ground truth is 255 are never counted.
class ConfusionMatrix {
 public:
  static constexpr int kClasses = 256;

  ConfusionMatrix() : counts_(static_cast<std::size_t>(kClasses) * kClasses, 0) {}

  std::uint64_t at(int gt, int pred) const { return counts_[index(gt, pred)]; }
  void add(int gt, int pred, std::uint64_t n = 1) { counts_[index(gt, pred)] += n; }
  std::uint64_t total() const;
  std::uint64_t row_sum(int gt) const;
  std::uint64_t col_sum(int pred) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix& other) const = default;

 private:
  static std::size_t index(int gt, int pred) {
    return static_cast<std::size_t>(gt) * kClasses + static_cast<std::size_t>(pred);
  }
  std::vector<std::uint64_t> counts_;
};

void accumulate(ConfusionMatrix& conf, const LabelMap& gt, const LabelMap& pred);

struct ClassScore {
  int class_id = 0;
  double accuracy = 0.0;
  double iou = 0.0;
  std::uint64_t gt_pixels = 0;
};

struct SegmentationSummary {
  double pixel_accuracy = 0.0;
  double mean_accuracy = 0.0;
  double mean_iou = 0.0;
  std::vector<ClassScore> classes;  // classes present in ground truth
};

/// Means run over classes with ground-truth pixels. Throws kEmptyMatrix when
/// nothing was counted.
SegmentationSummary summarize(const ConfusionMatrix& conf);

struct InstancePrediction {
  BinaryMask mask;
  std::uint16_t class_id = 0;
  double score = 0.0;
};

struct InstanceGroundTruth {
  BinaryMask mask;
  std::uint16_t class_id = 0;
};

double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// 0.50:0.05:0.95
std::vector<double> coco_iou_thresholds();

struct InstanceApResult {
  double mean_ap = 0.0;
  std::vector<std::pair<std::uint16_t, double>> per_class;  // classes with gt
};

/// Greedy score-ordered matching per class and threshold, 101-point
/// interpolated precision; averaged over thresholds, then classes.
InstanceApResult instance_ap(const std::vector<InstancePrediction>& preds,
                             const std::vector<InstanceGroundTruth>& gts,
                             const std::vector<double>& iou_thresholds = coco_iou_thresholds());

/// Precision-recall area for one class at one threshold.
double average_precision(const std::vector<InstancePrediction>& preds,
                         const std::vector<InstanceGroundTruth>& gts, double iou_threshold);

enum class Difficulty { kEasy, kModerate, kHard };

/// `easy_max` / `moderate_max` are inclusive upper bounds on the movable
/// object count; no defaults are provided.
Difficulty classify_difficulty(std::size_t movable_objects, std::size_t easy_max,
                               std::size_t moderate_max);
const char* to_string(Difficulty d);

}  // namespace semloc
