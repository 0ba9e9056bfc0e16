#include "semloc/metrics.hpp"

#include "semloc/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace semloc {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::row_sum(int gt) const {
  std::uint64_t s = 0;
  for (int p = 0; p < kClasses; ++p) s += at(gt, p);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(int pred) const {
  std::uint64_t s = 0;
  for (int g = 0; g < kClasses; ++g) s += at(g, pred);
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

void accumulate(ConfusionMatrix& conf, const LabelMap& gt, const LabelMap& pred) {
  if (!gt.same_shape(pred)) fail(ErrorCode::kDimensionMismatch, "gt and prediction differ in size");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kIgnoreLabel) continue;
    if (gt[i] >= ConfusionMatrix::kClasses || pred[i] >= ConfusionMatrix::kClasses) {
      fail(ErrorCode::kInvalidArgument, "label id above 255");
    }
    conf.add(gt[i], pred[i]);
  }
}

SegmentationSummary summarize(const ConfusionMatrix& conf) {
  const std::uint64_t total = conf.total();
  if (total == 0) fail(ErrorCode::kEmptyMatrix, "confusion matrix is empty");
  SegmentationSummary s;
  std::uint64_t trace = 0;
  for (int c = 0; c < ConfusionMatrix::kClasses; ++c) {
    const std::uint64_t diag = conf.at(c, c);
    trace += diag;
    const std::uint64_t row = conf.row_sum(c);
    if (row == 0) continue;
    const std::uint64_t col = conf.col_sum(c);
    ClassScore cs;
    cs.class_id = c;
    cs.gt_pixels = row;
    cs.accuracy = static_cast<double>(diag) / static_cast<double>(row);
    cs.iou = static_cast<double>(diag) / static_cast<double>(row + col - diag);
    s.classes.push_back(cs);
  }
  s.pixel_accuracy = static_cast<double>(trace) / static_cast<double>(total);
  for (const auto& cs : s.classes) {
    s.mean_accuracy += cs.accuracy;
    s.mean_iou += cs.iou;
  }
  s.mean_accuracy /= static_cast<double>(s.classes.size());
  s.mean_iou /= static_cast<double>(s.classes.size());
  return s;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) fail(ErrorCode::kDimensionMismatch, "masks differ in size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 9; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

double average_precision(const std::vector<InstancePrediction>& preds,
                         const std::vector<InstanceGroundTruth>& gts, double iou_threshold) {
  if (gts.empty()) return 0.0;
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  std::vector<char> matched(gts.size(), 0);
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& pred = preds[order[k]];
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (matched[g]) continue;
      const double iou = mask_iou(pred.mask, gts[g].mask);
      if (iou >= iou_threshold && iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      matched[best_gt] = 1;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }
  // Monotone envelope, then sample at 101 recall levels.
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = r / 100.0;
    auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

InstanceApResult instance_ap(const std::vector<InstancePrediction>& preds,
                             const std::vector<InstanceGroundTruth>& gts,
                             const std::vector<double>& iou_thresholds) {
  if (iou_thresholds.empty()) fail(ErrorCode::kInvalidArgument, "no IoU thresholds given");
  std::map<std::uint16_t, std::vector<InstanceGroundTruth>> gt_by_class;
  for (const auto& g : gts) gt_by_class[g.class_id].push_back(g);
  InstanceApResult out;
  for (const auto& [cls, class_gts] : gt_by_class) {
    std::vector<InstancePrediction> class_preds;
    for (const auto& p : preds) {
      if (p.class_id == cls) class_preds.push_back(p);
    }
    double ap = 0.0;
    for (double t : iou_thresholds) ap += average_precision(class_preds, class_gts, t);
    ap /= static_cast<double>(iou_thresholds.size());
    out.per_class.emplace_back(cls, ap);
    out.mean_ap += ap;
  }
  if (!out.per_class.empty()) out.mean_ap /= static_cast<double>(out.per_class.size());
  return out;
}

Difficulty classify_difficulty(std::size_t movable_objects, std::size_t easy_max,
                               std::size_t moderate_max) {
  if (easy_max > moderate_max) {
    fail(ErrorCode::kInvalidArgument, "easy threshold must not exceed moderate threshold");
  }
  if (movable_objects <= easy_max) return Difficulty::kEasy;
  if (movable_objects <= moderate_max) return Difficulty::kModerate;
  return Difficulty::kHard;
}

const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kModerate: return "moderate";
    case Difficulty::kHard: return "hard";
  }
  return "unknown";
}

}  // namespace semloc
