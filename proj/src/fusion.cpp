#include "semloc/fusion.hpp"

#include "semloc/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace semloc {

FusionResult fuse(const LabelMap& rendered, const LabelMap& background,
                  const std::vector<ObjectMask>& objects, const ClassRegistry& registry,
                  double min_confidence) {
  if (!rendered.same_shape(background)) {
    fail(ErrorCode::kDimensionMismatch, "rendered and background maps differ in size");
  }
  FusionResult out;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& obj = objects[i];
    if (!obj.pixels.same_shape(rendered)) {
      fail(ErrorCode::kDimensionMismatch, "object mask " + std::to_string(i) + " differs in size");
    }
    if (!registry.is_movable(obj.class_id)) {
      fail(ErrorCode::kNonMovableObject,
           "object mask " + std::to_string(i) + " has non-movable class " +
               std::to_string(obj.class_id));
    }
    if (obj.confidence < min_confidence) {
      ++out.skipped_objects;
      continue;
    }
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return objects[a].confidence > objects[b].confidence;
  });

  out.labels = rendered;
  for (std::size_t p = 0; p < out.labels.size(); ++p) {
    if (rendered[p] == kIgnoreLabel) out.labels[p] = background[p];
  }
  std::vector<char> claimed(out.labels.size(), 0);
  for (std::size_t i : order) {
    const auto& obj = objects[i];
    for (std::size_t p = 0; p < out.labels.size(); ++p) {
      if (!obj.pixels[p] || claimed[p]) continue;
      if (rendered[p] != kIgnoreLabel && registry.is_movable(rendered[p])) continue;
      out.labels[p] = obj.class_id;
      claimed[p] = 1;
    }
  }
  out.holes = static_cast<std::size_t>(
      std::count(out.labels.data().begin(), out.labels.data().end(), kIgnoreLabel));
  return out;
}

}  // namespace semloc
