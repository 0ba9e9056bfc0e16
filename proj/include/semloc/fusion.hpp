#pragma once

#include "semloc/class_registry.hpp"
#include "semloc/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace semloc {

struct ObjectMask {
  std::uint16_t class_id = 0;
  BinaryMask pixels;
  double confidence = 1.0;
};

struct FusionResult {
  LabelMap labels;
  std::size_t holes = 0;            // pixels still 255 after fusion
  std::size_t skipped_objects = 0;  // masks below the confidence threshold
};

/// Fills unprojected pixels of `rendered` from `background`, then pastes
/// object masks without touching pixels where `rendered` holds a movable
/// class. Overlapping masks: higher confidence wins, then smaller index.
FusionResult fuse(const LabelMap& rendered, const LabelMap& background,
                  const std::vector<ObjectMask>& objects, const ClassRegistry& registry,
                  double min_confidence = 0.9);

}  // namespace semloc
