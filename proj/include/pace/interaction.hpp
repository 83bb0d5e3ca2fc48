#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pace/body.hpp"
#include "pace/common.hpp"
#include "pace/motion.hpp"

namespace pace {

struct SemanticPalette {
  static constexpr int kNone = 255;

  std::vector<std::pair<int, std::string>> classes;  // sorted by id; kNone reserved

  static SemanticPalette default_palette();
  bool contains(int id) const;
  const std::string& name(int id) const;
};

/// Per-frame, per-vertex contact probability and hard semantic label.
struct FeatureFrame {
  std::vector<float> contact;            // f_c in [0, 1]
  std::vector<std::uint16_t> semantic;   // class id or SemanticPalette::kNone
};

struct FeatureMap {
  std::vector<FeatureFrame> frames;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t vertex_count() const { return frames.empty() ? 0 : frames[0].contact.size(); }

  /// Errors name the offending frame/vertex.
  void validate(std::size_t expected_frames, std::size_t expected_vertices,
                const SemanticPalette& palette) const;

  FeatureMap subset(const std::vector<int>& retained) const;
  std::uint64_t content_hash() const;
};

struct HeuristicParams {
  double sigma = 0.05;               // m, height falloff above the support plane
  double velocity_threshold = 0.05;  // m/s
  double seat_band_lo = 0.3, seat_band_hi = 0.7;    // m above support
  double table_band_lo = 0.6, table_band_hi = 1.1;  // m above support
};

/// Geometric stand-in feature provider, evaluated in the motion's own frame.
/// The support plane is the lowest posed vertex across the whole clip, so the
/// output is invariant to vertical translation of the motion. Body-part rules
/// (soles -> floor, seated hips/thighs -> chair, resting palms -> table) fill
/// in the semantic labels.
FeatureMap estimate_features_heuristic(const BodyModel& body, const MotionSequence& motion,
                                       const HeuristicParams& params, bool parallel = true);

}  // namespace pace
