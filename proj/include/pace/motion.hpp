#pragma once

#include <vector>

#include "pace/body.hpp"
#include "pace/common.hpp"

namespace pace {

struct MotionSequence {
  double fps = 30.0;
  std::vector<BodyPose> frames;
  std::vector<double> timestamps;  // seconds; source stamps survive downsampling

  std::size_t frame_count() const { return frames.size(); }
  void validate() const;
};

/// Per-frame importance weights; normalized to sum 1 on construction.
struct FrameWeights {
  std::vector<double> weights;

  static FrameWeights normalized(std::vector<double> raw);
  std::size_t size() const { return weights.size(); }
  double operator[](std::size_t i) const { return weights[i]; }
};

struct FrameDeltas {
  std::vector<std::array<Vec3, kJointCount>> pose;  // frames - 1 entries
  std::vector<Vec3> translation;
};

/// Componentwise frame-to-frame differences over axis-angle coordinates and
/// root translation.
FrameDeltas frame_diff(const MotionSequence& sequence);

struct DownsampleResult {
  MotionSequence motion;
  FrameWeights weights;       // retained subset, renormalized
  std::vector<int> retained;  // indices into the source sequence, ascending
  double average_fps = 0.0;
};

/// Top-25%-by-weight retention for >30 fps input (stride-tied fraction for
/// other rates), then gap filling so no two retained frames are more than
/// 0.1 s apart. Sequences at or below 30 fps pass through unchanged.
DownsampleResult downsample(const MotionSequence& sequence, const FrameWeights& weights);

}  // namespace pace
