#include "pace/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pace {

void MotionSequence::validate() const {
  check(fps > 0.0, "motion: fps must be positive, got ", fps);
  check(frames.size() >= 2, "motion: needs at least 2 frames, got ", frames.size());
  check(timestamps.size() == frames.size(), "motion: ", timestamps.size(), " timestamps for ",
        frames.size(), " frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    check(frames[i].all_finite(), "motion: non-finite pose at frame ", i);
    if (i > 0)
      check(timestamps[i] > timestamps[i - 1], "motion: timestamps not increasing at frame ", i);
  }
}

FrameWeights FrameWeights::normalized(std::vector<double> raw) {
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    check(raw[i] >= 0.0 && std::isfinite(raw[i]), "weights: invalid weight at frame ", i);
    sum += raw[i];
  }
  check(sum > 0.0, "weights: all-zero weights");
  for (double& w : raw) w /= sum;
  return FrameWeights{std::move(raw)};
}

FrameDeltas frame_diff(const MotionSequence& sequence) {
  check(sequence.frames.size() >= 2, "frame_diff: needs at least 2 frames");
  FrameDeltas d;
  const std::size_t n = sequence.frames.size();
  d.pose.resize(n - 1);
  d.translation.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const BodyPose& a = sequence.frames[i];
    const BodyPose& b = sequence.frames[i + 1];
    for (int j = 0; j < kJointCount; ++j) d.pose[i][j] = b.rotation[j] - a.rotation[j];
    d.translation[i] = b.root_translation - a.root_translation;
  }
  return d;
}

DownsampleResult downsample(const MotionSequence& sequence, const FrameWeights& weights) {
  sequence.validate();
  const std::size_t n = sequence.frames.size();
  check(weights.size() == n, "downsample: ", weights.size(), " weights for ", n, " frames");

  const int stride = int(std::llround(sequence.fps / 30.0));
  DownsampleResult out;
  if (sequence.fps <= 30.0 || stride <= 1) {
    out.motion = sequence;
    out.weights = weights;
    out.retained.resize(n);
    std::iota(out.retained.begin(), out.retained.end(), 0);
    out.average_fps = sequence.fps;
    return out;
  }

  // Rank by weight; ties prefer stride-aligned frames so uniform weights
  // sample evenly instead of front-loading.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    const int ra = a % stride, rb = b % stride;
    if (ra != rb) return ra < rb;
    return a < b;
  });

  const std::size_t keep = std::max<std::size_t>(2, std::size_t(std::llround(double(n) / stride)));
  std::vector<char> retained_mask(n, 0);
  for (std::size_t i = 0; i < keep && i < n; ++i) retained_mask[order[i]] = 1;

  // 10 fps floor: wherever a retained gap exceeds 0.1 s, pull the
  // highest-weight dropped frames inside it back in until the floor holds.
  const double max_gap = 0.1;
  bool changed = true;
  while (changed) {
    changed = false;
    int prev = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!retained_mask[i]) continue;
      if (prev >= 0 && sequence.timestamps[i] - sequence.timestamps[prev] > max_gap + 1e-12) {
        int best = -1;
        for (int f = prev + 1; f < int(i); ++f)
          if (!retained_mask[f] && (best < 0 || weights[f] > weights[best])) best = f;
        if (best >= 0) {
          retained_mask[best] = 1;
          changed = true;
        }
      }
      prev = int(i);
    }
  }

  std::vector<double> kept_weights;
  for (std::size_t i = 0; i < n; ++i) {
    if (!retained_mask[i]) continue;
    out.retained.push_back(int(i));
    out.motion.frames.push_back(sequence.frames[i]);
    out.motion.timestamps.push_back(sequence.timestamps[i]);
    kept_weights.push_back(weights[i]);
  }
  out.weights = FrameWeights::normalized(std::move(kept_weights));

  const double span =
      out.motion.timestamps.back() - out.motion.timestamps.front();
  out.average_fps = span > 0.0 ? double(out.retained.size() - 1) / span : sequence.fps;
  out.motion.fps = out.average_fps;
  out.motion.validate();
  return out;
}

}  // namespace pace
