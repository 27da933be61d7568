#pragma once

#include <span>

#include "maf/core.hpp"

namespace maf {

// Per-interval first-person motion signals. t_i is the median over valid
// pixels of depth * |flow| (depth units x pixels), r_i the median of |flow|
// (pixels). Translational flow scales inversely with depth, rotational flow
// does not, which is what makes the pair separable.
struct FrameMotion {
  double t_i = 0.0;
  double r_i = 0.0;
};

// Both medians run over the pixels valid in flow AND depth, so the two
// signals are computed on the same support. An even count yields the mean of
// the two central order statistics.
FrameMotion frame_motion(const FlowField& flow, const DepthMap& depth);

// Componentwise sum over all intervals.
MotionSignature cumulative_motion(std::span<const FrameMotion> frames);

// Componentwise sum over [start, start + length).
MotionSignature window_motion(std::span<const FrameMotion> frames, size_t start, size_t length);

}  // namespace maf
