#include "maf/ego_motion.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace maf {

namespace {

double median_destructive(std::vector<double>& v) {
  const size_t n = v.size();
  const size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

}  // namespace

FrameMotion frame_motion(const FlowField& flow, const DepthMap& depth) {
  if (flow.width != depth.width || flow.height != depth.height)
    raise(Err::DimensionMismatch, "flow and depth rasters have different dimensions");

  std::vector<double> magnitude;
  std::vector<double> weighted;
  magnitude.reserve(flow.size());
  weighted.reserve(flow.size());
  for (size_t i = 0; i < flow.size(); ++i) {
    if (!flow.valid[i] || !depth.valid[i]) continue;
    const double m = std::sqrt(flow.fx[i] * flow.fx[i] + flow.fy[i] * flow.fy[i]);
    magnitude.push_back(m);
    weighted.push_back(depth.z[i] * m);
  }
  if (magnitude.empty()) raise(Err::NoValidPixels, "no pixel is valid in both flow and depth");

  return {median_destructive(weighted), median_destructive(magnitude)};
}

MotionSignature cumulative_motion(std::span<const FrameMotion> frames) {
  if (frames.empty()) raise(Err::EmptySequence, "cumulative motion over an empty interval list");
  return window_motion(frames, 0, frames.size());
}

MotionSignature window_motion(std::span<const FrameMotion> frames, size_t start, size_t length) {
  if (length < 1 || start + length > frames.size())
    raise(Err::OutOfRange, "window [" + std::to_string(start) + ", " + std::to_string(start + length) +
                               ") exceeds " + std::to_string(frames.size()) + " intervals");
  MotionSignature sig;
  for (size_t i = start; i < start + length; ++i) {
    sig.t_total += frames[i].t_i;
    sig.r_total += frames[i].r_i;
  }
  return sig;
}

}  // namespace maf
