#include "maf/motion_match.hpp"

#include <algorithm>
#include <cmath>

namespace maf {

namespace {
constexpr double kScaleEpsilon = 1e-9;
}

WindowSpec::WindowSpec(int length_, int stride_) : length(length_), stride(stride_) {
  if (length < 1) raise(Err::InvalidArgument, "window length must be >= 1");
  if (stride < 1) raise(Err::InvalidArgument, "window stride must be >= 1");
  if (stride > length)
    raise(Err::InvalidArgument, "window stride must not exceed length (the grid would leave gaps)");
}

const char* normalization_name(NormalizationMode mode) {
  return mode == NormalizationMode::raw ? "raw" : "ego-scale";
}

NormalizationMode normalization_from_name(const std::string& name) {
  if (name == "raw") return NormalizationMode::raw;
  if (name == "ego-scale" || name == "ego_scale") return NormalizationMode::ego_scale;
  raise(Err::InvalidArgument, "unknown normalization mode '" + name + "' (expected raw or ego-scale)");
}

std::vector<Window> make_windows(int interval_count, const WindowSpec& spec) {
  if (interval_count < 1) raise(Err::InvalidArgument, "interval count must be >= 1");
  if (spec.length < 1 || spec.stride < 1 || spec.stride > spec.length)
    raise(Err::InvalidArgument, "invalid window spec");

  std::vector<Window> windows;
  for (int start = 0; start + spec.length <= interval_count; start += spec.stride)
    windows.push_back({start, spec.length});
  const int covered = windows.empty() ? 0 : windows.back().start + windows.back().length;
  if (covered < interval_count) {
    const int start = std::max(0, interval_count - spec.length);
    windows.push_back({start, interval_count - start});
  }
  return windows;
}

double motion_score(std::span<const FrameMotion> ego, const MotionPrediction& pred,
                    const WindowSpec& spec, NormalizationMode norm) {
  const auto windows = make_windows(static_cast<int>(ego.size()), spec);
  if (pred.windows.size() != windows.size())
    raise(Err::WindowCountMismatch, "candidate '" + pred.candidate_id + "' has " +
                                        std::to_string(pred.windows.size()) + " windows, expected " +
                                        std::to_string(windows.size()));
  for (size_t i = 0; i < windows.size(); ++i)
    if (!(pred.windows[i].window == windows[i]))
      raise(Err::WindowCountMismatch,
            "candidate '" + pred.candidate_id + "' window grid does not match the configured spec");

  double scale_t = 1.0;
  double scale_r = 1.0;
  if (norm == NormalizationMode::ego_scale) {
    const MotionSignature full = cumulative_motion(ego);
    scale_t = std::max(full.t_total, kScaleEpsilon);
    scale_r = std::max(full.r_total, kScaleEpsilon);
  }

  double total = 0.0;
  for (size_t i = 0; i < windows.size(); ++i) {
    const MotionSignature ego_sig =
        window_motion(ego, static_cast<size_t>(windows[i].start), static_cast<size_t>(windows[i].length));
    const double dt = (pred.windows[i].signature.t_total - ego_sig.t_total) / scale_t;
    const double dr = (pred.windows[i].signature.r_total - ego_sig.r_total) / scale_r;
    total += dt * dt + dr * dr;
  }
  return total / static_cast<double>(windows.size());
}

ScoreSource rank_candidates(std::span<const FrameMotion> ego, std::span<const MotionPrediction> preds,
                            const WindowSpec& spec, NormalizationMode norm) {
  if (preds.empty()) raise(Err::InvalidArgument, "no candidates to rank");
  ScoreSource source;
  source.kind = SourceKind::motion;
  source.lambda_trust = 1.0;
  source.alpha_mask = 1.0;
  source.scores.reserve(preds.size());
  for (const MotionPrediction& pred : preds) source.scores.push_back(motion_score(ego, pred, spec, norm));
  return source;
}

}  // namespace maf
