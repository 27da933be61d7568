#pragma once

#include <span>
#include <string>
#include <vector>

#include "maf/core.hpp"
#include "maf/ego_motion.hpp"

namespace maf {

// Sliding-window layout over frame intervals. Windows start every `stride`
// intervals; a clamped final window is appended when the regular grid stops
// short of the sequence end. stride <= length keeps the grid gap-free, so the
// constructor rejects anything else.
struct WindowSpec {
  int length = 8;
  int stride = 4;

  WindowSpec() = default;
  WindowSpec(int length, int stride);
};

// raw reproduces the plain squared error; ego_scale divides the T and R
// residuals by the full-sequence ego totals so the two terms are
// unit-comparable. ego_scale is the default everywhere.
enum class NormalizationMode { raw, ego_scale };

const char* normalization_name(NormalizationMode mode);
NormalizationMode normalization_from_name(const std::string& name);

struct Window {
  int start = 0;
  int length = 0;

  bool operator==(const Window&) const = default;
};

struct PredictedWindow {
  Window window;
  MotionSignature signature;  // (T_exo, R_exo) for that window
};

// Per-window motion predicted for one third-person candidate, ingested from
// file or produced by the simulator oracle.
struct MotionPrediction {
  std::string candidate_id;
  std::vector<PredictedWindow> windows;
};

// Covers every interval index at least once; the final window ends exactly at
// interval_count (clamped start, full length when the sequence allows it).
std::vector<Window> make_windows(int interval_count, const WindowSpec& spec);

// Mean over windows of the normalized squared error between predicted and
// ego window signatures. Zero iff every window matches exactly. The
// prediction's window grid must equal make_windows(len(ego), spec).
double motion_score(std::span<const FrameMotion> ego, const MotionPrediction& pred,
                    const WindowSpec& spec, NormalizationMode norm);

// One motion ScoreSource over all candidates, order preserved.
ScoreSource rank_candidates(std::span<const FrameMotion> ego, std::span<const MotionPrediction> preds,
                            const WindowSpec& spec, NormalizationMode norm);

}  // namespace maf
