#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "maf/core.hpp"

namespace maf {

// Audit record for one fusion step: which source was consulted, every
// source's confidence at that moment, and what was done about it.
struct DecisionRecord {
  enum class Action { predict, eliminate };

  int step = 0;
  std::string chosen;  // "motion", "appearance:<k>", or "sole_survivor"
  std::optional<double> motion_confidence;  // absent when only one candidate is left
  std::vector<std::pair<int, double>> appearance_confidences;  // (original source index, confidence)
  Action action = Action::predict;
  int candidate = -1;  // original candidate index predicted or eliminated
  int source = -1;     // original appearance source index for eliminations
};

// Working state of the fusion loop. live_candidates holds original candidate
// indices in ascending order; every source keeps exactly one score per live
// candidate throughout.
struct FusionState {
  std::vector<int> live_candidates;
  ScoreSource motion;
  std::vector<ScoreSource> appearance;

  static FusionState make(ScoreSource motion, std::vector<ScoreSource> appearance);
};

struct FusionResult {
  int predicted = -1;  // original candidate index
  std::vector<DecisionRecord> trace;
};

// lambda * alpha * x(2)/x(1) over the two smallest scores. x(1)=0 with
// x(2)>0 yields +infinity; x(1)=x(2)=0 yields lambda*alpha; zero-trust
// sources (lambda*alpha = 0) yield 0 so they can never win. Needs at least
// two scores.
double confidence(const ScoreSource& src);

// Confidence-Based Adaptive Fusing. Repeatedly compares the motion source's
// confidence against every appearance source: motion winning (ties included)
// commits to the motion argmin; an appearance win eliminates that source's
// argmin candidate from every source and retires the source. A sole
// surviving candidate is predicted outright. Argmin ties break toward the
// lowest original candidate index, source ties toward the lowest source
// index.
FusionResult fuse(FusionState state);

// Trace serialization for --explain output. candidate_ids, when given, maps
// original candidate indices to their external ids.
nlohmann::json trace_to_json(const std::vector<DecisionRecord>& trace,
                             const std::vector<std::string>& candidate_ids = {});

}  // namespace maf
