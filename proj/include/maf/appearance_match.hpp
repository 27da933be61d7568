#pragma once

#include <span>
#include <string>
#include <vector>

#include "maf/core.hpp"

namespace maf {

// Dataset-level trust in appearance matching (lambda). Zero disables the
// appearance sources without removing them.
struct AppearanceConfig {
  double lambda_trust = 1.0;
};

struct SelectedFrames {
  int first = 0;
  int middle = 0;
  int last = 0;
};

// First, middle, last frame of a t-frame sequence: (0, floor((t-1)/2), t-1).
// Entries coincide for t < 3; distinct_frames collapses the duplicates.
SelectedFrames select_frames(int t);
std::vector<int> distinct_frames(const SelectedFrames& sel);

// Embedding of one candidate in one third-person frame. Occluded frames
// simply have no entry.
struct FrameEmbedding {
  int frame_index = 0;
  Embedding embedding;
};

struct CandidateEmbeddings {
  std::string candidate_id;
  std::vector<FrameEmbedding> frames;
};

// Euclidean distance; dimensions must agree.
double embedding_distance(const Embedding& a, const Embedding& b);

// Mean distance from the detection to the candidate over all frames with an
// embedding. Low score = this candidate was seen in the first-person view,
// so it cannot be the wearer.
double appearance_score(const Detection& det, std::span<const Embedding> candidate_frames);

// One appearance ScoreSource per detection (lambda from config, alpha from
// the detector). Duplicate detections of the same person stay separate
// sources. No detections yields an empty list.
std::vector<ScoreSource> build_sources(std::span<const Detection> dets,
                                       std::span<const CandidateEmbeddings> candidates,
                                       const AppearanceConfig& cfg);

}  // namespace maf
