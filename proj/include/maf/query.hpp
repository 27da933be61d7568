#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maf/appearance_match.hpp"
#include "maf/core.hpp"
#include "maf/motion_match.hpp"

namespace maf {

// One matching problem: a t-frame ego sequence (as t-1 flow/depth rasters)
// against N masked third-person candidates. Candidate-indexed vectors are
// aligned: candidates[i], motion_predictions[i] and candidate_embeddings[i]
// all describe the same candidate.
struct QueryInstance {
  int t = 0;
  std::vector<FlowField> ego_flow;    // t-1 entries
  std::vector<DepthMap> ego_depth;    // t-1 entries, aligned with ego_flow
  std::vector<MaskSequence> candidates;
  std::vector<MotionPrediction> motion_predictions;
  std::vector<CandidateEmbeddings> candidate_embeddings;
  std::vector<Detection> detections;
  std::optional<int> ground_truth;  // candidate index, evaluation only

  size_t candidate_count() const { return candidates.size(); }
  std::vector<std::string> candidate_ids() const;
  void validate() const;
};

// On-disk query layout: a directory holding query.json next to the artifacts
// it references (paths in query.json are relative to that directory).
//   query.json        frame count, candidate order, ground truth, file lists
//   flow/NNNN.flo     t-1 flow rasters
//   depth/NNNN.pfm    t-1 depth rasters
//   masks.json        per-candidate RLE mask sequences
//   embeddings.json   per-candidate per-frame embeddings
//   detections.json   ego-view detections
//   predictions.json  per-candidate per-window motion predictions

// Accepts the directory or the query.json path itself.
QueryInstance load_query(const std::filesystem::path& path);
void save_query(const std::filesystem::path& dir, const QueryInstance& query);

}  // namespace maf
