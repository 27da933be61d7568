#include "maf/appearance_match.hpp"

#include <cmath>

namespace maf {

SelectedFrames select_frames(int t) {
  if (t < 1) raise(Err::InvalidArgument, "sequence length must be >= 1");
  return {0, (t - 1) / 2, t - 1};
}

std::vector<int> distinct_frames(const SelectedFrames& sel) {
  std::vector<int> frames{sel.first};
  if (sel.middle != sel.first) frames.push_back(sel.middle);
  if (sel.last != sel.middle && sel.last != sel.first) frames.push_back(sel.last);
  return frames;
}

double embedding_distance(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim())
    raise(Err::DimensionMismatch, "embedding dimensions differ: " + std::to_string(a.dim()) + " vs " +
                                      std::to_string(b.dim()));
  double sum = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double appearance_score(const Detection& det, std::span<const Embedding> candidate_frames) {
  if (candidate_frames.empty())
    raise(Err::NoCandidateEmbeddings, "candidate has no frame embeddings to score against");
  double total = 0.0;
  for (const Embedding& e : candidate_frames) total += embedding_distance(det.embedding, e);
  return total / static_cast<double>(candidate_frames.size());
}

std::vector<ScoreSource> build_sources(std::span<const Detection> dets,
                                       std::span<const CandidateEmbeddings> candidates,
                                       const AppearanceConfig& cfg) {
  if (!std::isfinite(cfg.lambda_trust) || cfg.lambda_trust < 0.0)
    raise(Err::InvalidArgument, "lambda_trust must be finite and >= 0");
  std::vector<ScoreSource> sources;
  if (dets.empty()) return sources;  // pure-motion fallback downstream

  std::vector<std::vector<Embedding>> frames_per_candidate;
  frames_per_candidate.reserve(candidates.size());
  for (const CandidateEmbeddings& c : candidates) {
    std::vector<Embedding> frames;
    frames.reserve(c.frames.size());
    for (const FrameEmbedding& f : c.frames) frames.push_back(f.embedding);
    frames_per_candidate.push_back(std::move(frames));
  }

  sources.reserve(dets.size());
  for (const Detection& det : dets) {
    ScoreSource src;
    src.kind = SourceKind::appearance;
    src.lambda_trust = cfg.lambda_trust;
    src.alpha_mask = det.alpha_mask;
    src.scores.reserve(candidates.size());
    for (const auto& frames : frames_per_candidate)
      src.scores.push_back(appearance_score(det, frames));
    src.validate();
    sources.push_back(std::move(src));
  }
  return sources;
}

}  // namespace maf
