#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maf/errors.hpp"

namespace maf {

// Dense per-pixel displacement between two consecutive frames, in pixels per
// frame interval. Row-major, row 0 at the top. Invalid pixels keep their raw
// payload (so files round-trip bit-exactly) but are excluded from every
// downstream statistic.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> fx;
  std::vector<double> fy;
  std::vector<uint8_t> valid;

  size_t size() const { return fx.size(); }
  void validate() const;
};

// Per-pixel depth in scene length units. Units are arbitrary but must be
// consistent within a sequence.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> z;
  std::vector<uint8_t> valid;

  size_t size() const { return z.size(); }
  void validate() const;
};

// Cumulative (translational, rotational) motion over a span of frame
// intervals. The translational part carries depth units x pixels, the
// rotational part plain pixels.
struct MotionSignature {
  double t_total = 0.0;
  double r_total = 0.0;
};

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // row-major, 0 background / 1 foreground

  bool operator==(const Mask&) const = default;
};

// Per-frame RLE masks of one third-person candidate. A nullopt frame means
// the candidate is occluded in that frame.
struct MaskSequence {
  std::string candidate_id;
  int width = 0;
  int height = 0;
  std::vector<std::optional<std::vector<int64_t>>> frames;
};

struct Embedding {
  std::vector<double> values;

  size_t dim() const { return values.size(); }
  void validate() const;
};

// One person detected in a selected first-person frame.
struct Detection {
  int frame_index = 0;
  Embedding embedding;
  double alpha_mask = 1.0;  // detector confidence in [0, 1]
};

enum class SourceKind { motion, appearance };

// One row of candidate scores plus the trust weights fusion applies to it.
// Motion sources always carry lambda_trust = alpha_mask = 1.
struct ScoreSource {
  SourceKind kind = SourceKind::motion;
  std::vector<double> scores;  // one entry per live candidate
  double lambda_trust = 1.0;
  double alpha_mask = 1.0;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Binary raster formats
// ---------------------------------------------------------------------------

// Flow samples whose magnitude exceeds this (or are non-finite) are flagged
// invalid on read, matching the common "unknown flow" convention.
inline constexpr double flow_invalid_magnitude = 1e9;

// Middlebury .flo container: float32 magic 202021.25, int32 width, int32
// height, then row-major interleaved (fx, fy) float32 pairs. Little-endian
// throughout.
FlowField read_flow(const std::filesystem::path& path);
void write_flow(const std::filesystem::path& path, const FlowField& field);

// Grayscale PFM: "Pf" magic, ASCII width/height, a scale whose sign selects
// the byte order, then float32 rows stored bottom-to-top. Non-positive or
// non-finite samples are flagged invalid on read.
DepthMap read_depth(const std::filesystem::path& path);
void write_depth(const std::filesystem::path& path, const DepthMap& map);

// COCO-style RLE over a width x height grid: column-major pixel order,
// alternating runs starting with background.
Mask decode_rle(const std::vector<int64_t>& runs, int width, int height);
std::vector<int64_t> encode_rle(const Mask& mask);

}  // namespace maf
