#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "maf/appearance_match.hpp"
#include "maf/core.hpp"
#include "maf/ego_motion.hpp"
#include "maf/motion_match.hpp"
#include "maf/query.hpp"
#include "maf/rng.hpp"

namespace maf {

struct CameraIntrinsics {
  double focal = 30.0;  // pixels
  double cx = 16.0;
  double cy = 12.0;
  int width = 32;
  int height = 24;

  void validate() const;
};

// First-order motion-field model: rotation rates above this leave the
// small-angle regime where the rendered flow is meaningful.
inline constexpr double max_rotation_rate = 0.2;  // radians per frame

struct MotionStep {
  double tx = 0.0, ty = 0.0, tz = 0.0;  // scene units per frame
  double wx = 0.0, wy = 0.0, wz = 0.0;  // radians per frame
};

enum class DepthModel { constant_plane, random_range };

// A synthetic camera path through a depth field: one MotionStep per frame
// interval. Everything downstream of the seed is deterministic.
struct SceneSpec {
  CameraIntrinsics intrinsics;
  DepthModel depth_model = DepthModel::random_range;
  double z_plane = 4.0;   // constant_plane
  double z_min = 2.0;     // random_range
  double z_max = 6.0;
  std::vector<MotionStep> trajectory;
  uint64_t seed = 0;

  int frame_count() const { return static_cast<int>(trajectory.size()) + 1; }
  void validate() const;
};

// Instantaneous pinhole motion field for one step, with the depth raster it
// was rendered from. For pixel offsets (x', y') from the principal point:
//   fx = (x'*Tz - f*Tx)/Z + x'*y'*wx/f - (f + x'^2/f)*wy + y'*wz
//   fy = (y'*Tz - f*Ty)/Z + (f + y'^2/f)*wx - x'*y'*wy - x'*wz
std::pair<FlowField, DepthMap> render_flow(const SceneSpec& scene, int step_index);

// Per-interval motion signals of the rendered scene.
std::vector<FrameMotion> scene_frame_motions(const SceneSpec& scene);

// Exact per-window signature of the scene; the stand-in for a learned
// third-person motion predictor. Matching it against the same scene's ego
// rasters scores exactly zero.
MotionPrediction oracle_prediction(const SceneSpec& scene, const WindowSpec& spec,
                                   std::string candidate_id);

// Knobs controlling how hard a synthetic query is.
struct QueryKnobs {
  WindowSpec window{};
  // distractor trajectories are the wearer's scaled by a seeded factor in
  // [scale_min, scale_max], optionally with rotation axes swapped or the
  // step order rotated
  double scale_min = 1.5;
  double scale_max = 3.0;
  bool rotation_swap = false;
  int time_shift = 0;
  // distractor 0 keeps the wearer's exact trajectory and depth field, making
  // the query unsolvable by motion alone
  bool identical_twin = false;
  int detections = 2;  // injected ego-view detections, never of the wearer
  double detection_alpha = 0.9;
  int embedding_dim = 16;
  double embedding_noise = 0.0;  // 0 = noiseless cluster centers
};

// Candidate layout for one query: per-candidate scenes in final (shuffled)
// candidate order, plus which position is the wearer.
struct QuerySetup {
  std::vector<SceneSpec> candidate_scenes;
  std::vector<std::string> candidate_ids;
  int wearer_index = 0;
  int twin_index = -1;  // -1 when no identical twin was requested
};

QuerySetup plan_query(const SceneSpec& wearer, int n_distractors, const QueryKnobs& knobs,
                      uint64_t seed);

std::vector<MotionPrediction> oracle_predictions(const QuerySetup& setup, const WindowSpec& spec);

// Full synthetic query: ego rasters from the wearer scene, oracle motion
// predictions for every candidate, Gaussian-cluster embeddings, injected
// detections, and rectangle masks. Ground truth is set.
QueryInstance make_query(const SceneSpec& wearer, int n_distractors, const QueryKnobs& knobs,
                         uint64_t seed);

}  // namespace maf
