#include "maf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maf {

namespace {

// fixed stream ids so knob changes do not shift unrelated draws
enum Stream : uint64_t {
  kDepth = 0x0d,
  kPlan = 0x11,
  kEmbedding = 0x21,
  kDetection = 0x31,
  kMask = 0x41,
};

double rotation_norm(const MotionStep& s) {
  return std::sqrt(s.wx * s.wx + s.wy * s.wy + s.wz * s.wz);
}

MotionStep clamp_rotation(MotionStep s) {
  const double norm = rotation_norm(s);
  if (norm > max_rotation_rate) {
    const double k = max_rotation_rate / norm;
    s.wx *= k;
    s.wy *= k;
    s.wz *= k;
  }
  return s;
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (width < 1 || height < 1) raise(Err::InvalidArgument, "camera resolution must be positive");
  if (!(focal > 0.0) || !std::isfinite(focal)) raise(Err::InvalidArgument, "focal length must be > 0");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    raise(Err::InvalidArgument, "principal point must lie inside the image");
}

void SceneSpec::validate() const {
  intrinsics.validate();
  if (depth_model == DepthModel::constant_plane) {
    if (!(z_plane > 0.0) || !std::isfinite(z_plane))
      raise(Err::InvalidArgument, "plane depth must be > 0");
  } else {
    if (!(z_min > 0.0) || !(z_max >= z_min) || !std::isfinite(z_max))
      raise(Err::InvalidArgument, "depth range must satisfy 0 < z_min <= z_max");
  }
  if (trajectory.empty()) raise(Err::InvalidArgument, "trajectory must contain at least one step");
  for (const MotionStep& s : trajectory) {
    if (!std::isfinite(s.tx) || !std::isfinite(s.ty) || !std::isfinite(s.tz) ||
        !std::isfinite(s.wx) || !std::isfinite(s.wy) || !std::isfinite(s.wz))
      raise(Err::InvalidArgument, "motion step has non-finite components");
    if (rotation_norm(s) > max_rotation_rate + 1e-12)
      raise(Err::InvalidArgument, "rotation rate exceeds the small-angle limit of " +
                                      std::to_string(max_rotation_rate) + " rad/frame");
  }
}

std::pair<FlowField, DepthMap> render_flow(const SceneSpec& scene, int step_index) {
  scene.validate();
  if (step_index < 0 || step_index >= static_cast<int>(scene.trajectory.size()))
    raise(Err::OutOfRange, "step index outside the trajectory");

  const CameraIntrinsics& cam = scene.intrinsics;
  const MotionStep& step = scene.trajectory[static_cast<size_t>(step_index)];
  const size_t n = static_cast<size_t>(cam.width) * static_cast<size_t>(cam.height);

  FlowField flow;
  flow.width = cam.width;
  flow.height = cam.height;
  flow.fx.resize(n);
  flow.fy.resize(n);
  flow.valid.assign(n, 1);

  DepthMap depth;
  depth.width = cam.width;
  depth.height = cam.height;
  depth.z.resize(n);
  depth.valid.assign(n, 1);

  Rng rng(Rng::mix(scene.seed, Rng::mix(kDepth, static_cast<uint64_t>(step_index))));
  const double f = cam.focal;
  size_t i = 0;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x, ++i) {
      const double z = scene.depth_model == DepthModel::constant_plane
                           ? scene.z_plane
                           : rng.uniform(scene.z_min, scene.z_max);
      const double xp = static_cast<double>(x) - cam.cx;
      const double yp = static_cast<double>(y) - cam.cy;
      flow.fx[i] = (xp * step.tz - f * step.tx) / z +
                   (xp * yp * step.wx / f - (f + xp * xp / f) * step.wy + yp * step.wz);
      flow.fy[i] = (yp * step.tz - f * step.ty) / z +
                   ((f + yp * yp / f) * step.wx - xp * yp * step.wy - xp * step.wz);
      depth.z[i] = z;
    }
  }
  return {std::move(flow), std::move(depth)};
}

std::vector<FrameMotion> scene_frame_motions(const SceneSpec& scene) {
  std::vector<FrameMotion> frames;
  frames.reserve(scene.trajectory.size());
  for (int i = 0; i < static_cast<int>(scene.trajectory.size()); ++i) {
    const auto [flow, depth] = render_flow(scene, i);
    frames.push_back(frame_motion(flow, depth));
  }
  return frames;
}

MotionPrediction oracle_prediction(const SceneSpec& scene, const WindowSpec& spec,
                                   std::string candidate_id) {
  const std::vector<FrameMotion> frames = scene_frame_motions(scene);
  const auto windows = make_windows(static_cast<int>(frames.size()), spec);
  MotionPrediction pred;
  pred.candidate_id = std::move(candidate_id);
  pred.windows.reserve(windows.size());
  for (const Window& w : windows)
    pred.windows.push_back(
        {w, window_motion(frames, static_cast<size_t>(w.start), static_cast<size_t>(w.length))});
  return pred;
}

QuerySetup plan_query(const SceneSpec& wearer, int n_distractors, const QueryKnobs& knobs,
                      uint64_t seed) {
  wearer.validate();
  if (n_distractors < 0) raise(Err::InvalidArgument, "n_distractors must be >= 0");

  Rng rng(Rng::mix(seed, kPlan));
  std::vector<SceneSpec> scenes;
  scenes.reserve(static_cast<size_t>(n_distractors) + 1);
  scenes.push_back(wearer);
  std::vector<int> identity(1, 0);  // 0 = wearer, k+1 = distractor k

  for (int k = 0; k < n_distractors; ++k) {
    SceneSpec s = wearer;
    const bool twin = knobs.identical_twin && k == 0;
    if (!twin) {
      s.seed = Rng::mix(seed, 0x100 + static_cast<uint64_t>(k));
      const double scale = rng.uniform(knobs.scale_min, knobs.scale_max);
      const bool swap = knobs.rotation_swap && rng.coin();
      for (MotionStep& step : s.trajectory) {
        step.tx *= scale;
        step.ty *= scale;
        step.tz *= scale;
        step.wx *= scale;
        step.wy *= scale;
        step.wz *= scale;
        if (swap) std::swap(step.wx, step.wy);
        step = clamp_rotation(step);
      }
      if (knobs.time_shift != 0 && s.trajectory.size() > 1) {
        const auto shift = static_cast<size_t>(knobs.time_shift) % s.trajectory.size();
        std::rotate(s.trajectory.begin(), s.trajectory.begin() + static_cast<ptrdiff_t>(shift),
                    s.trajectory.end());
      }
    }
    scenes.push_back(std::move(s));
    identity.push_back(k + 1);
  }

  // shuffle candidate positions so the wearer's index carries no information
  std::vector<size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  QuerySetup setup;
  setup.candidate_scenes.reserve(scenes.size());
  for (size_t pos = 0; pos < order.size(); ++pos) {
    setup.candidate_scenes.push_back(scenes[order[pos]]);
    setup.candidate_ids.push_back("c" + std::to_string(pos));
    if (identity[order[pos]] == 0) setup.wearer_index = static_cast<int>(pos);
    if (knobs.identical_twin && identity[order[pos]] == 1) setup.twin_index = static_cast<int>(pos);
  }
  // the twin must sit before the wearer, otherwise the motion tie-break
  // would resolve the query without appearance evidence
  if (setup.twin_index >= 0 && setup.twin_index > setup.wearer_index) {
    std::swap(setup.candidate_scenes[static_cast<size_t>(setup.twin_index)],
              setup.candidate_scenes[static_cast<size_t>(setup.wearer_index)]);
    std::swap(setup.wearer_index, setup.twin_index);
  }
  return setup;
}

std::vector<MotionPrediction> oracle_predictions(const QuerySetup& setup, const WindowSpec& spec) {
  std::vector<MotionPrediction> preds;
  preds.reserve(setup.candidate_scenes.size());
  for (size_t i = 0; i < setup.candidate_scenes.size(); ++i)
    preds.push_back(oracle_prediction(setup.candidate_scenes[i], spec, setup.candidate_ids[i]));
  return preds;
}

namespace {

MaskSequence make_mask_sequence(const std::string& id, const CameraIntrinsics& cam, int t, Rng& rng) {
  const int mw = std::max(1, cam.width / 4);
  const int mh = std::max(1, cam.height / 2);
  const int left = static_cast<int>(rng.below(static_cast<uint64_t>(cam.width - mw + 1)));
  const int top = static_cast<int>(rng.below(static_cast<uint64_t>(cam.height - mh + 1)));

  Mask mask;
  mask.width = cam.width;
  mask.height = cam.height;
  mask.data.assign(static_cast<size_t>(cam.width) * cam.height, 0);
  for (int y = top; y < top + mh; ++y)
    for (int x = left; x < left + mw; ++x)
      mask.data[static_cast<size_t>(y) * cam.width + x] = 1;

  MaskSequence seq;
  seq.candidate_id = id;
  seq.width = cam.width;
  seq.height = cam.height;
  seq.frames.assign(static_cast<size_t>(t), encode_rle(mask));
  return seq;
}

}  // namespace

QueryInstance make_query(const SceneSpec& wearer, int n_distractors, const QueryKnobs& knobs,
                         uint64_t seed) {
  const QuerySetup setup = plan_query(wearer, n_distractors, knobs, seed);
  const int t = wearer.frame_count();
  const size_t n = setup.candidate_scenes.size();

  QueryInstance query;
  query.t = t;
  query.ground_truth = setup.wearer_index;

  query.ego_flow.reserve(static_cast<size_t>(t) - 1);
  query.ego_depth.reserve(static_cast<size_t>(t) - 1);
  const SceneSpec& wearer_scene = setup.candidate_scenes[static_cast<size_t>(setup.wearer_index)];
  for (int i = 0; i < t - 1; ++i) {
    auto [flow, depth] = render_flow(wearer_scene, i);
    query.ego_flow.push_back(std::move(flow));
    query.ego_depth.push_back(std::move(depth));
  }

  query.motion_predictions = oracle_predictions(setup, knobs.window);

  // one Gaussian cluster center per identity; per-frame embeddings are the
  // center plus optional noise
  Rng erng(Rng::mix(seed, kEmbedding));
  const int dim = std::max(1, knobs.embedding_dim);
  std::vector<Embedding> centers(n);
  for (size_t c = 0; c < n; ++c) {
    centers[c].values.resize(static_cast<size_t>(dim));
    for (double& v : centers[c].values) v = 3.0 * erng.gaussian();
  }
  for (size_t c = 0; c < n; ++c) {
    CandidateEmbeddings ce;
    ce.candidate_id = setup.candidate_ids[c];
    ce.frames.reserve(static_cast<size_t>(t));
    for (int frame = 0; frame < t; ++frame) {
      Embedding e = centers[c];
      if (knobs.embedding_noise > 0.0)
        for (double& v : e.values) v += knobs.embedding_noise * erng.gaussian();
      ce.frames.push_back({frame, std::move(e)});
    }
    query.candidate_embeddings.push_back(std::move(ce));
  }

  // detections target non-wearers only: wearers never see themselves
  Rng drng(Rng::mix(seed, kDetection));
  const std::vector<int> det_frames = distinct_frames(select_frames(t));
  std::vector<size_t> non_wearers;
  for (size_t c = 0; c < n; ++c)
    if (static_cast<int>(c) != setup.wearer_index) non_wearers.push_back(c);
  const int m = non_wearers.empty() ? 0 : knobs.detections;
  for (int d = 0; d < m; ++d) {
    size_t target;
    if (knobs.identical_twin && d == 0 && setup.twin_index >= 0)
      target = static_cast<size_t>(setup.twin_index);
    else
      target = non_wearers[static_cast<size_t>(drng.below(non_wearers.size()))];
    Detection det;
    det.frame_index = det_frames[static_cast<size_t>(drng.below(det_frames.size()))];
    det.alpha_mask = knobs.detection_alpha;
    det.embedding = centers[target];
    if (knobs.embedding_noise > 0.0)
      for (double& v : det.embedding.values) v += knobs.embedding_noise * drng.gaussian();
    query.detections.push_back(std::move(det));
  }

  Rng mrng(Rng::mix(seed, kMask));
  for (size_t c = 0; c < n; ++c)
    query.candidates.push_back(
        make_mask_sequence(setup.candidate_ids[c], wearer.intrinsics, t, mrng));

  query.validate();
  return query;
}

}  // namespace maf
