#include "maf/query.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "json_util.hpp"

namespace maf {
namespace fs = std::filesystem;
using detail::json;

std::vector<std::string> QueryInstance::candidate_ids() const {
  std::vector<std::string> ids;
  ids.reserve(candidates.size());
  for (const MaskSequence& c : candidates) ids.push_back(c.candidate_id);
  return ids;
}

void QueryInstance::validate() const {
  if (t < 2) raise(Err::InvalidArgument, "query needs at least 2 frames");
  if (candidates.empty()) raise(Err::InvalidArgument, "query needs at least one candidate");
  const size_t intervals = static_cast<size_t>(t) - 1;
  if (ego_flow.size() != intervals || ego_depth.size() != intervals)
    raise(Err::InvalidArgument, "flow/depth lists must hold exactly t-1 entries");
  for (size_t i = 0; i < intervals; ++i) {
    ego_flow[i].validate();
    ego_depth[i].validate();
  }

  const size_t n = candidates.size();
  if (motion_predictions.size() != n)
    raise(Err::InvalidArgument, "one motion prediction per candidate required");
  if (candidate_embeddings.size() != n)
    raise(Err::InvalidArgument, "one embedding sequence per candidate required");

  size_t dim = 0;
  auto check_dim = [&dim](const Embedding& e) {
    e.validate();
    if (dim == 0) dim = e.dim();
    if (e.dim() != dim) raise(Err::InvalidArgument, "embedding dimensions differ within one query");
  };

  for (size_t c = 0; c < n; ++c) {
    const MaskSequence& seq = candidates[c];
    if (motion_predictions[c].candidate_id != seq.candidate_id ||
        candidate_embeddings[c].candidate_id != seq.candidate_id)
      raise(Err::InvalidArgument, "candidate order differs between masks, predictions and embeddings");
    if (static_cast<int>(seq.frames.size()) != t)
      raise(Err::InvalidArgument, "mask sequence of '" + seq.candidate_id + "' must have t frames");
    for (const auto& frame : seq.frames)
      if (frame) decode_rle(*frame, seq.width, seq.height);  // validates the run sums
    for (const PredictedWindow& w : motion_predictions[c].windows) {
      if (!std::isfinite(w.signature.t_total) || !std::isfinite(w.signature.r_total) ||
          w.signature.t_total < 0.0 || w.signature.r_total < 0.0)
        raise(Err::InvalidArgument, "predicted signatures must be finite and >= 0");
    }
    for (const FrameEmbedding& f : candidate_embeddings[c].frames) {
      if (f.frame_index < 0 || f.frame_index >= t)
        raise(Err::InvalidArgument, "embedding frame index out of range");
      check_dim(f.embedding);
    }
  }

  for (const Detection& det : detections) {
    if (det.frame_index < 0 || det.frame_index >= t)
      raise(Err::InvalidArgument, "detection frame index out of range");
    if (!std::isfinite(det.alpha_mask) || det.alpha_mask < 0.0 || det.alpha_mask > 1.0)
      raise(Err::InvalidArgument, "detection alpha_mask must lie in [0, 1]");
    check_dim(det.embedding);
  }

  if (ground_truth && (*ground_truth < 0 || *ground_truth >= static_cast<int>(n)))
    raise(Err::InvalidArgument, "ground truth index out of range");
}

namespace {

json embedding_to_json(const Embedding& e) {
  return json{{"dim", e.dim()}, {"values", e.values}};
}

Embedding embedding_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object()) raise(Err::ParseError, ctx + ": embedding must be an object");
  const int dim = detail::require_int(j, "dim", ctx);
  const json& values = detail::require_array(j, "values", ctx);
  if (dim < 1 || static_cast<size_t>(dim) != values.size())
    raise(Err::ParseError, ctx + ": embedding 'values' length must equal 'dim'");
  Embedding e;
  e.values.reserve(values.size());
  for (const json& v : values) {
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      raise(Err::ParseError, ctx + ": embedding values must be finite numbers");
    e.values.push_back(v.get<double>());
  }
  return e;
}

std::string format_index(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i);
  return buf;
}

// reorders file entries keyed by candidate_id into query candidate order
template <typename T>
std::vector<T> align_by_candidate(std::vector<T> items, const std::vector<std::string>& order,
                                  const std::string& ctx) {
  std::map<std::string, size_t> where;
  for (size_t i = 0; i < items.size(); ++i) {
    if (!where.emplace(items[i].candidate_id, i).second)
      raise(Err::ParseError, ctx + ": duplicate candidate_id '" + items[i].candidate_id + "'");
  }
  if (items.size() != order.size())
    raise(Err::ParseError, ctx + ": expected " + std::to_string(order.size()) + " candidates, found " +
                               std::to_string(items.size()));
  std::vector<T> aligned;
  aligned.reserve(order.size());
  for (const std::string& id : order) {
    auto it = where.find(id);
    if (it == where.end()) raise(Err::ParseError, ctx + ": missing candidate_id '" + id + "'");
    aligned.push_back(std::move(items[it->second]));
  }
  return aligned;
}

std::vector<MaskSequence> masks_from_json(const json& doc, const std::string& ctx) {
  if (!doc.is_array()) raise(Err::ParseError, ctx + ": expected a top-level array");
  std::vector<MaskSequence> seqs;
  for (const json& entry : doc) {
    MaskSequence seq;
    seq.candidate_id = detail::require_string(entry, "candidate_id", ctx);
    seq.width = detail::require_int(entry, "width", ctx);
    seq.height = detail::require_int(entry, "height", ctx);
    for (const json& frame : detail::require_array(entry, "frames", ctx)) {
      if (frame.is_null()) {
        seq.frames.emplace_back(std::nullopt);
        continue;
      }
      const json& runs = detail::require_array(frame, "runs", ctx);
      std::vector<int64_t> r;
      r.reserve(runs.size());
      for (const json& v : runs) {
        if (!v.is_number_integer()) raise(Err::ParseError, ctx + ": run lengths must be integers");
        r.push_back(v.get<int64_t>());
      }
      seq.frames.emplace_back(std::move(r));
    }
    seqs.push_back(std::move(seq));
  }
  return seqs;
}

json masks_to_json(const std::vector<MaskSequence>& seqs) {
  json doc = json::array();
  for (const MaskSequence& seq : seqs) {
    json frames = json::array();
    for (const auto& frame : seq.frames) {
      if (frame)
        frames.push_back(json{{"runs", *frame}});
      else
        frames.push_back(nullptr);
    }
    doc.push_back(json{{"candidate_id", seq.candidate_id},
                       {"width", seq.width},
                       {"height", seq.height},
                       {"frames", std::move(frames)}});
  }
  return doc;
}

std::vector<CandidateEmbeddings> embeddings_from_json(const json& doc, const std::string& ctx) {
  if (!doc.is_array()) raise(Err::ParseError, ctx + ": expected a top-level array");
  std::vector<CandidateEmbeddings> all;
  for (const json& entry : doc) {
    CandidateEmbeddings ce;
    ce.candidate_id = detail::require_string(entry, "candidate_id", ctx);
    for (const json& frame : detail::require_array(entry, "frames", ctx)) {
      FrameEmbedding fe;
      fe.frame_index = detail::require_int(frame, "frame_index", ctx);
      fe.embedding = embedding_from_json(detail::require(frame, "embedding", ctx), ctx);
      ce.frames.push_back(std::move(fe));
    }
    all.push_back(std::move(ce));
  }
  return all;
}

json embeddings_to_json(const std::vector<CandidateEmbeddings>& all) {
  json doc = json::array();
  for (const CandidateEmbeddings& ce : all) {
    json frames = json::array();
    for (const FrameEmbedding& fe : ce.frames)
      frames.push_back(json{{"frame_index", fe.frame_index}, {"embedding", embedding_to_json(fe.embedding)}});
    doc.push_back(json{{"candidate_id", ce.candidate_id}, {"frames", std::move(frames)}});
  }
  return doc;
}

std::vector<Detection> detections_from_json(const json& doc, const std::string& ctx) {
  if (!doc.is_array()) raise(Err::ParseError, ctx + ": expected a top-level array");
  std::vector<Detection> dets;
  for (const json& entry : doc) {
    Detection det;
    det.frame_index = detail::require_int(entry, "frame_index", ctx);
    det.alpha_mask = detail::require_double(entry, "alpha_mask", ctx);
    det.embedding = embedding_from_json(detail::require(entry, "embedding", ctx), ctx);
    dets.push_back(std::move(det));
  }
  return dets;
}

json detections_to_json(const std::vector<Detection>& dets) {
  json doc = json::array();
  for (const Detection& det : dets)
    doc.push_back(json{{"frame_index", det.frame_index},
                       {"alpha_mask", det.alpha_mask},
                       {"embedding", embedding_to_json(det.embedding)}});
  return doc;
}

std::vector<MotionPrediction> predictions_from_json(const json& doc, const std::string& ctx) {
  if (!doc.is_array()) raise(Err::ParseError, ctx + ": expected a top-level array");
  std::vector<MotionPrediction> preds;
  for (const json& entry : doc) {
    MotionPrediction pred;
    pred.candidate_id = detail::require_string(entry, "candidate_id", ctx);
    for (const json& w : detail::require_array(entry, "windows", ctx)) {
      PredictedWindow pw;
      pw.window.start = detail::require_int(w, "start", ctx);
      pw.window.length = detail::require_int(w, "length", ctx);
      pw.signature.t_total = detail::require_double(w, "t_exo", ctx);
      pw.signature.r_total = detail::require_double(w, "r_exo", ctx);
      if (pw.signature.t_total < 0.0 || pw.signature.r_total < 0.0)
        raise(Err::ParseError, ctx + ": predicted signatures must be >= 0");
      pred.windows.push_back(std::move(pw));
    }
    preds.push_back(std::move(pred));
  }
  return preds;
}

json predictions_to_json(const std::vector<MotionPrediction>& preds) {
  json doc = json::array();
  for (const MotionPrediction& pred : preds) {
    json windows = json::array();
    for (const PredictedWindow& pw : pred.windows)
      windows.push_back(json{{"start", pw.window.start},
                             {"length", pw.window.length},
                             {"t_exo", pw.signature.t_total},
                             {"r_exo", pw.signature.r_total}});
    doc.push_back(json{{"candidate_id", pred.candidate_id}, {"windows", std::move(windows)}});
  }
  return doc;
}

}  // namespace

QueryInstance load_query(const fs::path& path) {
  const fs::path query_json = fs::is_directory(path) ? path / "query.json" : path;
  const fs::path dir = query_json.parent_path();
  const std::string ctx = query_json.string();
  const json doc = detail::parse_json_file(query_json);

  QueryInstance query;
  query.t = detail::require_int(doc, "t", ctx);

  std::vector<std::string> order;
  for (const json& id : detail::require_array(doc, "candidates", ctx)) {
    if (!id.is_string()) raise(Err::ParseError, ctx + ": candidate ids must be strings");
    order.push_back(id.get<std::string>());
  }
  if (std::set<std::string>(order.begin(), order.end()).size() != order.size())
    raise(Err::ParseError, ctx + ": duplicate candidate ids");

  auto resolve = [&dir](const std::string& rel) { return dir / rel; };

  for (const json& rel : detail::require_array(doc, "flow", ctx)) {
    if (!rel.is_string()) raise(Err::ParseError, ctx + ": flow entries must be path strings");
    query.ego_flow.push_back(read_flow(resolve(rel.get<std::string>())));
  }
  for (const json& rel : detail::require_array(doc, "depth", ctx)) {
    if (!rel.is_string()) raise(Err::ParseError, ctx + ": depth entries must be path strings");
    query.ego_depth.push_back(read_depth(resolve(rel.get<std::string>())));
  }

  const fs::path masks_path = resolve(detail::require_string(doc, "masks", ctx));
  query.candidates =
      align_by_candidate(masks_from_json(detail::parse_json_file(masks_path), masks_path.string()),
                         order, masks_path.string());

  const fs::path emb_path = resolve(detail::require_string(doc, "embeddings", ctx));
  query.candidate_embeddings = align_by_candidate(
      embeddings_from_json(detail::parse_json_file(emb_path), emb_path.string()), order,
      emb_path.string());

  const fs::path det_path = resolve(detail::require_string(doc, "detections", ctx));
  query.detections = detections_from_json(detail::parse_json_file(det_path), det_path.string());

  const fs::path pred_path = resolve(detail::require_string(doc, "predictions", ctx));
  query.motion_predictions = align_by_candidate(
      predictions_from_json(detail::parse_json_file(pred_path), pred_path.string()), order,
      pred_path.string());

  const json& gt = detail::require(doc, "ground_truth", ctx);
  if (!gt.is_null()) {
    if (!gt.is_string()) raise(Err::ParseError, ctx + ": ground_truth must be a candidate id or null");
    const auto it = std::find(order.begin(), order.end(), gt.get<std::string>());
    if (it == order.end())
      raise(Err::ParseError, ctx + ": ground_truth '" + gt.get<std::string>() + "' is not a candidate");
    query.ground_truth = static_cast<int>(it - order.begin());
  }

  try {
    query.validate();
  } catch (const MafError& e) {
    raise(Err::ParseError, ctx + ": " + e.what());
  }
  return query;
}

void save_query(const fs::path& dir, const QueryInstance& query) {
  query.validate();
  fs::create_directories(dir / "flow");
  fs::create_directories(dir / "depth");

  json flow_paths = json::array();
  json depth_paths = json::array();
  for (size_t i = 0; i < query.ego_flow.size(); ++i) {
    const std::string flow_rel = "flow/" + format_index(static_cast<int>(i)) + ".flo";
    const std::string depth_rel = "depth/" + format_index(static_cast<int>(i)) + ".pfm";
    write_flow(dir / flow_rel, query.ego_flow[i]);
    write_depth(dir / depth_rel, query.ego_depth[i]);
    flow_paths.push_back(flow_rel);
    depth_paths.push_back(depth_rel);
  }

  detail::write_json_file(dir / "masks.json", masks_to_json(query.candidates));
  detail::write_json_file(dir / "embeddings.json", embeddings_to_json(query.candidate_embeddings));
  detail::write_json_file(dir / "detections.json", detections_to_json(query.detections));
  detail::write_json_file(dir / "predictions.json", predictions_to_json(query.motion_predictions));

  json doc{{"schema_version", 1},
           {"t", query.t},
           {"candidates", query.candidate_ids()},
           {"ground_truth",
            query.ground_truth ? json(query.candidates[static_cast<size_t>(*query.ground_truth)].candidate_id)
                               : json(nullptr)},
           {"flow", std::move(flow_paths)},
           {"depth", std::move(depth_paths)},
           {"masks", "masks.json"},
           {"embeddings", "embeddings.json"},
           {"detections", "detections.json"},
           {"predictions", "predictions.json"}};
  detail::write_json_file(dir / "query.json", doc);
}

}  // namespace maf
