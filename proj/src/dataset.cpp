#include "maf/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "json_util.hpp"
#include "maf/appearance_match.hpp"
#include "maf/ego_motion.hpp"
#include "maf/rng.hpp"

namespace maf {
namespace fs = std::filesystem;
using detail::json;

bool is_known_source_tag(const std::string& tag) {
  return tag == source_tag_tf2023 || tag == source_tag_iushareview || tag == source_tag_ego4d_tf ||
         tag == source_tag_synthetic;
}

const std::string& SequenceRecord::wearer_candidate_id() const {
  for (const CandidateRef& c : candidates)
    if (c.is_wearer) return c.candidate_id;
  raise(Err::InvalidArgument, "sequence '" + sequence_id + "' has no wearer candidate");
}

void DatasetManifest::validate() const {
  std::set<std::string> ids;
  for (const SequenceRecord& seq : sequences) {
    if (!ids.insert(seq.sequence_id).second)
      raise(Err::InvalidArgument, "duplicate sequence id '" + seq.sequence_id + "'");
    if (!is_known_source_tag(seq.source_tag))
      raise(Err::InvalidArgument, "sequence '" + seq.sequence_id + "' has unknown source tag '" +
                                      seq.source_tag + "'");
    if (seq.t < 2)
      raise(Err::InvalidArgument, "sequence '" + seq.sequence_id + "' must have t >= 2");
    int wearers = 0;
    std::set<std::string> cand_ids;
    for (const CandidateRef& c : seq.candidates) {
      wearers += c.is_wearer ? 1 : 0;
      if (!cand_ids.insert(c.candidate_id).second)
        raise(Err::InvalidArgument,
              "sequence '" + seq.sequence_id + "' lists candidate '" + c.candidate_id + "' twice");
    }
    if (wearers != 1)
      raise(Err::InvalidArgument,
            "sequence '" + seq.sequence_id + "' must flag exactly one ground-truth candidate");
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  const std::string ctx = path.string();
  const json doc = detail::parse_json_file(path);
  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  for (const json& s : detail::require_array(doc, "sequences", ctx)) {
    SequenceRecord seq;
    seq.sequence_id = detail::require_string(s, "sequence_id", ctx);
    seq.video_id = detail::require_string(s, "video_id", ctx);
    seq.wearer_id = detail::require_string(s, "wearer_id", ctx);
    seq.source_tag = detail::require_string(s, "source_tag", ctx);
    seq.t = detail::require_int(s, "t", ctx);
    const json& ti = detail::require(s, "temporal_index", ctx);
    if (!ti.is_null()) {
      if (!ti.is_number_integer()) raise(Err::ParseError, ctx + ": temporal_index must be an integer or null");
      seq.temporal_index = ti.get<int>();
    }
    seq.query_dir = detail::require_string(s, "query_dir", ctx);
    for (const json& c : detail::require_array(s, "candidates", ctx)) {
      CandidateRef ref;
      ref.candidate_id = detail::require_string(c, "candidate_id", ctx);
      const json& w = detail::require(c, "is_wearer", ctx);
      if (!w.is_boolean()) raise(Err::ParseError, ctx + ": is_wearer must be a boolean");
      ref.is_wearer = w.get<bool>();
      seq.candidates.push_back(std::move(ref));
    }
    manifest.sequences.push_back(std::move(seq));
  }
  try {
    manifest.validate();
  } catch (const MafError& e) {
    raise(Err::ParseError, ctx + ": " + e.what());
  }
  return manifest;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  manifest.validate();
  json sequences = json::array();
  for (const SequenceRecord& seq : manifest.sequences) {
    json candidates = json::array();
    for (const CandidateRef& c : seq.candidates)
      candidates.push_back(json{{"candidate_id", c.candidate_id}, {"is_wearer", c.is_wearer}});
    sequences.push_back(json{{"sequence_id", seq.sequence_id},
                             {"video_id", seq.video_id},
                             {"wearer_id", seq.wearer_id},
                             {"source_tag", seq.source_tag},
                             {"t", seq.t},
                             {"temporal_index", seq.temporal_index ? json(*seq.temporal_index) : json(nullptr)},
                             {"query_dir", seq.query_dir},
                             {"candidates", std::move(candidates)}});
  }
  detail::write_json_file(path, json{{"schema_version", 1}, {"sequences", std::move(sequences)}});
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

namespace {

bool in_paper_training_universe(const SequenceRecord& seq) {
  return seq.source_tag == source_tag_tf2023 || seq.source_tag == source_tag_iushareview;
}

// sequences grouped by video, preserving first-appearance video order
std::vector<std::pair<std::string, std::vector<const SequenceRecord*>>> group_by_video(
    const DatasetManifest& manifest) {
  std::vector<std::pair<std::string, std::vector<const SequenceRecord*>>> groups;
  std::map<std::string, size_t> index;
  for (const SequenceRecord& seq : manifest.sequences) {
    if (!in_paper_training_universe(seq)) continue;
    auto [it, inserted] = index.emplace(seq.video_id, groups.size());
    if (inserted) groups.push_back({seq.video_id, {}});
    groups[it->second].second.push_back(&seq);
  }
  return groups;
}

int ceil_80_percent(int n) { return (4 * n + 4) / 5; }

}  // namespace

SplitAssignment split_seen(const DatasetManifest& manifest) {
  SplitAssignment split;
  split.name = "seen";
  for (auto& [video_id, seqs] : group_by_video(manifest)) {
    std::set<int> seen_indices;
    for (const SequenceRecord* seq : seqs) {
      if (!seq->temporal_index)
        raise(Err::UnorderedVideo, "video '" + video_id + "' has sequences without a temporal_index");
      if (!seen_indices.insert(*seq->temporal_index).second)
        raise(Err::UnorderedVideo, "video '" + video_id + "' has duplicate temporal indices");
    }
    std::sort(seqs.begin(), seqs.end(), [](const SequenceRecord* a, const SequenceRecord* b) {
      return *a->temporal_index < *b->temporal_index;
    });
    const int n_train = ceil_80_percent(static_cast<int>(seqs.size()));
    for (size_t i = 0; i < seqs.size(); ++i)
      (static_cast<int>(i) < n_train ? split.train : split.test).push_back(seqs[i]->sequence_id);
  }
  return split;
}

SplitAssignment split_unseen(const DatasetManifest& manifest, uint64_t seed) {
  const auto groups = group_by_video(manifest);

  // union-find over videos joined by any shared wearer id
  std::vector<size_t> parent(groups.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<size_t(size_t)> find = [&](size_t v) {
    return parent[v] == v ? v : parent[v] = find(parent[v]);
  };
  std::map<std::string, size_t> wearer_first_video;
  for (size_t g = 0; g < groups.size(); ++g)
    for (const SequenceRecord* seq : groups[g].second) {
      auto [it, inserted] = wearer_first_video.emplace(seq->wearer_id, g);
      if (!inserted) parent[find(g)] = find(it->second);
    }

  struct Component {
    std::vector<size_t> videos;
    int sequence_count = 0;
  };
  std::vector<Component> components;
  std::map<size_t, size_t> root_to_component;
  for (size_t g = 0; g < groups.size(); ++g) {
    const size_t root = find(g);
    auto [it, inserted] = root_to_component.emplace(root, components.size());
    if (inserted) components.push_back({});
    components[it->second].videos.push_back(g);
    components[it->second].sequence_count += static_cast<int>(groups[g].second.size());
  }

  if (components.size() < 2)
    raise(Err::InfeasiblePartition,
          "all videos share one wearer component; train and test cannot be wearer-disjoint");

  std::vector<size_t> order(components.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::mix(seed, 0x5411));
  rng.shuffle(order);

  const int total = std::accumulate(components.begin(), components.end(), 0,
                                    [](int acc, const Component& c) { return acc + c.sequence_count; });
  const double target = 0.8 * total;

  // greedy: a component goes to train only when that strictly improves the
  // distance to the 80% target, so the test side fills on ties
  std::vector<char> to_train(components.size(), 0);
  double train_count = 0;
  for (size_t idx : order) {
    const double with = std::abs(train_count + components[idx].sequence_count - target);
    const double without = std::abs(train_count - target);
    if (with < without) {
      to_train[idx] = 1;
      train_count += components[idx].sequence_count;
    }
  }

  // both sides must be non-empty; move the component that lands closest to
  // the target when switched
  auto count_side = [&](bool train) {
    int c = 0;
    for (size_t i = 0; i < components.size(); ++i)
      if (static_cast<bool>(to_train[i]) == train) ++c;
    return c;
  };
  for (const bool fix_train : {false, true}) {
    if (count_side(fix_train) > 0) continue;
    size_t best = order[0];
    double best_dist = std::numeric_limits<double>::infinity();
    for (size_t idx : order) {
      if (static_cast<bool>(to_train[idx]) == fix_train) continue;
      const double moved = fix_train ? train_count + components[idx].sequence_count
                                     : train_count - components[idx].sequence_count;
      const double dist = std::abs(moved - target);
      if (dist < best_dist) {
        best_dist = dist;
        best = idx;
      }
    }
    to_train[best] = fix_train ? 1 : 0;
    train_count += fix_train ? components[best].sequence_count : -components[best].sequence_count;
  }

  SplitAssignment split;
  split.name = "unseen";
  for (size_t c = 0; c < components.size(); ++c)
    for (size_t g : components[c].videos)
      for (const SequenceRecord* seq : groups[g].second)
        (to_train[c] ? split.train : split.test).push_back(seq->sequence_id);
  return split;
}

SplitAssignment split_cross_dataset(const DatasetManifest& manifest) {
  SplitAssignment split;
  split.name = "cross_dataset";
  for (const SequenceRecord& seq : manifest.sequences) {
    if (in_paper_training_universe(seq))
      split.train.push_back(seq.sequence_id);
    else if (seq.source_tag == source_tag_ego4d_tf)
      split.test.push_back(seq.sequence_id);
  }
  if (split.train.empty())
    raise(Err::EmptySide, "cross-dataset split has no tf2023/iushareview sequences to train on");
  if (split.test.empty())
    raise(Err::EmptySide, "cross-dataset split has no ego4d_tf sequences to test on");
  return split;
}

SplitAssignment split_all(const DatasetManifest& manifest) {
  SplitAssignment split;
  split.name = "all";
  for (const SequenceRecord& seq : manifest.sequences) split.test.push_back(seq.sequence_id);
  return split;
}

std::vector<std::string> split_names() { return {"seen", "unseen", "cross_dataset", "all"}; }

SplitAssignment make_split(const DatasetManifest& manifest, const std::string& name, uint64_t seed) {
  if (name == "seen") return split_seen(manifest);
  if (name == "unseen") return split_unseen(manifest, seed);
  if (name == "cross_dataset") return split_cross_dataset(manifest);
  if (name == "all") return split_all(manifest);
  std::string names;
  for (const std::string& n : split_names()) names += (names.empty() ? "" : ", ") + n;
  raise(Err::InvalidArgument, "unknown split '" + name + "' (valid: " + names + ")");
}

json split_to_json(const SplitAssignment& split) {
  return json{{"schema_version", 1}, {"split", split.name}, {"train", split.train}, {"test", split.test}};
}

// ---------------------------------------------------------------------------
// Pipeline + evaluation
// ---------------------------------------------------------------------------

json PipelineConfig::to_json() const {
  return json{{"window_length", window.length},
              {"window_stride", window.stride},
              {"normalization", normalization_name(norm)},
              {"lambda_trust", lambda_trust},
              {"explain", explain}};
}

QueryOutcome run_query(const QueryInstance& query, const PipelineConfig& cfg) {
  query.validate();
  std::vector<FrameMotion> frames;
  frames.reserve(query.ego_flow.size());
  for (size_t i = 0; i < query.ego_flow.size(); ++i)
    frames.push_back(frame_motion(query.ego_flow[i], query.ego_depth[i]));

  ScoreSource motion = rank_candidates(frames, query.motion_predictions, cfg.window, cfg.norm);
  std::vector<ScoreSource> appearance =
      build_sources(query.detections, query.candidate_embeddings, {cfg.lambda_trust});

  FusionResult fused = fuse(FusionState::make(std::move(motion), std::move(appearance)));
  return {fused.predicted, std::move(fused.trace)};
}

namespace {

template <typename Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
  const size_t workers = std::min<size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& th : pool) th.join();
}

}  // namespace

EvalReport evaluate(const DatasetManifest& manifest, const SplitAssignment& split,
                    const PipelineConfig& cfg) {
  manifest.validate();
  if (split.test.empty()) raise(Err::EmptySide, "split '" + split.name + "' has an empty test side");

  std::map<std::string, const SequenceRecord*> by_id;
  for (const SequenceRecord& seq : manifest.sequences) by_id.emplace(seq.sequence_id, &seq);

  std::vector<const SequenceRecord*> test_seqs;
  test_seqs.reserve(split.test.size());
  for (const std::string& id : split.test) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      raise(Err::InvalidArgument, "split references unknown sequence '" + id + "'");
    test_seqs.push_back(it->second);
  }

  struct Slot {
    bool ok = false;
    int candidate_count = 0;
    ReportRow row;
    std::string error;
  };
  std::vector<Slot> slots(test_seqs.size());

  parallel_for(test_seqs.size(), cfg.jobs, [&](size_t i) {
    const SequenceRecord& seq = *test_seqs[i];
    Slot& slot = slots[i];
    slot.row.sequence_id = seq.sequence_id;
    slot.row.source_tag = seq.source_tag;
    try {
      const QueryInstance query = load_query(manifest.base_dir / seq.query_dir);
      const QueryOutcome outcome = run_query(query, cfg);
      slot.row.predicted = query.candidates[static_cast<size_t>(outcome.predicted)].candidate_id;
      slot.row.ground_truth = seq.wearer_candidate_id();
      slot.row.correct = slot.row.predicted == slot.row.ground_truth;
      slot.row.trace = cfg.explain ? trace_to_json(outcome.trace, query.candidate_ids()) : json(nullptr);
      slot.candidate_count = static_cast<int>(query.candidate_count());
      slot.ok = true;
    } catch (const MafError& e) {
      slot.error = std::string(err_name(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });

  EvalReport report;
  report.split = split.name;
  report.config = cfg;
  report.test_sequences = static_cast<int>(test_seqs.size());

  std::map<std::string, TagStats> tags;
  int64_t candidate_total = 0;
  for (Slot& slot : slots) {
    if (!slot.ok) {
      ++report.failed;
      report.failures.push_back({slot.row.sequence_id, slot.error});
      continue;
    }
    ++report.evaluated;
    candidate_total += slot.candidate_count;
    TagStats& ts = tags[slot.row.source_tag];
    ++ts.evaluated;
    if (slot.row.correct) {
      ++ts.correct;
      ++report.correct;
    }
    report.results.push_back(std::move(slot.row));
  }
  report.top1_accuracy =
      report.evaluated > 0 ? static_cast<double>(report.correct) / report.evaluated : 0.0;
  report.mean_candidate_count =
      report.evaluated > 0 ? static_cast<double>(candidate_total) / report.evaluated : 0.0;
  report.per_source_tag.assign(tags.begin(), tags.end());

  auto by_sequence = [](const auto& a, const auto& b) { return a.sequence_id < b.sequence_id; };
  std::sort(report.results.begin(), report.results.end(), by_sequence);
  std::sort(report.failures.begin(), report.failures.end(), by_sequence);
  return report;
}

json report_to_json(const EvalReport& report) {
  json tags = json::object();
  for (const auto& [tag, stats] : report.per_source_tag)
    tags[tag] = json{{"evaluated", stats.evaluated},
                     {"correct", stats.correct},
                     {"top1_accuracy",
                      stats.evaluated > 0 ? static_cast<double>(stats.correct) / stats.evaluated : 0.0}};

  json results = json::array();
  for (const ReportRow& row : report.results) {
    json r{{"sequence_id", row.sequence_id},
           {"source_tag", row.source_tag},
           {"ground_truth", row.ground_truth},
           {"predicted", row.predicted},
           {"correct", row.correct}};
    if (!row.trace.is_null()) r["trace"] = row.trace;
    results.push_back(std::move(r));
  }

  json failures = json::array();
  for (const ReportFailure& f : report.failures)
    failures.push_back(json{{"sequence_id", f.sequence_id}, {"error", f.error}});

  return json{{"schema_version", 1},
              {"split", report.split},
              {"config", report.config.to_json()},
              {"totals", json{{"test_sequences", report.test_sequences},
                              {"evaluated", report.evaluated},
                              {"failed", report.failed},
                              {"correct", report.correct},
                              {"top1_accuracy", report.top1_accuracy},
                              {"mean_candidate_count", report.mean_candidate_count}}},
              {"per_source_tag", std::move(tags)},
              {"results", std::move(results)},
              {"failures", std::move(failures)}};
}

EvalReport report_from_json(const json& doc, const std::string& ctx) {
  EvalReport report;
  report.split = detail::require_string(doc, "split", ctx);
  const json& cfg = detail::require(doc, "config", ctx);
  report.config.window =
      WindowSpec(detail::require_int(cfg, "window_length", ctx), detail::require_int(cfg, "window_stride", ctx));
  report.config.norm = normalization_from_name(detail::require_string(cfg, "normalization", ctx));
  report.config.lambda_trust = detail::require_double(cfg, "lambda_trust", ctx);
  report.config.explain = detail::require(cfg, "explain", ctx).get<bool>();

  const json& totals = detail::require(doc, "totals", ctx);
  report.test_sequences = detail::require_int(totals, "test_sequences", ctx);
  report.evaluated = detail::require_int(totals, "evaluated", ctx);
  report.failed = detail::require_int(totals, "failed", ctx);
  report.correct = detail::require_int(totals, "correct", ctx);
  report.top1_accuracy = detail::require_double(totals, "top1_accuracy", ctx);
  report.mean_candidate_count = detail::require_double(totals, "mean_candidate_count", ctx);

  const json& tags = detail::require(doc, "per_source_tag", ctx);
  if (!tags.is_object()) raise(Err::ParseError, ctx + ": per_source_tag must be an object");
  for (auto it = tags.begin(); it != tags.end(); ++it) {
    TagStats stats;
    stats.evaluated = detail::require_int(it.value(), "evaluated", ctx);
    stats.correct = detail::require_int(it.value(), "correct", ctx);
    report.per_source_tag.emplace_back(it.key(), stats);
  }

  for (const json& r : detail::require_array(doc, "results", ctx)) {
    ReportRow row;
    row.sequence_id = detail::require_string(r, "sequence_id", ctx);
    row.source_tag = detail::require_string(r, "source_tag", ctx);
    row.ground_truth = detail::require_string(r, "ground_truth", ctx);
    row.predicted = detail::require_string(r, "predicted", ctx);
    row.correct = detail::require(r, "correct", ctx).get<bool>();
    row.trace = r.contains("trace") ? r["trace"] : json(nullptr);
    report.results.push_back(std::move(row));
  }
  for (const json& f : detail::require_array(doc, "failures", ctx))
    report.failures.push_back(
        {detail::require_string(f, "sequence_id", ctx), detail::require_string(f, "error", ctx)});
  return report;
}

void save_report(const fs::path& path, const EvalReport& report) {
  detail::write_json_file(path, report_to_json(report));
}

EvalReport load_report(const fs::path& path) {
  return report_from_json(detail::parse_json_file(path), path.string());
}

}  // namespace maf
