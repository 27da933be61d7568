#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "maf/cbaf.hpp"
#include "maf/motion_match.hpp"
#include "maf/query.hpp"

namespace maf {

inline constexpr const char* source_tag_tf2023 = "tf2023";
inline constexpr const char* source_tag_iushareview = "iushareview";
inline constexpr const char* source_tag_ego4d_tf = "ego4d_tf";
inline constexpr const char* source_tag_synthetic = "synthetic";

bool is_known_source_tag(const std::string& tag);

struct CandidateRef {
  std::string candidate_id;
  bool is_wearer = false;
};

struct SequenceRecord {
  std::string sequence_id;
  std::string video_id;
  std::string wearer_id;
  std::string source_tag;
  int t = 0;
  std::optional<int> temporal_index;  // order within the video; required by the seen split
  std::string query_dir;              // relative to the manifest file
  std::vector<CandidateRef> candidates;

  const std::string& wearer_candidate_id() const;
};

struct DatasetManifest {
  std::vector<SequenceRecord> sequences;
  std::filesystem::path base_dir;  // directory of the manifest file; not serialized

  void validate() const;  // unique sequence ids, exactly one wearer each
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// ---------------------------------------------------------------------------
// Train/test splits
// ---------------------------------------------------------------------------

struct SplitAssignment {
  std::string name;
  std::vector<std::string> train;  // sequence ids
  std::vector<std::string> test;
};

// Per video (tf2023 + iushareview only), the temporally first ceil(80%) of
// sequences train, the rest test.
SplitAssignment split_seen(const DatasetManifest& manifest);

// Videos partitioned so train and test share no camera wearer: connected
// components of the shared-wearer graph are assigned greedily toward an
// 80/20 sequence balance. Deterministic for a given seed.
SplitAssignment split_unseen(const DatasetManifest& manifest, uint64_t seed);

// Train on tf2023 + iushareview, test on ego4d_tf.
SplitAssignment split_cross_dataset(const DatasetManifest& manifest);

// Everything on the test side; the benchmark split for synthetic manifests.
SplitAssignment split_all(const DatasetManifest& manifest);

// Dispatch by name: seen | unseen | cross_dataset | all.
SplitAssignment make_split(const DatasetManifest& manifest, const std::string& name, uint64_t seed);
std::vector<std::string> split_names();

nlohmann::json split_to_json(const SplitAssignment& split);

// ---------------------------------------------------------------------------
// Pipeline + evaluation
// ---------------------------------------------------------------------------

struct PipelineConfig {
  WindowSpec window{};
  NormalizationMode norm = NormalizationMode::ego_scale;
  double lambda_trust = 1.0;
  bool explain = false;  // attach fusion traces to report rows
  int jobs = 1;          // worker parallelism; any value yields identical output

  nlohmann::json to_json() const;  // jobs excluded: it never affects results
};

// Full pipeline on one query: ego motion signals, motion ranking, appearance
// sources, fusion.
struct QueryOutcome {
  int predicted = -1;
  std::vector<DecisionRecord> trace;
};
QueryOutcome run_query(const QueryInstance& query, const PipelineConfig& cfg);

struct TagStats {
  int evaluated = 0;
  int correct = 0;
};

struct ReportRow {
  std::string sequence_id;
  std::string source_tag;
  std::string ground_truth;
  std::string predicted;
  bool correct = false;
  nlohmann::json trace;  // null unless explain
};

struct ReportFailure {
  std::string sequence_id;
  std::string error;
};

struct EvalReport {
  std::string split;
  PipelineConfig config;
  int test_sequences = 0;
  int evaluated = 0;
  int failed = 0;
  int correct = 0;
  double top1_accuracy = 0.0;        // correct / evaluated
  double mean_candidate_count = 0.0;  // over evaluated queries
  std::vector<std::pair<std::string, TagStats>> per_source_tag;  // sorted by tag
  std::vector<ReportRow> results;                                // sorted by sequence_id
  std::vector<ReportFailure> failures;                           // sorted by sequence_id
};

// Runs the pipeline over the split's test side. Per-query failures are
// recorded in the report, not fatal; an empty test side is.
EvalReport evaluate(const DatasetManifest& manifest, const SplitAssignment& split,
                    const PipelineConfig& cfg);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc, const std::string& ctx);
void save_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_report(const std::filesystem::path& path);

}  // namespace maf
