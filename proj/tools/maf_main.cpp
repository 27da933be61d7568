// maf: command-line front end for the motion-appearance fusion pipeline.
// Subcommands: identify, simulate, split, evaluate.
// Exit codes: 0 success, 2 unreadable/malformed input, 3 bad configuration
// or violated precondition.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "maf/dataset.hpp"
#include "maf/rng.hpp"
#include "maf/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("MAF_LOG");
    if (!env) return LogLevel::warn;
    const std::string v(env);
    if (v == "error") return LogLevel::error;
    if (v == "warn") return LogLevel::warn;
    if (v == "info") return LogLevel::info;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::warn;
  }();
  return level;
}

void log(LogLevel level, const std::string& msg) {
  if (level <= log_level()) std::fprintf(stderr, "[maf] %s\n", msg.c_str());
}

struct CommonOpts {
  int window_length = 8;
  int window_stride = 4;
  std::string normalization = "ego-scale";
  double lambda_trust = 1.0;
  bool json_output = false;
  bool print_config = false;
  int jobs = 1;
};

void add_pipeline_options(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--window-length", opts.window_length, "Sliding window length in frame intervals");
  cmd->add_option("--window-stride", opts.window_stride, "Sliding window stride in frame intervals");
  cmd->add_option("--norm", opts.normalization, "Score normalization: ego-scale or raw");
  cmd->add_option("--lambda-trust", opts.lambda_trust, "Trust weight for appearance sources");
}

maf::PipelineConfig resolve_pipeline(const CommonOpts& opts) {
  maf::PipelineConfig cfg;
  cfg.window = maf::WindowSpec(opts.window_length, opts.window_stride);
  cfg.norm = maf::normalization_from_name(opts.normalization);
  if (!(opts.lambda_trust >= 0.0))
    maf::raise(maf::Err::InvalidArgument, "--lambda-trust must be >= 0");
  cfg.lambda_trust = opts.lambda_trust;
  cfg.jobs = std::max(1, opts.jobs);
  return cfg;
}

void emit_config(const CommonOpts& opts, const json& resolved) {
  if (opts.print_config) std::cout << resolved.dump() << '\n';
}

// ---------------------------------------------------------------------------

struct IdentifyOpts {
  CommonOpts common;
  std::string query_path;
  std::string explain_path;
};

int cmd_identify(const IdentifyOpts& opts) {
  maf::PipelineConfig cfg = resolve_pipeline(opts.common);
  emit_config(opts.common, cfg.to_json());

  const maf::QueryInstance query = maf::load_query(opts.query_path);
  const maf::QueryOutcome outcome = maf::run_query(query, cfg);
  const std::string predicted =
      query.candidates[static_cast<size_t>(outcome.predicted)].candidate_id;

  if (!opts.explain_path.empty()) {
    std::ofstream out(opts.explain_path, std::ios::trunc);
    if (!out) maf::raise(maf::Err::ArtifactMissing, "cannot open " + opts.explain_path + " for writing");
    out << maf::trace_to_json(outcome.trace, query.candidate_ids()).dump(2) << '\n';
  }

  if (opts.common.json_output)
    std::cout << json{{"predicted", predicted}}.dump() << '\n';
  else
    std::cout << predicted << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateOpts {
  CommonOpts common;
  std::string out_dir;
  uint64_t seed = 1;
  int queries = 1;
  int frames = 9;
  int distractors = 3;
  int width = 32;
  int height = 24;
  double focal = 30.0;
  std::string depth_model = "random";
  double z_plane = 4.0;
  double z_min = 2.0;
  double z_max = 6.0;
  double translation_scale = 0.08;
  double rotation_scale = 0.04;
  int detections = 2;
  double detection_alpha = 0.9;
  int embedding_dim = 16;
  double embedding_noise = 0.0;
  std::string preset = "easy";
};

maf::SceneSpec random_scene(const SimulateOpts& opts, uint64_t seed) {
  maf::SceneSpec scene;
  scene.intrinsics.width = opts.width;
  scene.intrinsics.height = opts.height;
  scene.intrinsics.focal = opts.focal;
  scene.intrinsics.cx = opts.width / 2.0;
  scene.intrinsics.cy = opts.height / 2.0;
  if (opts.depth_model == "constant")
    scene.depth_model = maf::DepthModel::constant_plane;
  else if (opts.depth_model == "random")
    scene.depth_model = maf::DepthModel::random_range;
  else
    maf::raise(maf::Err::InvalidArgument, "--depth-model must be constant or random");
  scene.z_plane = opts.z_plane;
  scene.z_min = opts.z_min;
  scene.z_max = opts.z_max;
  scene.seed = seed;

  maf::Rng rng(maf::Rng::mix(seed, 0x7a11));
  scene.trajectory.resize(static_cast<size_t>(opts.frames) - 1);
  for (maf::MotionStep& step : scene.trajectory) {
    step.tx = rng.uniform(-opts.translation_scale, opts.translation_scale);
    step.ty = rng.uniform(-opts.translation_scale, opts.translation_scale);
    step.tz = rng.uniform(-opts.translation_scale, opts.translation_scale);
    step.wx = rng.uniform(-opts.rotation_scale, opts.rotation_scale);
    step.wy = rng.uniform(-opts.rotation_scale, opts.rotation_scale);
    step.wz = rng.uniform(-opts.rotation_scale, opts.rotation_scale);
  }
  return scene;
}

maf::QueryKnobs resolve_knobs(const SimulateOpts& opts) {
  maf::QueryKnobs knobs;
  knobs.window = maf::WindowSpec(opts.common.window_length, opts.common.window_stride);
  knobs.detections = opts.detections;
  knobs.detection_alpha = opts.detection_alpha;
  knobs.embedding_dim = opts.embedding_dim;
  knobs.embedding_noise = opts.embedding_noise;
  if (opts.preset == "easy") {
    // defaults
  } else if (opts.preset == "ambiguous") {
    // one distractor shares the wearer's exact motion; only an appearance
    // elimination can separate them
    knobs.identical_twin = true;
    knobs.detections = std::max(1, opts.detections);
  } else {
    maf::raise(maf::Err::InvalidArgument, "--preset must be easy or ambiguous");
  }
  return knobs;
}

int cmd_simulate(const SimulateOpts& opts) {
  if (opts.frames < 2) maf::raise(maf::Err::InvalidArgument, "--frames must be >= 2");
  if (opts.queries < 1) maf::raise(maf::Err::InvalidArgument, "--queries must be >= 1");
  const maf::QueryKnobs knobs = resolve_knobs(opts);

  json resolved{{"seed", opts.seed},       {"queries", opts.queries},
                {"frames", opts.frames},   {"distractors", opts.distractors},
                {"preset", opts.preset},   {"detections", knobs.detections},
                {"width", opts.width},     {"height", opts.height},
                {"embedding_noise", opts.embedding_noise}};
  emit_config(opts.common, resolved);

  const fs::path out_dir(opts.out_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) maf::raise(maf::Err::ArtifactMissing, "cannot create output directory " + out_dir.string());

  maf::DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.sequences.resize(static_cast<size_t>(opts.queries));

  const int jobs = std::max(1, opts.common.jobs);
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (size_t q = next.fetch_add(1); q < static_cast<size_t>(opts.queries); q = next.fetch_add(1)) {
      try {
        const uint64_t query_seed = maf::Rng::mix(opts.seed, q);
        const maf::SceneSpec scene = random_scene(opts, query_seed);
        const maf::QueryInstance query =
            maf::make_query(scene, opts.distractors, knobs, query_seed);

        char name[32];
        std::snprintf(name, sizeof name, "seq_%04zu", q);
        const std::string query_rel = std::string("queries/") + name;
        maf::save_query(out_dir / query_rel, query);

        maf::SequenceRecord seq;
        seq.sequence_id = name;
        seq.video_id = "vid_" + std::to_string(q / 10);
        seq.wearer_id = "w_" + std::to_string(q);
        seq.source_tag = maf::source_tag_synthetic;
        seq.t = query.t;
        seq.temporal_index = static_cast<int>(q % 10);
        seq.query_dir = query_rel;
        for (size_t c = 0; c < query.candidates.size(); ++c)
          seq.candidates.push_back({query.candidates[c].candidate_id,
                                    static_cast<int>(c) == *query.ground_truth});
        manifest.sequences[q] = std::move(seq);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed = true;
        if (failure.empty()) failure = e.what();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failed) maf::raise(maf::Err::ArtifactMissing, "simulation failed: " + failure);

  maf::save_manifest(out_dir / "manifest.json", manifest);
  log(LogLevel::info, "wrote " + std::to_string(opts.queries) + " queries to " + out_dir.string());

  if (opts.common.json_output)
    std::cout << json{{"out", out_dir.string()}, {"queries", opts.queries}}.dump() << '\n';
  else
    std::cout << out_dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SplitOpts {
  CommonOpts common;
  std::string manifest_path;
  std::string name = "seen";
  uint64_t seed = 0;
  std::string out_path;
};

int cmd_split(const SplitOpts& opts) {
  const maf::DatasetManifest manifest = maf::load_manifest(opts.manifest_path);
  const maf::SplitAssignment split = maf::make_split(manifest, opts.name, opts.seed);
  const json doc = maf::split_to_json(split);
  if (!opts.out_path.empty()) {
    std::ofstream out(opts.out_path, std::ios::trunc);
    if (!out) maf::raise(maf::Err::ArtifactMissing, "cannot open " + opts.out_path + " for writing");
    out << doc.dump(2) << '\n';
  }
  if (opts.common.json_output)
    std::cout << json{{"split", split.name},
                      {"train", split.train.size()},
                      {"test", split.test.size()}}
                     .dump()
              << '\n';
  else
    std::cout << doc.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateOpts {
  CommonOpts common;
  std::string manifest_path;
  std::string split_name = "all";
  uint64_t seed = 0;
  std::string out_path = "report.json";
  bool explain = false;
};

int cmd_evaluate(const EvaluateOpts& opts) {
  maf::PipelineConfig cfg = resolve_pipeline(opts.common);
  cfg.explain = opts.explain;
  emit_config(opts.common, cfg.to_json());

  const maf::DatasetManifest manifest = maf::load_manifest(opts.manifest_path);
  const maf::SplitAssignment split = maf::make_split(manifest, opts.split_name, opts.seed);
  const maf::EvalReport report = maf::evaluate(manifest, split, cfg);
  maf::save_report(opts.out_path, report);

  for (const maf::ReportFailure& f : report.failures)
    log(LogLevel::warn, "query " + f.sequence_id + " failed: " + f.error);

  if (opts.common.json_output)
    std::cout << json{{"top1_accuracy", report.top1_accuracy},
                      {"evaluated", report.evaluated},
                      {"failed", report.failed},
                      {"report", opts.out_path}}
                     .dump()
              << '\n';
  else
    std::cout << json(report.top1_accuracy).dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-wearer identification from synchronized first/third-person views"};
  app.require_subcommand(1);

  IdentifyOpts identify;
  CLI::App* identify_cmd = app.add_subcommand("identify", "Predict the wearer for one query directory");
  identify_cmd->add_option("--query", identify.query_path, "Query directory or query.json path")->required();
  identify_cmd->add_option("--explain", identify.explain_path, "Write the fusion trace JSON to this path");
  add_pipeline_options(identify_cmd, identify.common);
  identify_cmd->add_flag("--json", identify.common.json_output, "One JSON object per output line");
  identify_cmd->add_flag("--print-config", identify.common.print_config, "Dump the resolved configuration");

  SimulateOpts simulate;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Generate synthetic queries with known ground truth");
  simulate_cmd->add_option("--out", simulate.out_dir, "Output directory")->required();
  simulate_cmd->add_option("--seed", simulate.seed, "Master seed");
  simulate_cmd->add_option("--queries", simulate.queries, "Number of queries to emit");
  simulate_cmd->add_option("--frames", simulate.frames, "Frames per sequence (t)");
  simulate_cmd->add_option("--distractors", simulate.distractors, "Distractor candidates per query");
  simulate_cmd->add_option("--width", simulate.width, "Camera resolution width");
  simulate_cmd->add_option("--height", simulate.height, "Camera resolution height");
  simulate_cmd->add_option("--focal", simulate.focal, "Focal length in pixels");
  simulate_cmd->add_option("--depth-model", simulate.depth_model, "Depth model: constant or random");
  simulate_cmd->add_option("--z", simulate.z_plane, "Plane depth for the constant model");
  simulate_cmd->add_option("--z-min", simulate.z_min, "Minimum depth for the random model");
  simulate_cmd->add_option("--z-max", simulate.z_max, "Maximum depth for the random model");
  simulate_cmd->add_option("--translation-scale", simulate.translation_scale, "Per-step translation range");
  simulate_cmd->add_option("--rotation-scale", simulate.rotation_scale, "Per-step rotation range (rad)");
  simulate_cmd->add_option("--detections", simulate.detections, "Injected ego detections per query");
  simulate_cmd->add_option("--detection-alpha", simulate.detection_alpha, "Detector confidence for injected detections");
  simulate_cmd->add_option("--embedding-dim", simulate.embedding_dim, "Embedding dimension");
  simulate_cmd->add_option("--embedding-noise", simulate.embedding_noise, "Gaussian noise on embeddings");
  simulate_cmd->add_option("--preset", simulate.preset, "Difficulty preset: easy or ambiguous");
  simulate_cmd->add_option("--jobs", simulate.common.jobs, "Worker threads");
  add_pipeline_options(simulate_cmd, simulate.common);
  simulate_cmd->add_flag("--json", simulate.common.json_output, "One JSON object per output line");
  simulate_cmd->add_flag("--print-config", simulate.common.print_config, "Dump the resolved configuration");

  SplitOpts split;
  CLI::App* split_cmd = app.add_subcommand("split", "Compute a train/test split of a manifest");
  split_cmd->add_option("--manifest", split.manifest_path, "Manifest JSON path")->required();
  split_cmd->add_option("--name", split.name, "Split name: seen, unseen, cross_dataset or all");
  split_cmd->add_option("--seed", split.seed, "Seed for the unseen split");
  split_cmd->add_option("--out", split.out_path, "Write the split JSON to this path");
  split_cmd->add_flag("--json", split.common.json_output, "One JSON object per output line");

  EvaluateOpts evaluate;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Run the pipeline over a manifest split");
  evaluate_cmd->add_option("--manifest", evaluate.manifest_path, "Manifest JSON path")->required();
  evaluate_cmd->add_option("--split", evaluate.split_name, "Split name: seen, unseen, cross_dataset or all");
  evaluate_cmd->add_option("--seed", evaluate.seed, "Seed for the unseen split");
  evaluate_cmd->add_option("--out", evaluate.out_path, "Report output path");
  evaluate_cmd->add_option("--jobs", evaluate.common.jobs, "Worker threads");
  evaluate_cmd->add_flag("--explain", evaluate.explain, "Attach fusion traces to report rows");
  add_pipeline_options(evaluate_cmd, evaluate.common);
  evaluate_cmd->add_flag("--json", evaluate.common.json_output, "One JSON object per output line");
  evaluate_cmd->add_flag("--print-config", evaluate.common.print_config, "Dump the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    if (*identify_cmd) return cmd_identify(identify);
    if (*simulate_cmd) return cmd_simulate(simulate);
    if (*split_cmd) return cmd_split(split);
    if (*evaluate_cmd) return cmd_evaluate(evaluate);
  } catch (const maf::MafError& e) {
    std::fprintf(stderr, "error (%s): %s\n", maf::err_name(e.code()), e.what());
    return maf::is_input_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
