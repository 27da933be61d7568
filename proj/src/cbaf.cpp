#include "maf/cbaf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace maf {

namespace {

size_t argmin(const std::vector<double>& v) {
  return static_cast<size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

void erase_at(std::vector<double>& v, size_t i) { v.erase(v.begin() + static_cast<ptrdiff_t>(i)); }

}  // namespace

FusionState FusionState::make(ScoreSource motion, std::vector<ScoreSource> appearance) {
  motion.validate();
  const size_t n = motion.scores.size();
  for (const ScoreSource& src : appearance) {
    src.validate();
    if (src.scores.size() != n)
      raise(Err::InvalidArgument, "appearance source has " + std::to_string(src.scores.size()) +
                                      " scores, expected " + std::to_string(n));
  }
  FusionState state;
  state.live_candidates.resize(n);
  std::iota(state.live_candidates.begin(), state.live_candidates.end(), 0);
  state.motion = std::move(motion);
  state.appearance = std::move(appearance);
  return state;
}

double confidence(const ScoreSource& src) {
  if (src.scores.size() < 2)
    raise(Err::TooFewCandidates, "confidence needs at least two scores");
  double x1 = std::numeric_limits<double>::infinity();
  double x2 = std::numeric_limits<double>::infinity();
  for (double s : src.scores) {
    if (s < x1) {
      x2 = x1;
      x1 = s;
    } else if (s < x2) {
      x2 = s;
    }
  }
  const double weight = src.lambda_trust * src.alpha_mask;
  if (weight == 0.0) return 0.0;
  if (x1 == 0.0) return x2 == 0.0 ? weight : std::numeric_limits<double>::infinity();
  return weight * (x2 / x1);
}

FusionResult fuse(FusionState state) {
  FusionResult result;
  std::vector<int> source_ids(state.appearance.size());
  std::iota(source_ids.begin(), source_ids.end(), 0);

  for (int step = 0;; ++step) {
    if (state.live_candidates.size() == 1) {
      DecisionRecord rec;
      rec.step = step;
      rec.chosen = "sole_survivor";
      rec.candidate = state.live_candidates[0];
      result.trace.push_back(std::move(rec));
      result.predicted = state.live_candidates[0];
      return result;
    }

    const double motion_conf = confidence(state.motion);
    std::vector<std::pair<int, double>> app_confs;
    app_confs.reserve(state.appearance.size());
    for (size_t k = 0; k < state.appearance.size(); ++k)
      app_confs.emplace_back(source_ids[k], confidence(state.appearance[k]));

    // best appearance source; ties keep the lowest source index
    size_t best = 0;
    double best_conf = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < app_confs.size(); ++k) {
      if (app_confs[k].second > best_conf) {
        best_conf = app_confs[k].second;
        best = k;
      }
    }

    if (state.appearance.empty() || motion_conf >= best_conf) {
      const size_t arg = argmin(state.motion.scores);
      DecisionRecord rec;
      rec.step = step;
      rec.chosen = "motion";
      rec.motion_confidence = motion_conf;
      rec.appearance_confidences = std::move(app_confs);
      rec.candidate = state.live_candidates[arg];
      result.trace.push_back(std::move(rec));
      result.predicted = state.live_candidates[arg];
      return result;
    }

    // The winning appearance source saw its argmin candidate in the ego
    // view, so that candidate cannot be the wearer: remove it everywhere and
    // retire the source.
    const size_t victim = argmin(state.appearance[best].scores);
    DecisionRecord rec;
    rec.step = step;
    rec.chosen = "appearance:" + std::to_string(source_ids[best]);
    rec.motion_confidence = motion_conf;
    rec.appearance_confidences = std::move(app_confs);
    rec.action = DecisionRecord::Action::eliminate;
    rec.candidate = state.live_candidates[victim];
    rec.source = source_ids[best];
    result.trace.push_back(std::move(rec));

    if (state.live_candidates.size() > 1) {  // never eliminate the last live candidate
      state.live_candidates.erase(state.live_candidates.begin() + static_cast<ptrdiff_t>(victim));
      erase_at(state.motion.scores, victim);
      for (ScoreSource& src : state.appearance) erase_at(src.scores, victim);
    }
    state.appearance.erase(state.appearance.begin() + static_cast<ptrdiff_t>(best));
    source_ids.erase(source_ids.begin() + static_cast<ptrdiff_t>(best));
  }
}

nlohmann::json trace_to_json(const std::vector<DecisionRecord>& trace,
                             const std::vector<std::string>& candidate_ids) {
  auto finite_or_inf = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return "inf";  // JSON has no infinity literal
  };
  nlohmann::json steps = nlohmann::json::array();
  for (const DecisionRecord& rec : trace) {
    nlohmann::json confs = nlohmann::json::object();
    if (rec.motion_confidence) confs["motion"] = finite_or_inf(*rec.motion_confidence);
    nlohmann::json apps = nlohmann::json::array();
    for (const auto& [source, conf] : rec.appearance_confidences)
      apps.push_back({{"source", source}, {"confidence", finite_or_inf(conf)}});
    confs["appearance"] = std::move(apps);

    nlohmann::json step{{"step", rec.step},
                        {"chosen", rec.chosen},
                        {"confidences", std::move(confs)},
                        {"action", rec.action == DecisionRecord::Action::predict ? "predict" : "eliminate"},
                        {"candidate", rec.candidate}};
    if (!candidate_ids.empty() && rec.candidate >= 0 &&
        rec.candidate < static_cast<int>(candidate_ids.size()))
      step["candidate_id"] = candidate_ids[static_cast<size_t>(rec.candidate)];
    if (rec.source >= 0) step["source"] = rec.source;
    steps.push_back(std::move(step));
  }
  return nlohmann::json{{"schema_version", 1}, {"steps", std::move(steps)}};
}

}  // namespace maf
