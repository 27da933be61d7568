#include <cmath>
#include <limits>

#include "doctest.h"
#include "maf/cbaf.hpp"
#include "support/fuse_reference.hpp"
#include "support/test_util.hpp"

using namespace maf;
using test::RefSource;
using test::fuse_reference;

namespace {

ScoreSource motion_source(std::vector<double> scores) {
  ScoreSource src;
  src.kind = SourceKind::motion;
  src.scores = std::move(scores);
  return src;
}

ScoreSource appearance_source(std::vector<double> scores, double lambda = 1.0, double alpha = 1.0) {
  ScoreSource src;
  src.kind = SourceKind::appearance;
  src.scores = std::move(scores);
  src.lambda_trust = lambda;
  src.alpha_mask = alpha;
  return src;
}

}  // namespace

TEST_CASE("confidence formula") {
  SUBCASE("tied minima") { CHECK(confidence(motion_source({1.0, 1.0, 2.0})) == doctest::Approx(1.0)); }
  SUBCASE("trust and detector weights multiply the ratio") {
    CHECK(confidence(appearance_source({0.5, 2.0, 1.0}, 0.8, 0.9)) == doctest::Approx(1.44));
  }
  SUBCASE("perfect-match limit") {
    CHECK(std::isinf(confidence(appearance_source({0.0, 3.0}))));
  }
  SUBCASE("both smallest zero falls back to lambda*alpha") {
    CHECK(confidence(appearance_source({0.0, 0.0, 1.0}, 0.8, 0.5)) == doctest::Approx(0.4));
  }
  SUBCASE("zero-trust sources have zero confidence even at a perfect match") {
    CHECK(confidence(appearance_source({0.0, 3.0}, 0.0, 1.0)) == 0.0);
  }
  SUBCASE("fewer than two scores is an error") {
    try {
      confidence(motion_source({1.0}));
      FAIL("expected TooFewCandidates");
    } catch (const MafError& e) {
      CHECK(e.code() == Err::TooFewCandidates);
    }
  }
}

TEST_CASE("fuse hand trace: confident motion wins immediately") {
  auto state = FusionState::make(motion_source({0.1, 5.0}), {appearance_source({1.0, 1.1})});
  const FusionResult result = fuse(std::move(state));
  CHECK(result.predicted == 0);
  REQUIRE(result.trace.size() == 1);
  CHECK(result.trace[0].chosen == "motion");
  CHECK(result.trace[0].action == DecisionRecord::Action::predict);
  CHECK(*result.trace[0].motion_confidence == doctest::Approx(50.0));
  REQUIRE(result.trace[0].appearance_confidences.size() == 1);
  CHECK(result.trace[0].appearance_confidences[0].second == doctest::Approx(1.1));
}

TEST_CASE("fuse hand trace: appearance eliminates, then motion decides") {
  auto state = FusionState::make(motion_source({0.9, 1.0, 3.0}), {appearance_source({0.2, 1.5, 1.6})});
  const FusionResult result = fuse(std::move(state));
  CHECK(result.predicted == 1);
  REQUIRE(result.trace.size() == 2);

  CHECK(result.trace[0].chosen == "appearance:0");
  CHECK(result.trace[0].action == DecisionRecord::Action::eliminate);
  CHECK(result.trace[0].candidate == 0);
  CHECK(result.trace[0].source == 0);
  CHECK(*result.trace[0].motion_confidence == doctest::Approx(1.0 / 0.9));
  CHECK(result.trace[0].appearance_confidences[0].second == doctest::Approx(7.5));

  CHECK(result.trace[1].chosen == "motion");
  CHECK(result.trace[1].action == DecisionRecord::Action::predict);
  CHECK(result.trace[1].candidate == 1);
}

TEST_CASE("fuse degenerate cases") {
  SUBCASE("single candidate short-circuits before any confidence") {
    auto state = FusionState::make(motion_source({0.4}), {appearance_source({9.0})});
    const FusionResult result = fuse(std::move(state));
    CHECK(result.predicted == 0);
    REQUIRE(result.trace.size() == 1);
    CHECK(result.trace[0].chosen == "sole_survivor");
    CHECK(!result.trace[0].motion_confidence.has_value());
  }
  SUBCASE("no appearance sources reduces to the motion argmin") {
    auto state = FusionState::make(motion_source({2.0, 0.5, 1.0}), {});
    CHECK(fuse(std::move(state)).predicted == 1);
  }
  SUBCASE("eliminations down to one survivor never consult motion") {
    // motion prefers candidate 0, but both appearance sources are more
    // confident and eliminate candidates 0 and 2
    auto state = FusionState::make(
        motion_source({0.5, 10.0, 1.0}),
        {appearance_source({0.001, 5.0, 4.0}), appearance_source({0.002, 6.0, 0.004})});
    const FusionResult result = fuse(std::move(state));
    CHECK(result.predicted == 1);
    CHECK(result.trace.back().chosen == "sole_survivor");
  }
  SUBCASE("motion argmin ties break toward the lowest original index") {
    auto state = FusionState::make(motion_source({1.0, 1.0, 2.0}), {});
    CHECK(fuse(std::move(state)).predicted == 0);
  }
  SUBCASE("appearance confidence ties break toward the lowest source index") {
    // both sources tie at confidence 10; the first eliminates candidate 0
    auto state = FusionState::make(motion_source({1.0, 1.0, 1.0}),
                                   {appearance_source({0.1, 1.0, 2.0}), appearance_source({2.0, 0.1, 1.0})});
    const FusionResult result = fuse(std::move(state));
    CHECK(result.trace[0].chosen == "appearance:0");
    CHECK(result.trace[0].candidate == 0);
  }
  SUBCASE("two infinite confidences: motion wins the tie") {
    auto state = FusionState::make(motion_source({0.0, 1.0}), {appearance_source({0.0, 5.0})});
    const FusionResult result = fuse(std::move(state));
    CHECK(result.trace[0].chosen == "motion");
    CHECK(result.predicted == 0);
  }
}

TEST_CASE("fuse invariants") {
  Rng rng(67);
  auto random_state = [&rng](int n, int m) {
    std::vector<double> motion(static_cast<size_t>(n));
    for (double& s : motion) s = rng.uniform(0.0, 4.0);
    std::vector<ScoreSource> apps;
    for (int k = 0; k < m; ++k) {
      std::vector<double> scores(static_cast<size_t>(n));
      for (double& s : scores) s = rng.uniform(0.0, 4.0);
      apps.push_back(appearance_source(std::move(scores), rng.uniform(0.2, 1.5), rng.uniform(0.1, 1.0)));
    }
    return FusionState::make(motion_source(std::move(motion)), std::move(apps));
  };

  SUBCASE("terminates within M+1 steps and predicts a never-eliminated candidate") {
    for (int iter = 0; iter < 200; ++iter) {
      const int n = 1 + static_cast<int>(rng.below(6));
      const int m = static_cast<int>(rng.below(6));
      const FusionResult result = fuse(random_state(n, m));
      CHECK(result.trace.size() <= static_cast<size_t>(m) + 1);
      CHECK(result.predicted >= 0);
      CHECK(result.predicted < n);
      for (const DecisionRecord& rec : result.trace)
        if (rec.action == DecisionRecord::Action::eliminate) CHECK(rec.candidate != result.predicted);
    }
  }
  SUBCASE("scaling any single source leaves the decision sequence unchanged") {
    for (int iter = 0; iter < 100; ++iter) {
      const int n = 2 + static_cast<int>(rng.below(5));
      const int m = 1 + static_cast<int>(rng.below(4));
      FusionState state = random_state(n, m);
      FusionState scaled = state;
      const double c = rng.uniform(0.25, 8.0);
      const size_t which = rng.below(static_cast<uint64_t>(m) + 1);
      if (which == 0)
        for (double& s : scaled.motion.scores) s *= c;
      else
        for (double& s : scaled.appearance[which - 1].scores) s *= c;

      const FusionResult a = fuse(std::move(state));
      const FusionResult b = fuse(std::move(scaled));
      CHECK(a.predicted == b.predicted);
      REQUIRE(a.trace.size() == b.trace.size());
      for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].chosen == b.trace[i].chosen);
        CHECK(a.trace[i].candidate == b.trace[i].candidate);
      }
    }
  }
  SUBCASE("zero appearance trust everywhere reduces to the motion argmin") {
    for (int iter = 0; iter < 100; ++iter) {
      const int n = 2 + static_cast<int>(rng.below(5));
      std::vector<double> motion(static_cast<size_t>(n));
      for (double& s : motion) s = rng.uniform(0.1, 4.0);
      // force distinct minima
      motion[rng.below(static_cast<uint64_t>(n))] = 0.01;
      std::vector<ScoreSource> apps;
      for (int k = 0; k < 3; ++k) {
        std::vector<double> scores(static_cast<size_t>(n));
        for (double& s : scores) s = rng.uniform(0.0, 4.0);
        apps.push_back(appearance_source(std::move(scores), 0.0, rng.uniform(0.1, 1.0)));
      }
      const size_t arg = static_cast<size_t>(
          std::min_element(motion.begin(), motion.end()) - motion.begin());
      const FusionResult result = fuse(FusionState::make(motion_source(motion), std::move(apps)));
      CHECK(result.predicted == static_cast<int>(arg));
    }
  }
  SUBCASE("appending a duplicate source never changes the next action") {
    // A duplicate appended after the original loses every confidence tie to
    // it, so the immediately following decision is identical. (Later steps
    // can diverge once eliminations reshape the duplicate's score list.)
    for (int iter = 0; iter < 200; ++iter) {
      const int n = 2 + static_cast<int>(rng.below(5));
      const int m = 1 + static_cast<int>(rng.below(4));
      FusionState state = random_state(n, m);
      FusionState dup = state;
      dup.appearance.push_back(dup.appearance[rng.below(static_cast<uint64_t>(m))]);

      const FusionResult a = fuse(std::move(state));
      const FusionResult b = fuse(std::move(dup));
      CHECK(a.trace[0].action == b.trace[0].action);
      CHECK(a.trace[0].candidate == b.trace[0].candidate);
    }
  }
}

TEST_CASE("fuse agrees with the naive reference on random instances") {
  Rng rng(71);
  for (int iter = 0; iter < 2000; ++iter) {
    const int n = 1 + static_cast<int>(rng.below(6));
    const int m = static_cast<int>(rng.below(6));

    std::vector<double> motion(static_cast<size_t>(n));
    for (double& s : motion) s = rng.next_unit() < 0.1 ? 0.0 : rng.uniform(0.0, 3.0);

    std::vector<ScoreSource> apps;
    std::vector<RefSource> ref_apps;
    for (int k = 0; k < m; ++k) {
      std::vector<double> scores(static_cast<size_t>(n));
      for (double& s : scores) s = rng.next_unit() < 0.1 ? 0.0 : rng.uniform(0.0, 3.0);
      const double lambda = rng.next_unit() < 0.1 ? 0.0 : rng.uniform(0.2, 1.5);
      const double alpha = rng.uniform(0.05, 1.0);
      apps.push_back(appearance_source(scores, lambda, alpha));
      ref_apps.push_back({scores, lambda, alpha});
    }

    const int expected = fuse_reference(motion, ref_apps);
    const FusionResult result = fuse(FusionState::make(motion_source(motion), std::move(apps)));
    CHECK(result.predicted == expected);
  }
}

TEST_CASE("trace serialization carries the sentinel for infinite confidence") {
  auto state = FusionState::make(motion_source({1.0, 2.0}), {appearance_source({0.0, 3.0}, 1.0, 1.0)});
  const FusionResult result = fuse(std::move(state));
  const nlohmann::json doc = trace_to_json(result.trace, {"alpha", "beta"});
  CHECK(doc["schema_version"] == 1);
  REQUIRE(!doc["steps"].empty());
  const auto& apps = doc["steps"][0]["confidences"]["appearance"];
  REQUIRE(apps.size() == 1);
  CHECK(apps[0]["confidence"] == "inf");
  CHECK(doc["steps"][0].contains("candidate_id"));
}
