#include "support/fuse_reference.hpp"

#include <algorithm>
#include <limits>

namespace maf::test {

namespace {

double naive_confidence(const std::vector<double>& scores, double lambda, double alpha) {
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const double x1 = sorted[0];
  const double x2 = sorted[1];
  const double weight = lambda * alpha;
  if (weight == 0.0) return 0.0;
  if (x1 == 0.0 && x2 == 0.0) return weight;
  if (x1 == 0.0) return std::numeric_limits<double>::infinity();
  return weight * x2 / x1;
}

int naive_argmin(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[static_cast<size_t>(i)] < v[static_cast<size_t>(best)]) best = i;
  return best;
}

}  // namespace

int fuse_reference(std::vector<double> motion_scores, std::vector<RefSource> appearance) {
  std::vector<int> original(motion_scores.size());
  for (size_t i = 0; i < original.size(); ++i) original[i] = static_cast<int>(i);

  while (true) {
    if (original.size() == 1) return original[0];

    if (appearance.empty()) return original[static_cast<size_t>(naive_argmin(motion_scores))];

    const double motion_conf = naive_confidence(motion_scores, 1.0, 1.0);
    int best_source = 0;
    double best_conf = naive_confidence(appearance[0].scores, appearance[0].lambda, appearance[0].alpha);
    for (int k = 1; k < static_cast<int>(appearance.size()); ++k) {
      const double c = naive_confidence(appearance[static_cast<size_t>(k)].scores,
                                        appearance[static_cast<size_t>(k)].lambda,
                                        appearance[static_cast<size_t>(k)].alpha);
      if (c > best_conf) {
        best_conf = c;
        best_source = k;
      }
    }

    if (motion_conf >= best_conf) return original[static_cast<size_t>(naive_argmin(motion_scores))];

    const int victim = naive_argmin(appearance[static_cast<size_t>(best_source)].scores);
    original.erase(original.begin() + victim);
    motion_scores.erase(motion_scores.begin() + victim);
    for (RefSource& src : appearance) src.scores.erase(src.scores.begin() + victim);
    appearance.erase(appearance.begin() + best_source);
  }
}

}  // namespace maf::test
