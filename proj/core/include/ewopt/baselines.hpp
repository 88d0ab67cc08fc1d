#pragma once

#include <functional>

#include "ewopt/classifier.hpp"
#include "ewopt/metrics.hpp"

namespace ewopt {

// Vanilla plug-in: argmax over the estimated class probabilities.
DeterministicRule argmax_baseline();

struct CoordinateSearchResult {
  DeterministicRule rule;             // weighted argmax with the tuned weights
  Eigen::VectorXd weights;            // length m, last entry fixed at 1
  Eigen::VectorXd best_zeta;          // tuned mixing parameter per coordinate
  size_t queries = 0;                 // metric evaluations spent
  bool capped = false;                // a coordinate hit the grid boundary
};

// Tunes one weight per class (the last class is the anchor) by exhaustive
// search over zeta in {0, spacing, ..., 1}: coordinate j uses the pair rule
// "predict j when zeta * eta_j > (1 - zeta) * eta_anchor, else the anchor",
// scored by the metric on the evaluation sample. The tuned weight is
// zeta / (1 - zeta), capped at 1 / spacing when zeta = 1 (and flagged).
// Spends exactly (m - 1) * (1 / spacing + 1) metric queries.
CoordinateSearchResult coordinate_search_plugin(
    const MetricSpec& metric, const Sample& val, double spacing = 0.01);

}  // namespace ewopt
