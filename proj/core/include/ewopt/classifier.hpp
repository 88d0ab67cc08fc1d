#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include "ewopt/basis.hpp"
#include "ewopt/dataset.hpp"
#include "ewopt/weights.hpp"

namespace ewopt {

/// A dataset bundled with everything rules need to act on it: basis values
/// and a per-example probability model. `id` ties example-bound objects
/// (assignments, cached distributions) to the sample they were built on.
struct Sample {
  Dataset data;
  Eigen::MatrixXd phi;  // n x L, may be empty (0 cols) if no basis in play
  Eigen::MatrixXd eta;  // n x m, may be empty if no model in play
  std::uint64_t id = 0;
};

// Bundles the pieces and assigns a fresh id.
Sample make_sample(Dataset data, Eigen::MatrixXd phi = {},
                   Eigen::MatrixXd eta = {});

// ----------------------------------------------------------------------------
// Deterministic rules. Symbolic kinds re-materialize on any sample;
// AssignmentRule is pinned to the sample it was created on.
// ----------------------------------------------------------------------------

struct ConstantRule {
  int cls = 0;
  bool operator==(const ConstantRule&) const = default;
};

struct AssignmentRule {
  std::vector<int> assignment;
  std::uint64_t sample_id = 0;
  bool operator==(const AssignmentRule&) const = default;
};

// argmax_i eta_i(x), ties to the lowest class index.
struct ArgmaxRule {
  bool operator==(const ArgmaxRule&) const = default;
};

// Diagonal coefficients: argmax_i W_i(x) eta_i(x).
// Full coefficients: argmax_j sum_i W_ij(x) eta_i(x).
// Ties go to the lowest class index.
struct PostShiftRule {
  WeightCoefficients coef;
  bool operator==(const PostShiftRule& o) const;
};

// Fixed per-class score weights: argmax_i w_i eta_i(x), lowest index on ties.
struct WeightedArgmaxRule {
  Eigen::VectorXd w;
  bool operator==(const WeightedArgmaxRule& o) const;
};

using DeterministicRule = std::variant<ConstantRule, AssignmentRule,
                                       ArgmaxRule, PostShiftRule,
                                       WeightedArgmaxRule>;

// Predictions of a rule on a sample (0-based classes).
std::vector<int> materialize(const DeterministicRule& rule,
                             const Sample& sample);

// One-hot n x m matrix for a prediction vector.
Eigen::MatrixXd one_hot(const std::vector<int>& preds, int num_classes);

// ----------------------------------------------------------------------------
// Randomized classifiers: finite convex combinations of deterministic rules.
// ----------------------------------------------------------------------------

struct RandomizedClassifier {
  std::vector<std::pair<double, DeterministicRule>> components;

  // Sum of component weights; 1 within 1e-9 after any sequence of mixes.
  double total_weight() const;

  static RandomizedClassifier pure(DeterministicRule rule);
};

// w * a + (1 - w) * b. Requires w in [0, 1].
RandomizedClassifier mix(const RandomizedClassifier& a,
                         const RandomizedClassifier& b, double w);

// Merges components with identical rules (weights added). Zero-weight
// components are dropped.
RandomizedClassifier compact(const RandomizedClassifier& h);

// Per-example class distribution: row x = sum_c weight_c 1(rule_c(x) = .).
Eigen::MatrixXd distribution(const RandomizedClassifier& h,
                             const Sample& sample);

}  // namespace ewopt
