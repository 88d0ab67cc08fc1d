#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ewopt/dataset.hpp"

namespace ewopt {

/// Empirical confusion statistics of a classifier on one dataset.
///
/// full(i, j) = (1/n) sum_x 1(y = i) h_j(x); rows sum to the class priors,
/// all entries sum to 1. Accumulation is sequential over examples, so
/// results are bitwise reproducible.
struct ConfusionStats {
  Eigen::MatrixXd full;     // m x m
  Eigen::VectorXd priors;   // row sums

  Eigen::VectorXd diagonal() const { return full.diagonal(); }
  double accuracy() const { return full.trace(); }
};

// From a per-example class distribution (n x m, rows on the simplex).
ConfusionStats confusion(const Dataset& data, const Eigen::MatrixXd& dist);

// From hard predictions.
ConfusionStats confusion(const Dataset& data, const std::vector<int>& preds);

// Basis-weighted diagonal confusions: out(l, i) = (1/n) sum_x phi_l(x)
// 1(y = i) h_i(x).
Eigen::MatrixXd phi_confusions(const Dataset& data, const Eigen::MatrixXd& phi,
                               const Eigen::MatrixXd& dist);

// Basis-weighted full confusions, flattened (l, i, j) lexicographic:
// out[(l*m + i)*m + j] = (1/n) sum_x phi_l(x) 1(y = i) h_j(x).
Eigen::VectorXd phi_confusions_full(const Dataset& data,
                                    const Eigen::MatrixXd& phi,
                                    const Eigen::MatrixXd& dist);

}  // namespace ewopt
