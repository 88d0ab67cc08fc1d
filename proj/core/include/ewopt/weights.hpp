#pragma once

#include <Eigen/Dense>

#include "ewopt/error.hpp"

namespace ewopt {

enum class WeightMode { kDiagonal, kFull };

/// Linear expansion of example weights over a basis.
///
/// Diagonal mode: W_i(x) = sum_l alpha[(l, i)] phi_l(x), one weight per
/// class, stored (l, i) lexicographic, length L*m.
/// Full mode: W_ij(x) = sum_l alpha[(l, i, j)] phi_l(x), one weight per
/// confusion entry, stored (l, i, j) lexicographic, length L*m*m.
/// Negative weights are allowed.
struct WeightCoefficients {
  Eigen::VectorXd alpha;
  WeightMode mode = WeightMode::kDiagonal;
  int num_bases = 0;
  int num_classes = 0;

  void validate() const {
    const int m = num_classes, L = num_bases;
    const Eigen::Index want =
        mode == WeightMode::kDiagonal ? Eigen::Index(L) * m
                                      : Eigen::Index(L) * m * m;
    if (alpha.size() != want)
      throw Error("weight coefficients: alpha length mismatch");
  }

  // Diagonal mode: per-class weights W_i(x) for one example.
  Eigen::VectorXd weights_at(const Eigen::RowVectorXd& phi_row) const {
    validate();
    if (mode != WeightMode::kDiagonal)
      throw Error("weights_at: coefficients are not in diagonal mode");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(num_classes);
    for (int l = 0; l < num_bases; ++l)
      for (int i = 0; i < num_classes; ++i)
        w[i] += alpha[Eigen::Index(l) * num_classes + i] * phi_row[l];
    return w;
  }

  // Full mode: weight matrix W(x) for one example.
  Eigen::MatrixXd weight_matrix_at(const Eigen::RowVectorXd& phi_row) const {
    validate();
    if (mode != WeightMode::kFull)
      throw Error("weight_matrix_at: coefficients are not in full mode");
    const int m = num_classes;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
    for (int l = 0; l < num_bases; ++l)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          w(i, j) += alpha[(Eigen::Index(l) * m + i) * m + j] * phi_row[l];
    return w;
  }
};

}  // namespace ewopt
