#pragma once

#include <Eigen/Dense>

#include "ewopt/dataset.hpp"

namespace ewopt {

struct LogisticOptions {
  int iterations = 2000;
  double learning_rate = 1.0;
  double l2 = 1e-4;       // applied to weights, not the intercept
  bool verbose = false;
};

/// Multinomial softmax regression trained by full-batch gradient descent
/// from a zero start on standardized features. Deterministic: same data and
/// options, same model.
struct LogisticModel {
  Eigen::MatrixXd weights;    // d x m
  Eigen::RowVectorXd intercept;  // 1 x m
  Standardizer standardizer;
  double final_loss = 0.0;

  int classes() const { return static_cast<int>(weights.cols()); }
  // P(y|x) rows for raw (unstandardized) features.
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const;
};

LogisticModel fit_logistic(const Dataset& data,
                           const LogisticOptions& opts = {});

}  // namespace ewopt
