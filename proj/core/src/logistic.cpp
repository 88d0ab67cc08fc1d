#include "ewopt/logistic.hpp"

#include <cmath>
#include <iostream>

#include "ewopt/error.hpp"

namespace ewopt {
namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double peak = scores.row(r).maxCoeff();
    Eigen::RowVectorXd e = (scores.row(r).array() - peak).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

}  // namespace

Eigen::MatrixXd LogisticModel::predict_proba(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd Z = standardizer.apply(X);
  Eigen::MatrixXd scores = Z * weights;
  scores.rowwise() += intercept;
  return softmax_rows(scores);
}

LogisticModel fit_logistic(const Dataset& data, const LogisticOptions& opts) {
  data.validate();
  if (opts.iterations < 1) throw Error("logistic: iterations must be >= 1");
  if (opts.learning_rate <= 0.0) throw Error("logistic: learning rate must be positive");
  if (opts.l2 < 0.0) throw Error("logistic: l2 must be nonnegative");

  const Eigen::Index n = data.size();
  const Eigen::Index d = data.dim();
  const int m = data.num_classes;

  LogisticModel model;
  model.standardizer = Standardizer::fit(data.features);
  const Eigen::MatrixXd Z = model.standardizer.apply(data.features);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    Y(r, data.labels[static_cast<size_t>(r)]) = 1.0;
  }

  model.weights = Eigen::MatrixXd::Zero(d, m);
  model.intercept = Eigen::RowVectorXd::Zero(m);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int it = 0; it < opts.iterations; ++it) {
    Eigen::MatrixXd scores = Z * model.weights;
    scores.rowwise() += model.intercept;
    const Eigen::MatrixXd P = softmax_rows(scores);
    const Eigen::MatrixXd D = (P - Y) * inv_n;
    const Eigen::MatrixXd gw = Z.transpose() * D + opts.l2 * model.weights;
    const Eigen::RowVectorXd gb = D.colwise().sum();
    model.weights -= opts.learning_rate * gw;
    model.intercept -= opts.learning_rate * gb;

    if (opts.verbose && (it + 1) % 200 == 0) {
      double loss = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) {
        loss -= std::log(std::max(
            P(r, data.labels[static_cast<size_t>(r)]), 1e-300));
      }
      std::cerr << "logistic iter " << (it + 1) << " nll "
                << loss * inv_n << "\n";
    }
  }

  Eigen::MatrixXd scores = Z * model.weights;
  scores.rowwise() += model.intercept;
  const Eigen::MatrixXd P = softmax_rows(scores);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    loss -= std::log(
        std::max(P(r, data.labels[static_cast<size_t>(r)]), 1e-300));
  }
  model.final_loss = loss * inv_n;
  return model;
}

}  // namespace ewopt
