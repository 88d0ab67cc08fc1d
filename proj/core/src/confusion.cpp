#include "ewopt/confusion.hpp"

#include "ewopt/classifier.hpp"
#include "ewopt/error.hpp"

namespace ewopt {

namespace {

void check_dist(const Dataset& data, const Eigen::MatrixXd& dist) {
  if (dist.rows() != data.size() || dist.cols() != data.num_classes)
    throw Error("confusion: distribution shape does not match dataset");
}

}  // namespace

ConfusionStats confusion(const Dataset& data, const Eigen::MatrixXd& dist) {
  check_dist(data, dist);
  const Eigen::Index n = data.size();
  const int m = data.num_classes;
  ConfusionStats stats;
  stats.full = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index x = 0; x < n; ++x)
    stats.full.row(data.labels[x]) += dist.row(x);
  if (n > 0) stats.full /= static_cast<double>(n);
  stats.priors = stats.full.rowwise().sum();
  return stats;
}

ConfusionStats confusion(const Dataset& data, const std::vector<int>& preds) {
  if (static_cast<Eigen::Index>(preds.size()) != data.size())
    throw Error("confusion: prediction count does not match dataset");
  const int m = data.num_classes;
  ConfusionStats stats;
  stats.full = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t x = 0; x < preds.size(); ++x) {
    if (preds[x] < 0 || preds[x] >= m)
      throw Error("confusion: prediction out of range");
    stats.full(data.labels[x], preds[x]) += 1.0;
  }
  if (!preds.empty()) stats.full /= static_cast<double>(preds.size());
  stats.priors = stats.full.rowwise().sum();
  return stats;
}

Eigen::MatrixXd phi_confusions(const Dataset& data, const Eigen::MatrixXd& phi,
                               const Eigen::MatrixXd& dist) {
  check_dist(data, dist);
  if (phi.rows() != data.size())
    throw Error("phi_confusions: phi rows do not match dataset");
  const Eigen::Index n = data.size();
  const int L = static_cast<int>(phi.cols());
  const int m = data.num_classes;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(L, m);
  for (Eigen::Index x = 0; x < n; ++x) {
    const int y = data.labels[x];
    const double hy = dist(x, y);
    for (int l = 0; l < L; ++l) out(l, y) += phi(x, l) * hy;
  }
  if (n > 0) out /= static_cast<double>(n);
  return out;
}

Eigen::VectorXd phi_confusions_full(const Dataset& data,
                                    const Eigen::MatrixXd& phi,
                                    const Eigen::MatrixXd& dist) {
  check_dist(data, dist);
  if (phi.rows() != data.size())
    throw Error("phi_confusions_full: phi rows do not match dataset");
  const Eigen::Index n = data.size();
  const int L = static_cast<int>(phi.cols());
  const int m = data.num_classes;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(L) * m * m);
  for (Eigen::Index x = 0; x < n; ++x) {
    const int y = data.labels[x];
    for (int l = 0; l < L; ++l) {
      const double p = phi(x, l);
      if (p == 0.0) continue;
      const Eigen::Index base = (Eigen::Index(l) * m + y) * m;
      for (int j = 0; j < m; ++j) out[base + j] += p * dist(x, j);
    }
  }
  if (n > 0) out /= static_cast<double>(n);
  return out;
}

}  // namespace ewopt
