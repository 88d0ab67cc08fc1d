#include "ewopt/basis.hpp"

#include <cmath>

#include "ewopt/error.hpp"

namespace ewopt {

Eigen::MatrixXd BasisSet::evaluate(const Dataset& data) const {
  const Eigen::Index n = data.size();
  Eigen::MatrixXd phi(n, size());

  bool needs_std = false;
  for (const auto& fn : functions)
    if (std::holds_alternative<RbfBasis>(fn)) needs_std = true;
  Eigen::MatrixXd standardized;
  if (needs_std) {
    if (!standardizer)
      throw Error("basis: RBF requires a fitted standardizer");
    standardized = standardizer->apply(data.features);
  }

  for (int l = 0; l < size(); ++l) {
    const auto& fn = functions[l];
    if (std::holds_alternative<ConstantBasis>(fn)) {
      phi.col(l).setOnes();
    } else if (const auto* cb = std::get_if<ClusterBasis>(&fn)) {
      if (data.group_ids.empty())
        throw Error("basis: cluster basis needs dataset group ids");
      for (Eigen::Index i = 0; i < n; ++i)
        phi(i, l) = data.group_ids[i] == cb->cluster ? 1.0 : 0.0;
    } else if (const auto* bf = std::get_if<BinaryFeatureBasis>(&fn)) {
      if (bf->column < 0 || bf->column >= data.dim())
        throw Error("basis: binary-feature column out of range");
      for (Eigen::Index i = 0; i < n; ++i)
        phi(i, l) = data.features(i, bf->column) == bf->value ? 1.0 : 0.0;
    } else if (const auto* rb = std::get_if<RbfBasis>(&fn)) {
      if (rb->center.size() != data.dim())
        throw Error("basis: RBF center dimension mismatch");
      const double denom = 2.0 * rb->sigma * rb->sigma;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double dist =
            (standardized.row(i).transpose() - rb->center).norm();
        phi(i, l) = std::exp(-dist / denom);
      }
    }
  }
  return phi;
}

BasisSet BasisSet::constant() {
  BasisSet b;
  b.functions.push_back(ConstantBasis{});
  return b;
}

BasisSet BasisSet::clusters(int num_clusters) {
  BasisSet b;
  for (int k = 0; k < num_clusters; ++k)
    b.functions.push_back(ClusterBasis{k});
  return b;
}

BasisSet BasisSet::clusters_and_constant(int num_clusters) {
  BasisSet b = clusters(num_clusters);
  b.functions.push_back(ConstantBasis{});
  return b;
}

}  // namespace ewopt
