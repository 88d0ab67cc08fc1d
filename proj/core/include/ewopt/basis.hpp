#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "ewopt/dataset.hpp"

namespace ewopt {

// phi(x) = 1 for every example.
struct ConstantBasis {};

// phi(x) = 1(group_id(x) == cluster). Requires group ids on the dataset.
struct ClusterBasis {
  int cluster = 0;
};

// phi(x) = 1(features(x, column) == value), compared exactly on raw features.
struct BinaryFeatureBasis {
  int column = 0;
  double value = 1.0;
};

// phi(x) = exp(-||x - center|| / (2 sigma^2)) on standardized features.
struct RbfBasis {
  Eigen::VectorXd center;
  double sigma = 1.0;
};

using BasisFn = std::variant<ConstantBasis, ClusterBasis, BinaryFeatureBasis,
                             RbfBasis>;

/// Ordered collection of basis functions, each mapping an example to [0, 1].
///
/// RBF bases operate in standardized feature space; `standardizer` must be
/// set (fit on the training sample) before evaluating any RBF entry.
struct BasisSet {
  std::vector<BasisFn> functions;
  std::optional<Standardizer> standardizer;

  int size() const { return static_cast<int>(functions.size()); }

  // n x L matrix of basis values; throws if a cluster basis is used on a
  // dataset without group ids or shapes are inconsistent.
  Eigen::MatrixXd evaluate(const Dataset& data) const;

  // Convenience constructors.
  static BasisSet constant();
  static BasisSet clusters(int num_clusters);
  static BasisSet clusters_and_constant(int num_clusters);
};

}  // namespace ewopt
