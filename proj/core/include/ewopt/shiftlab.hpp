#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "ewopt/dataset.hpp"
#include "ewopt/metrics.hpp"

namespace ewopt {

/// Finite-domain generator: a joint table over (support point, label).
struct DiscreteSpec {
  Eigen::MatrixXd points;          // |X| x d
  Eigen::MatrixXd joint;           // |X| x m, nonnegative, sums to 1
  std::vector<int> point_cluster;  // optional; defaults to the point index

  Eigen::Index support() const { return points.rows(); }
  int classes() const { return static_cast<int>(joint.cols()); }
  void validate() const;
  Eigen::VectorXd marginal() const;            // P(x), length |X|
  Eigen::MatrixXd conditional() const;         // P(y|x), |X| x m
  int cluster_of(Eigen::Index point) const;
};

/// Isotropic gaussian class-conditionals with shared width.
/// Clusters are intervals of one feature coordinate: cluster id = number of
/// thresholds strictly below x[cluster_coord].
struct GaussianSpec {
  Eigen::MatrixXd means;   // m x d
  double sigma = 1.0;
  Eigen::VectorXd priors;  // m
  int cluster_coord = 0;
  std::vector<double> cluster_thresholds;

  int classes() const { return static_cast<int>(means.rows()); }
  void validate() const;
  int cluster_of(const Eigen::RowVectorXd& x) const;
  // Exact P(y|x) rows for the given feature matrix.
  Eigen::MatrixXd conditional(const Eigen::MatrixXd& X) const;
  // Mixture density p(x).
  double density(const Eigen::RowVectorXd& x) const;
};

using SyntheticSpec = std::variant<DiscreteSpec, GaussianSpec>;

// ----------------------------------------------------------------------------
// Training-distribution shifts
// ----------------------------------------------------------------------------

// Labels flipped by one row-stochastic matrix everywhere.
struct IlnShift {
  Eigen::MatrixXd T;
};

// Labels flipped by a per-cluster matrix.
struct CdlnShift {
  std::vector<Eigen::MatrixXd> T_per_cluster;
};

// Labels flipped by T(x) = (1 - s(x)) T_low + s(x) T_high with
// s(x) = logistic(scale * (x[coord] - offset)).
struct IdlnShift {
  Eigen::MatrixXd T_low, T_high;
  int coord = 0;
  double scale = 1.0;
  double offset = 0.0;

  Eigen::MatrixXd at(const Eigen::RowVectorXd& x) const;
};

// Features redrawn from an alternative marginal; labels keep the clean
// conditional. Exactly one member must match the generator kind.
struct DsShift {
  Eigen::VectorXd discrete_marginal;            // for DiscreteSpec
  std::optional<GaussianSpec> gaussian_marginal;  // for GaussianSpec
};

using ShiftSpec = std::variant<IlnShift, CdlnShift, IdlnShift, DsShift>;

// ----------------------------------------------------------------------------
// Sampling and corruption
// ----------------------------------------------------------------------------

struct Draw {
  Dataset data;
  ProbabilityModel conditional;  // exact P(y|x) under the drawing law
};

Draw sample_clean(const SyntheticSpec& spec, Eigen::Index n,
                  std::mt19937_64& rng);

// Dataset whose empirical distribution equals the population exactly;
// joint * n must be integral (within 1e-9 per cell).
Draw exact_population(const DiscreteSpec& spec, Eigen::Index n);

// Applies the shift to a clean draw: label-noise kinds resample labels in
// place (one uniform consumed per example, so an identity matrix changes
// nothing but the generator state); domain shift redraws features from the
// alternative marginal with labels from the clean conditional. The returned
// conditional is the exact P(y|x) of the corrupted law.
Draw corrupt(const SyntheticSpec& spec, const Draw& clean,
             const ShiftSpec& shift, std::mt19937_64& rng);

// Exact corrupted joint table for finite domains.
DiscreteSpec corrupt_population(const DiscreteSpec& spec,
                                const ShiftSpec& shift);

// ----------------------------------------------------------------------------
// Ground-truth correction weights
// ----------------------------------------------------------------------------

// The weights making the weighted training objective match the target
// linear metric with coefficient matrix `cost`: label-noise kinds give
// T(x)^{-1} * cost, domain shift gives (P_target(x) / P_train(x)) * cost.
Eigen::MatrixXd true_weights(const ShiftSpec& shift, const DiscreteSpec& spec,
                             const Eigen::MatrixXd& cost,
                             Eigen::Index point_index);
Eigen::MatrixXd true_weights(const ShiftSpec& shift, const GaussianSpec& spec,
                             const Eigen::MatrixXd& cost,
                             const Eigen::RowVectorXd& x);

// Diagonal-mode coefficient target for a per-cluster indicator basis:
// alpha[(l, i)] = W_ii at cluster l. Valid when the true weights are
// constant on each cluster.
Eigen::VectorXd true_alpha_diagonal(const ShiftSpec& shift,
                                    const DiscreteSpec& spec,
                                    const Eigen::MatrixXd& cost);

// ----------------------------------------------------------------------------
// Population oracle
// ----------------------------------------------------------------------------

struct OracleReport {
  double value = 0.0;
  Eigen::VectorXd weights;     // best per-class score weights
  int weight_grid = 0;         // points per axis searched
  int quad_grid = 0;           // quadrature resolution (gaussian only)
  bool population_exact = true;
};

// Best population metric over rules argmax_i w_i P(y=i|x), searched on a
// uniform per-axis weight grid. Exact for finite domains; gaussian specs
// (d <= 2) are integrated on a quad_grid^d lattice, with the resolution
// recorded.
OracleReport bayes_oracle(const SyntheticSpec& spec, const MetricSpec& metric,
                          int weight_grid = 20, int quad_grid = 200);

}  // namespace ewopt
