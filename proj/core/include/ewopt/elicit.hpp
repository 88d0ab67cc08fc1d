#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <vector>

#include "ewopt/classifier.hpp"
#include "ewopt/confusion.hpp"
#include "ewopt/weights.hpp"

namespace ewopt {

// Metric value of a probing classifier, given its predictions on the
// validation sample. Shifted or opaque metrics close over whatever else
// they need.
using ProbeEvaluator = std::function<double(const Eigen::MatrixXd& val_dist)>;

// A base classifier materialized on the train and validation samples.
struct Materialized {
  Eigen::MatrixXd train;  // n_tr x m
  Eigen::MatrixXd val;    // n_val x m
};

Materialized materialize_pair(const RandomizedClassifier& h,
                              const Sample& train, const Sample& val);
Materialized uniform_base(const Sample& train, const Sample& val);

enum class ProbeKind { kFixed, kThreshold, kFullRandom };

/// One probing classifier, materialized on both samples.
///
/// Fixed kind: per example, mass eps*phi_l(x) on the target class, the
/// rest on the base classifier. Threshold kind: predicts the target class
/// on its cluster, a tuned low-correctness rule elsewhere. Full-random
/// kind: mass eps*phi_l(x) toward a random assignment keyed by feature
/// hash (stable across samples).
struct Probe {
  int basis_index = 0;
  int target_class = 0;
  int target_col = -1;  // full mode: the weighted column j
  Eigen::MatrixXd train_dist;
  Eigen::MatrixXd val_dist;

  // Threshold kind diagnostics.
  bool feasible = true;
  double on_target = 0.0;
  double worst_off_target = 0.0;
  std::vector<double> tuned_params;  // per off-cluster threshold / weight
};

struct ProbingSet {
  ProbeKind kind = ProbeKind::kFixed;
  double epsilon = 0.0;
  std::vector<Probe> probes;

  bool all_feasible() const;
};

ProbingSet build_fixed_probes(const Sample& train, const Sample& val,
                              const Materialized& base, double epsilon);

struct ThresholdProbeOptions {
  double gamma = 0.2;       // required on-target mass
  double omega = 0.05;      // allowed off-target mass
  double grid_step = 1e-3;  // quantile / weight line-search resolution
};

// Requires a disjoint binary-indicator basis (hard clusters) and a
// probability model on both samples.
ProbingSet build_threshold_probes(const Sample& train, const Sample& val,
                                  const ThresholdProbeOptions& opts);

ProbingSet build_full_matrix_probes(const Sample& train, const Sample& val,
                                    const Materialized& base, double epsilon,
                                    std::uint64_t salt);

// Rows indexed by probe, columns by unknown ((l, i) or (l, i, j)
// lexicographic, matching WeightCoefficients).
Eigen::MatrixXd assemble_sigma(const ProbingSet& probes, const Sample& train,
                               WeightMode mode);

struct AssembledSystem {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd rhs;
};

// Pairs the probe matrix with the measured metric values; non-finite
// values raise Error naming the probe.
AssembledSystem assemble_system(const ProbingSet& probes, const Sample& train,
                                const std::vector<double>& metric_values,
                                WeightMode mode);

struct SolveOptions {
  double ridge = 0.0;  // > 0: solve (S'S + ridge I) a = S' rhs
  bool allow_rank_deficient = false;
  double rank_tol = 1e-10;       // relative singular-value cutoff
  double warn_condition = 1e8;   // ill-conditioning flag threshold
};

struct SolveResult {
  Eigen::VectorXd alpha;
  double condition_number = 0.0;  // sigma_max / sigma_min over kept spectrum
  double residual = 0.0;          // ||sigma*alpha - rhs||_2, recomputed
  int effective_rank = 0;
  bool ill_conditioned = false;
};

// Exact-recovery direct solve. Singular systems raise Error (advising a
// larger epsilon or fewer bases) unless allow_rank_deficient, in which
// case the minimum-norm least-squares solution is returned.
SolveResult solve_alpha(const Eigen::MatrixXd& sigma,
                        const Eigen::VectorXd& rhs,
                        const SolveOptions& opts = {});

struct ElicitOptions {
  ProbeKind probe_kind = ProbeKind::kFixed;
  WeightMode mode = WeightMode::kDiagonal;
  double epsilon = 0.1;
  ThresholdProbeOptions threshold;
  SolveOptions solve;
  std::uint64_t seed = 0;        // full-mode assignment draws
  int max_retries = 50;          // full-mode probe resampling budget
  double retry_condition = 1e6;  // resample while condition exceeds this

  // Subtract the base classifier's phi-confusion row from every probe row.
  // Required when the evaluator measures the metric relative to the base
  // (value at probe minus value at base): the shifted values are an affine
  // functional of the probe confusions, and pairing them with raw rows
  // would fold the offset into the coefficients. With centering, probe
  // rows and values both vanish at the base, so the solve recovers the
  // local gradient weights as the perturbation radius shrinks.
  bool center_on_base = false;
};

struct ElicitationResult {
  WeightCoefficients coef;
  ProbingSet probes;
  Eigen::MatrixXd sigma;
  Eigen::VectorXd rhs;
  SolveResult solve;
  int retries = 0;
};

// End to end: build probes, measure the metric at each, solve for the
// weight coefficients.
ElicitationResult elicit(const ProbeEvaluator& evaluator, const Sample& train,
                         const Sample& val, const Materialized& base,
                         const ElicitOptions& opts);

// Perturbation grid used for tuning, smallest to largest.
inline constexpr std::array<double, 6> kEpsilonGrid = {1e-4, 1e-3, 1e-2,
                                                       1e-1, 0.4, 1.0};

struct EpsilonChoice {
  double epsilon = 0.0;
  std::vector<double> conditions;  // per grid entry
};

// Smallest grid epsilon whose probe system has condition number below
// `max_condition`; falls back to the best-conditioned entry.
EpsilonChoice select_epsilon(const Sample& train, const Sample& val,
                             const Materialized& base,
                             WeightMode mode = WeightMode::kDiagonal,
                             std::uint64_t seed = 0,
                             double max_condition = 1e6);

}  // namespace ewopt
