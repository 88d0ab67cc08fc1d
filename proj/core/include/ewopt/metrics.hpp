#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>

#include "ewopt/confusion.hpp"
#include "ewopt/dataset.hpp"

namespace ewopt {

enum class MetricKind { kLinear, kGmean, kFmeasureMacro, kFmeasureBinary,
                        kOracle };

/// Opaque black-box metric: consumes per-example validation predictions
/// (an n x m class-distribution matrix) and returns a scalar in [0, 1].
/// Calls are counted; `degenerate` is set when the last evaluation hit an
/// undefined rate (empty group/class) and returned the limit value 0.
struct OracleHandle {
  std::function<double(const Eigen::MatrixXd&)> fn;
  std::shared_ptr<std::size_t> query_count =
      std::make_shared<std::size_t>(0);
  std::shared_ptr<bool> degenerate = std::make_shared<bool>(false);

  double operator()(const Eigen::MatrixXd& dist) const;
};

/// Evaluation metric. Closed-form kinds are functions of the confusion
/// matrix; linear metrics carry a coefficient matrix (diagonal for metrics
/// of the diagonal entries alone). Oracle metrics are opaque callables.
struct MetricSpec {
  MetricKind kind = MetricKind::kLinear;
  Eigen::MatrixXd coeffs;  // linear only, m x m
  OracleHandle oracle;     // oracle only

  static MetricSpec linear_diag(const Eigen::VectorXd& beta);
  static MetricSpec linear_full(const Eigen::MatrixXd& coeffs);
  static MetricSpec accuracy(int num_classes);
  static MetricSpec gmean();
  static MetricSpec fmeasure_macro();
  static MetricSpec fmeasure_binary();
  static MetricSpec black_box(OracleHandle handle);

  bool is_oracle() const { return kind == MetricKind::kOracle; }

  // True when the metric is a function of diagonal confusion entries and
  // priors alone (everything except full-matrix linear and oracle kinds).
  bool diagonal_only() const;
};

struct MetricFlags {
  bool zero_component = false;  // value hit its limit at a zero entry
  bool grad_clamped = false;    // gradient evaluated at clamped entries
};

// Value from diagonal confusion entries plus priors. Valid for
// diagonal_only() metrics.
double eval_diag(const MetricSpec& spec, const Eigen::VectorXd& diag,
                 const Eigen::VectorXd& priors, MetricFlags* flags = nullptr);

// Value from full confusion statistics (all non-oracle kinds).
double eval_metric(const MetricSpec& spec, const ConfusionStats& stats,
                   MetricFlags* flags = nullptr);

// Gradient with respect to the diagonal entries at fixed priors. Entries
// are clamped below at 1e-6 before evaluation; clamping sets
// flags->grad_clamped. Valid for diagonal_only() metrics; F-measure
// gradients require m = 2.
Eigen::VectorXd grad_diag(const MetricSpec& spec, const Eigen::VectorXd& diag,
                          const Eigen::VectorXd& priors,
                          MetricFlags* flags = nullptr);

// Metric value of a classifier given by its prediction distribution on
// `data`: oracle kinds call the handle, others evaluate the confusion.
double metric_value(const MetricSpec& spec, const Dataset& data,
                    const Eigen::MatrixXd& dist);

// Same for hard predictions (0-based class indices).
double metric_value(const MetricSpec& spec, const Dataset& data,
                    const std::vector<int>& preds);

// Black-box fairness metric (TPR_a * TNR_a * TPR_b * TNR_b)^(1/4) over the
// two protected groups of `val`; rates are within-group recall/specificity
// of the positive class (internal index 1). Binary only. The returned
// handle closes over labels and protected ids; callers never see them.
OracleHandle make_fairness_oracle(const Dataset& val);

}  // namespace ewopt
