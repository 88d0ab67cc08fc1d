#include "ewopt/metrics.hpp"

#include <cmath>

#include "ewopt/classifier.hpp"
#include "ewopt/error.hpp"

namespace ewopt {

namespace {
constexpr double kGradFloor = 1e-6;
}

double OracleHandle::operator()(const Eigen::MatrixXd& dist) const {
  if (!fn) throw Error("oracle handle: empty callable");
  ++(*query_count);
  return fn(dist);
}

MetricSpec MetricSpec::linear_diag(const Eigen::VectorXd& beta) {
  MetricSpec s;
  s.kind = MetricKind::kLinear;
  s.coeffs = beta.asDiagonal();
  return s;
}

MetricSpec MetricSpec::linear_full(const Eigen::MatrixXd& coeffs) {
  if (coeffs.rows() != coeffs.cols())
    throw Error("linear metric: coefficient matrix must be square");
  MetricSpec s;
  s.kind = MetricKind::kLinear;
  s.coeffs = coeffs;
  return s;
}

MetricSpec MetricSpec::accuracy(int num_classes) {
  return linear_diag(Eigen::VectorXd::Ones(num_classes));
}

MetricSpec MetricSpec::gmean() {
  MetricSpec s;
  s.kind = MetricKind::kGmean;
  return s;
}

MetricSpec MetricSpec::fmeasure_macro() {
  MetricSpec s;
  s.kind = MetricKind::kFmeasureMacro;
  return s;
}

MetricSpec MetricSpec::fmeasure_binary() {
  MetricSpec s;
  s.kind = MetricKind::kFmeasureBinary;
  return s;
}

MetricSpec MetricSpec::black_box(OracleHandle handle) {
  MetricSpec s;
  s.kind = MetricKind::kOracle;
  s.oracle = std::move(handle);
  return s;
}

bool MetricSpec::diagonal_only() const {
  switch (kind) {
    case MetricKind::kLinear:
      return coeffs.isDiagonal(0.0);
    case MetricKind::kGmean:
    case MetricKind::kFmeasureMacro:
    case MetricKind::kFmeasureBinary:
      return true;
    case MetricKind::kOracle:
      return false;
  }
  return false;
}

namespace {

void check_diag_inputs(const Eigen::VectorXd& diag,
                       const Eigen::VectorXd& priors) {
  if (diag.size() != priors.size())
    throw Error("metric: diagonal and priors length mismatch");
  if (diag.size() < 2) throw Error("metric: need at least 2 classes");
}

double gmean_value(const Eigen::VectorXd& diag, const Eigen::VectorXd& priors,
                   MetricFlags* flags) {
  const int m = static_cast<int>(diag.size());
  double log_sum = 0.0;
  for (int i = 0; i < m; ++i) {
    if (priors[i] <= 0.0)
      throw Error("gmean: zero class prior");
    if (diag[i] <= 0.0) {
      if (flags) flags->zero_component = true;
      return 0.0;
    }
    log_sum += std::log(diag[i] / priors[i]);
  }
  return std::exp(log_sum / m);
}

// Per-class F for m = 2 expressed through diagonal entries: the
// off-diagonals are eliminated with the (classifier-independent) priors.
double f_binary_value(const Eigen::VectorXd& diag, MetricFlags* flags) {
  const double denom = 1.0 + diag[0] - diag[1];
  if (denom <= 0.0) throw Error("f-measure: non-positive denominator");
  if (diag[0] <= 0.0 && flags) flags->zero_component = true;
  return 2.0 * diag[0] / denom;
}

double f_macro_value_m2(const Eigen::VectorXd& diag, MetricFlags* flags) {
  const double d0 = 1.0 + diag[0] - diag[1];
  const double d1 = 1.0 + diag[1] - diag[0];
  if (d0 <= 0.0 || d1 <= 0.0)
    throw Error("f-measure: non-positive denominator");
  if ((diag[0] <= 0.0 || diag[1] <= 0.0) && flags)
    flags->zero_component = true;
  return diag[0] / d0 + diag[1] / d1;
}

}  // namespace

double eval_diag(const MetricSpec& spec, const Eigen::VectorXd& diag,
                 const Eigen::VectorXd& priors, MetricFlags* flags) {
  check_diag_inputs(diag, priors);
  switch (spec.kind) {
    case MetricKind::kLinear:
      if (!spec.diagonal_only())
        throw Error("eval_diag: linear metric has off-diagonal coefficients");
      if (spec.coeffs.rows() != diag.size())
        throw Error("eval_diag: coefficient size mismatch");
      return spec.coeffs.diagonal().dot(diag);
    case MetricKind::kGmean:
      return gmean_value(diag, priors, flags);
    case MetricKind::kFmeasureBinary:
      if (diag.size() != 2)
        throw Error("binary f-measure requires 2 classes");
      return f_binary_value(diag, flags);
    case MetricKind::kFmeasureMacro:
      if (diag.size() != 2)
        throw Error("eval_diag: macro f-measure from diagonals requires 2 "
                    "classes; use eval_metric with a full confusion");
      return f_macro_value_m2(diag, flags);
    case MetricKind::kOracle:
      throw Error("eval_diag: oracle metrics have no closed form");
  }
  throw Error("eval_diag: unknown metric kind");
}

double eval_metric(const MetricSpec& spec, const ConfusionStats& stats,
                   MetricFlags* flags) {
  const int m = static_cast<int>(stats.full.rows());
  switch (spec.kind) {
    case MetricKind::kLinear:
      if (spec.coeffs.rows() != m)
        throw Error("eval_metric: coefficient size mismatch");
      return (spec.coeffs.array() * stats.full.array()).sum();
    case MetricKind::kGmean:
    case MetricKind::kFmeasureBinary:
      return eval_diag(spec, stats.diagonal(), stats.priors, flags);
    case MetricKind::kFmeasureMacro: {
      if (m == 2) return eval_diag(spec, stats.diagonal(), stats.priors, flags);
      double sum = 0.0;
      for (int i = 0; i < m; ++i) {
        const double denom =
            stats.full.row(i).sum() + stats.full.col(i).sum();
        if (denom <= 0.0) {
          if (flags) flags->zero_component = true;
          continue;
        }
        sum += 2.0 * stats.full(i, i) / denom;
      }
      return sum / m;
    }
    case MetricKind::kOracle:
      throw Error("eval_metric: oracle metrics need predictions, not "
                  "confusions");
  }
  throw Error("eval_metric: unknown metric kind");
}

Eigen::VectorXd grad_diag(const MetricSpec& spec, const Eigen::VectorXd& diag,
                          const Eigen::VectorXd& priors, MetricFlags* flags) {
  check_diag_inputs(diag, priors);
  const int m = static_cast<int>(diag.size());

  Eigen::VectorXd c = diag;
  for (int i = 0; i < m; ++i) {
    if (c[i] < kGradFloor) {
      c[i] = kGradFloor;
      if (flags) flags->grad_clamped = true;
    }
  }

  switch (spec.kind) {
    case MetricKind::kLinear:
      if (!spec.diagonal_only())
        throw Error("grad_diag: linear metric has off-diagonal coefficients");
      return spec.coeffs.diagonal();
    case MetricKind::kGmean: {
      const double psi = gmean_value(c, priors, nullptr);
      Eigen::VectorXd g(m);
      for (int i = 0; i < m; ++i) g[i] = psi / (m * c[i]);
      return g;
    }
    case MetricKind::kFmeasureBinary: {
      if (m != 2) throw Error("binary f-measure requires 2 classes");
      const double denom = 1.0 + c[0] - c[1];
      if (denom <= 0.0) throw Error("f-measure: non-positive denominator");
      Eigen::VectorXd g(2);
      g[0] = 2.0 * (1.0 - c[1]) / (denom * denom);
      g[1] = 2.0 * c[0] / (denom * denom);
      return g;
    }
    case MetricKind::kFmeasureMacro: {
      if (m != 2)
        throw Error("macro f-measure gradient requires 2 classes");
      const double d0 = 1.0 + c[0] - c[1];
      const double d1 = 1.0 + c[1] - c[0];
      if (d0 <= 0.0 || d1 <= 0.0)
        throw Error("f-measure: non-positive denominator");
      Eigen::VectorXd g(2);
      g[0] = (1.0 - c[1]) / (d0 * d0) + c[1] / (d1 * d1);
      g[1] = (1.0 - c[0]) / (d1 * d1) + c[0] / (d0 * d0);
      return g;
    }
    case MetricKind::kOracle:
      throw Error("grad_diag: oracle metrics have no gradient");
  }
  throw Error("grad_diag: unknown metric kind");
}

double metric_value(const MetricSpec& spec, const Dataset& data,
                    const Eigen::MatrixXd& dist) {
  if (spec.is_oracle()) return spec.oracle(dist);
  return eval_metric(spec, confusion(data, dist));
}

double metric_value(const MetricSpec& spec, const Dataset& data,
                    const std::vector<int>& preds) {
  if (spec.is_oracle()) return spec.oracle(one_hot(preds, data.num_classes));
  return eval_metric(spec, confusion(data, preds));
}

OracleHandle make_fairness_oracle(const Dataset& val) {
  if (val.num_classes != 2)
    throw Error("fairness oracle: binary labels required");
  if (val.protected_ids.empty())
    throw Error("fairness oracle: dataset has no protected attribute");
  int num_groups = 0;
  for (int g : val.protected_ids) num_groups = std::max(num_groups, g + 1);
  if (num_groups != 2)
    throw Error("fairness oracle: exactly two protected groups required");

  // Copies, not references: the handle outlives any caller-side dataset.
  const std::vector<int> labels = val.labels;
  const std::vector<int> groups = val.protected_ids;

  OracleHandle handle;
  auto degenerate = handle.degenerate;
  handle.fn = [labels, groups, degenerate](const Eigen::MatrixXd& dist) {
    if (dist.rows() != static_cast<Eigen::Index>(labels.size()) ||
        dist.cols() != 2)
      throw Error("fairness oracle: prediction shape mismatch");
    double pos_mass[2] = {0, 0}, neg_mass[2] = {0, 0};
    double pos_hit[2] = {0, 0}, neg_hit[2] = {0, 0};
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int g = groups[i];
      if (labels[i] == 1) {
        pos_mass[g] += 1.0;
        pos_hit[g] += dist(static_cast<Eigen::Index>(i), 1);
      } else {
        neg_mass[g] += 1.0;
        neg_hit[g] += dist(static_cast<Eigen::Index>(i), 0);
      }
    }
    *degenerate = false;
    double product = 1.0;
    for (int g = 0; g < 2; ++g) {
      if (pos_mass[g] <= 0.0 || neg_mass[g] <= 0.0) {
        *degenerate = true;
        return 0.0;
      }
      product *= (pos_hit[g] / pos_mass[g]) * (neg_hit[g] / neg_mass[g]);
    }
    return std::pow(product, 0.25);
  };
  return handle;
}

}  // namespace ewopt
