#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "ewopt/classifier.hpp"
#include "ewopt/elicit.hpp"
#include "ewopt/error.hpp"
#include "ewopt/metrics.hpp"
#include "ewopt/postshift.hpp"
#include "ewopt/rng.hpp"

namespace acceptance {
namespace {

// A finite instance: a handful of distinct feature rows, each carrying an
// integer count per class. The conditional at a row is its count share, so
// the stored eta equals the empirical conditional exactly and the weighted
// empirical objective of any per-row assignment can be enumerated.
struct Instance {
  ewopt::Sample sample;
  Eigen::MatrixXd counts;  // rows x m
  int rows = 0;
  int m = 0;
  int n = 0;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> m_d(2, 3), rows_d(2, 8), count_d(0, 4);
  Instance inst;
  inst.m = m_d(rng);
  inst.rows = rows_d(rng);
  inst.counts = Eigen::MatrixXd::Zero(inst.rows, inst.m);
  for (int r = 0; r < inst.rows; ++r) {
    double total = 0;
    for (int i = 0; i < inst.m; ++i) {
      inst.counts(r, i) = count_d(rng);
      total += inst.counts(r, i);
    }
    if (total == 0) inst.counts(r, 0) = 1;
  }
  // Every class needs mass, else the probe system degenerates.
  for (int i = 0; i < inst.m; ++i) {
    if (inst.counts.col(i).sum() == 0) {
      std::uniform_int_distribution<int> r_d(0, inst.rows - 1);
      inst.counts(r_d(rng), i) += 1;
    }
  }
  inst.n = static_cast<int>(inst.counts.sum());

  Eigen::MatrixXd features(inst.n, 1);
  Eigen::MatrixXd eta(inst.n, inst.m);
  std::vector<int> labels(inst.n);
  int at = 0;
  for (int r = 0; r < inst.rows; ++r) {
    const double total = inst.counts.row(r).sum();
    for (int i = 0; i < inst.m; ++i)
      for (int k = 0; k < static_cast<int>(inst.counts(r, i)); ++k) {
        features(at, 0) = r;
        labels[at] = i;
        eta.row(at) = inst.counts.row(r) / total;
        ++at;
      }
  }
  ewopt::Dataset data;
  data.features = std::move(features);
  data.labels = std::move(labels);
  data.num_classes = inst.m;
  inst.sample = ewopt::make_sample(std::move(data),
                                   Eigen::MatrixXd::Ones(inst.n, 1), eta);
  return inst;
}

// Weighted empirical objective of a per-row assignment: each example gets
// its class weight when the assignment matches its label.
double objective(const Instance& inst, const std::vector<int>& assign,
                 const Eigen::VectorXd& alpha) {
  double v = 0.0;
  for (int r = 0; r < inst.rows; ++r)
    v += alpha[assign[r]] * inst.counts(r, assign[r]) / inst.n;
  return v;
}

}  // namespace

CriterionResult criterion3_plugin_optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  int exact = 0;
  double worst_gap = 0.0;
  const int instances = 20;

  for (int trial = 0; trial < instances; ++trial) {
    auto rng = ewopt::substream(3000 + trial, "plugin-exhaustive");
    Instance inst = random_instance(rng);

    std::uniform_real_distribution<double> beta_d(0.5, 2.0);
    Eigen::VectorXd beta(inst.m);
    for (int i = 0; i < inst.m; ++i) beta[i] = beta_d(rng);

    const auto metric = ewopt::MetricSpec::linear_diag(beta);
    const auto base = ewopt::uniform_base(inst.sample, inst.sample);
    ewopt::ElicitOptions opts;
    opts.epsilon = 0.5;
    const auto result =
        ewopt::pi_ew(metric, inst.sample, inst.sample, base, opts);
    const Eigen::VectorXd alpha = result.rule.coef.alpha;

    // The rule's induced per-row assignment (constant within a row block).
    const auto preds = ewopt::apply_rule(result.rule, inst.sample);
    std::vector<int> rule_assign(inst.rows, 0);
    int at = 0;
    bool constant_rows = true;
    for (int r = 0; r < inst.rows; ++r) {
      const int block = static_cast<int>(inst.counts.row(r).sum());
      rule_assign[r] = preds[at];
      for (int k = 0; k < block; ++k)
        if (preds[at + k] != rule_assign[r]) constant_rows = false;
      at += block;
    }

    // Exhaustive maximum over all m^rows assignments.
    double best = -1e300;
    long total = 1;
    for (int r = 0; r < inst.rows; ++r) total *= inst.m;
    std::vector<int> assign(inst.rows, 0);
    for (long code = 0; code < total; ++code) {
      long rest = code;
      for (int r = 0; r < inst.rows; ++r) {
        assign[r] = static_cast<int>(rest % inst.m);
        rest /= inst.m;
      }
      best = std::max(best, objective(inst, assign, alpha));
    }

    const double got = objective(inst, rule_assign, alpha);
    if (constant_rows && got == best) ++exact;
    worst_gap = std::max(worst_gap, best - got);
  }

  const auto t1 = std::chrono::steady_clock::now();
  const double seconds = std::chrono::duration<double>(t1 - t0).count();
  const bool pass = exact == instances && seconds < 5.0;
  std::ostringstream os;
  os.precision(3);
  os << exact << "/" << instances
     << " instances attain the exhaustive maximum exactly (worst gap "
     << worst_gap << "); " << seconds << " s < 5 s";
  return {pass, os.str()};
}

}  // namespace acceptance
