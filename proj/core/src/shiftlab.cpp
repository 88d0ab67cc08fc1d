#include "ewopt/shiftlab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ewopt/confusion.hpp"
#include "ewopt/error.hpp"

namespace ewopt {
namespace {

constexpr double kCellTol = 1e-9;

void check_row_stochastic(const Eigen::MatrixXd& T, const char* what) {
  if (T.rows() != T.cols() || T.rows() < 2) {
    throw Error(std::string(what) + ": transition matrix must be square, m >= 2");
  }
  for (Eigen::Index r = 0; r < T.rows(); ++r) {
    if (T.row(r).minCoeff() < -kCellTol) {
      throw Error(std::string(what) + ": negative transition entry");
    }
    if (std::abs(T.row(r).sum() - 1.0) > 1e-9) {
      throw Error(std::string(what) + ": transition row does not sum to 1");
    }
  }
}

// Inverse-CDF draw from one nonnegative row; tolerates sums slightly off 1.
int draw_index(const Eigen::VectorXd& mass, double u) {
  const double total = mass.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    acc += mass(i);
    if (u * total <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(mass.size() - 1);
}

std::vector<int> default_label_map(int m) {
  std::vector<int> names(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) names[static_cast<size_t>(i)] = i + 1;
  return names;
}

Eigen::MatrixXd transition_at(const ShiftSpec& shift,
                              const Eigen::RowVectorXd& x, int cluster) {
  if (const auto* iln = std::get_if<IlnShift>(&shift)) return iln->T;
  if (const auto* cdln = std::get_if<CdlnShift>(&shift)) {
    if (cluster < 0 ||
        cluster >= static_cast<int>(cdln->T_per_cluster.size())) {
      throw Error("cluster-conditional noise: cluster id " +
                  std::to_string(cluster) + " has no transition matrix");
    }
    return cdln->T_per_cluster[static_cast<size_t>(cluster)];
  }
  if (const auto* idln = std::get_if<IdlnShift>(&shift)) return idln->at(x);
  throw Error("domain shift has no label transition matrix");
}

Eigen::MatrixXd invert_transition(const Eigen::MatrixXd& T) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(T);
  if (!lu.isInvertible()) {
    throw Error("transition matrix is singular; correction weights undefined");
  }
  return lu.inverse();
}

}  // namespace

// ----------------------------------------------------------------------------
// DiscreteSpec
// ----------------------------------------------------------------------------

void DiscreteSpec::validate() const {
  if (points.rows() < 1 || points.cols() < 1) {
    throw Error("discrete generator: empty support");
  }
  if (joint.rows() != points.rows() || joint.cols() < 2) {
    throw Error("discrete generator: joint table must be |X| x m with m >= 2");
  }
  if (joint.minCoeff() < 0.0) {
    throw Error("discrete generator: negative joint mass");
  }
  if (std::abs(joint.sum() - 1.0) > 1e-9) {
    throw Error("discrete generator: joint mass does not sum to 1");
  }
  if (!point_cluster.empty() &&
      point_cluster.size() != static_cast<size_t>(points.rows())) {
    throw Error("discrete generator: point_cluster size mismatch");
  }
}

Eigen::VectorXd DiscreteSpec::marginal() const {
  return joint.rowwise().sum();
}

Eigen::MatrixXd DiscreteSpec::conditional() const {
  Eigen::MatrixXd cond = joint;
  const Eigen::VectorXd px = marginal();
  for (Eigen::Index p = 0; p < cond.rows(); ++p) {
    if (px(p) <= 0.0) {
      throw Error("discrete generator: support point " + std::to_string(p) +
                  " has zero mass; conditional undefined");
    }
    cond.row(p) /= px(p);
  }
  return cond;
}

int DiscreteSpec::cluster_of(Eigen::Index point) const {
  if (point_cluster.empty()) return static_cast<int>(point);
  return point_cluster[static_cast<size_t>(point)];
}

// ----------------------------------------------------------------------------
// GaussianSpec
// ----------------------------------------------------------------------------

void GaussianSpec::validate() const {
  if (means.rows() < 2 || means.cols() < 1) {
    throw Error("gaussian generator: need m >= 2 class means");
  }
  if (priors.size() != means.rows()) {
    throw Error("gaussian generator: priors length mismatch");
  }
  if (priors.minCoeff() <= 0.0 || std::abs(priors.sum() - 1.0) > 1e-9) {
    throw Error("gaussian generator: priors must be positive and sum to 1");
  }
  if (sigma <= 0.0) throw Error("gaussian generator: sigma must be positive");
  if (cluster_coord < 0 || cluster_coord >= means.cols()) {
    throw Error("gaussian generator: cluster coordinate out of range");
  }
  if (!std::is_sorted(cluster_thresholds.begin(), cluster_thresholds.end())) {
    throw Error("gaussian generator: cluster thresholds must be sorted");
  }
}

int GaussianSpec::cluster_of(const Eigen::RowVectorXd& x) const {
  const double v = x(cluster_coord);
  int c = 0;
  for (double t : cluster_thresholds) {
    if (v > t) ++c;
  }
  return c;
}

Eigen::MatrixXd GaussianSpec::conditional(const Eigen::MatrixXd& X) const {
  const int m = classes();
  Eigen::MatrixXd out(X.rows(), m);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    // log pi_k - |x - mu_k|^2 / (2 sigma^2), normalized stably.
    Eigen::VectorXd logw(m);
    for (int k = 0; k < m; ++k) {
      logw(k) =
          std::log(priors(k)) - (X.row(r) - means.row(k)).squaredNorm() * inv2s2;
    }
    const double peak = logw.maxCoeff();
    Eigen::VectorXd w = (logw.array() - peak).exp();
    out.row(r) = (w / w.sum()).transpose();
  }
  return out;
}

double GaussianSpec::density(const Eigen::RowVectorXd& x) const {
  const double d = static_cast<double>(means.cols());
  const double norm =
      std::pow(2.0 * M_PI * sigma * sigma, -0.5 * d);
  double total = 0.0;
  for (int k = 0; k < classes(); ++k) {
    const double q = (x - means.row(k)).squaredNorm() / (2.0 * sigma * sigma);
    total += priors(k) * norm * std::exp(-q);
  }
  return total;
}

Eigen::MatrixXd IdlnShift::at(const Eigen::RowVectorXd& x) const {
  const double s = 1.0 / (1.0 + std::exp(-scale * (x(coord) - offset)));
  return (1.0 - s) * T_low + s * T_high;
}

// ----------------------------------------------------------------------------
// Sampling
// ----------------------------------------------------------------------------

namespace {

Draw sample_discrete(const DiscreteSpec& spec, Eigen::Index n,
                     std::mt19937_64& rng) {
  spec.validate();
  const int m = spec.classes();
  const Eigen::Index px = spec.support();
  const Eigen::MatrixXd cond = spec.conditional();

  // Flattened inverse CDF over (point, label), row-major.
  std::vector<double> cum(static_cast<size_t>(px * m));
  double acc = 0.0;
  for (Eigen::Index p = 0; p < px; ++p) {
    for (int i = 0; i < m; ++i) {
      acc += spec.joint(p, i);
      cum[static_cast<size_t>(p * m + i)] = acc;
    }
  }

  Draw out;
  out.data.features.resize(n, spec.points.cols());
  out.data.labels.resize(static_cast<size_t>(n));
  out.data.group_ids.resize(static_cast<size_t>(n));
  out.data.num_classes = m;
  out.data.label_map = default_label_map(m);
  out.conditional.probs.resize(n, m);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double u = unif(rng) * acc;
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const Eigen::Index flat =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(it - cum.begin()),
                               px * m - 1);
    const Eigen::Index p = flat / m;
    const int y = static_cast<int>(flat % m);
    out.data.features.row(r) = spec.points.row(p);
    out.data.labels[static_cast<size_t>(r)] = y;
    out.data.group_ids[static_cast<size_t>(r)] = spec.cluster_of(p);
    out.conditional.probs.row(r) = cond.row(p);
  }
  out.data.validate();
  out.conditional.validate(out.data);
  return out;
}

Draw sample_gaussian(const GaussianSpec& spec, Eigen::Index n,
                     std::mt19937_64& rng) {
  spec.validate();
  const int m = spec.classes();
  const Eigen::Index d = spec.means.cols();

  Draw out;
  out.data.features.resize(n, d);
  out.data.labels.resize(static_cast<size_t>(n));
  out.data.num_classes = m;
  out.data.label_map = default_label_map(m);
  const bool clustered = !spec.cluster_thresholds.empty();
  if (clustered) out.data.group_ids.resize(static_cast<size_t>(n));

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int y = draw_index(spec.priors, unif(rng));
    for (Eigen::Index j = 0; j < d; ++j) {
      out.data.features(r, j) = spec.means(y, j) + spec.sigma * gauss(rng);
    }
    out.data.labels[static_cast<size_t>(r)] = y;
    if (clustered) {
      out.data.group_ids[static_cast<size_t>(r)] =
          spec.cluster_of(out.data.features.row(r));
    }
  }
  out.conditional.probs = spec.conditional(out.data.features);
  out.data.validate();
  out.conditional.validate(out.data);
  return out;
}

}  // namespace

Draw sample_clean(const SyntheticSpec& spec, Eigen::Index n,
                  std::mt19937_64& rng) {
  if (n < 1) throw Error("sample_clean: need n >= 1");
  if (const auto* disc = std::get_if<DiscreteSpec>(&spec)) {
    return sample_discrete(*disc, n, rng);
  }
  return sample_gaussian(std::get<GaussianSpec>(spec), n, rng);
}

Draw exact_population(const DiscreteSpec& spec, Eigen::Index n) {
  spec.validate();
  if (n < 1) throw Error("exact_population: need n >= 1");
  const int m = spec.classes();
  const Eigen::Index px = spec.support();
  const Eigen::MatrixXd cond = spec.conditional();

  Eigen::Index total = 0;
  Eigen::MatrixXd counts(px, m);
  for (Eigen::Index p = 0; p < px; ++p) {
    for (int i = 0; i < m; ++i) {
      const double c = spec.joint(p, i) * static_cast<double>(n);
      const double rounded = std::round(c);
      if (std::abs(c - rounded) > 1e-9 * std::max(1.0, std::abs(c))) {
        throw Error("exact_population: mass " + std::to_string(spec.joint(p, i)) +
                    " times n=" + std::to_string(n) +
                    " is not an integer count");
      }
      counts(p, i) = rounded;
      total += static_cast<Eigen::Index>(rounded);
    }
  }
  if (total != n) {
    throw Error("exact_population: counts sum to " + std::to_string(total) +
                ", expected " + std::to_string(n));
  }

  Draw out;
  out.data.features.resize(n, spec.points.cols());
  out.data.labels.resize(static_cast<size_t>(n));
  out.data.group_ids.resize(static_cast<size_t>(n));
  out.data.num_classes = m;
  out.data.label_map = default_label_map(m);
  out.conditional.probs.resize(n, m);

  Eigen::Index r = 0;
  for (Eigen::Index p = 0; p < px; ++p) {
    for (int i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(counts(p, i));
           ++k) {
        out.data.features.row(r) = spec.points.row(p);
        out.data.labels[static_cast<size_t>(r)] = i;
        out.data.group_ids[static_cast<size_t>(r)] = spec.cluster_of(p);
        out.conditional.probs.row(r) = cond.row(p);
        ++r;
      }
    }
  }
  out.data.validate();
  out.conditional.validate(out.data);
  return out;
}

// ----------------------------------------------------------------------------
// Corruption
// ----------------------------------------------------------------------------

namespace {

void check_shift(const ShiftSpec& shift, int m) {
  if (const auto* iln = std::get_if<IlnShift>(&shift)) {
    check_row_stochastic(iln->T, "independent label noise");
    if (iln->T.rows() != m) throw Error("independent label noise: size mismatch");
  } else if (const auto* cdln = std::get_if<CdlnShift>(&shift)) {
    if (cdln->T_per_cluster.empty()) {
      throw Error("cluster-conditional noise: no transition matrices");
    }
    for (const auto& T : cdln->T_per_cluster) {
      check_row_stochastic(T, "cluster-conditional noise");
      if (T.rows() != m) throw Error("cluster-conditional noise: size mismatch");
    }
  } else if (const auto* idln = std::get_if<IdlnShift>(&shift)) {
    check_row_stochastic(idln->T_low, "feature-dependent noise");
    check_row_stochastic(idln->T_high, "feature-dependent noise");
    if (idln->T_low.rows() != m || idln->T_high.rows() != m) {
      throw Error("feature-dependent noise: size mismatch");
    }
  }
}

Draw corrupt_labels(const Draw& clean, const ShiftSpec& shift,
                    std::mt19937_64& rng) {
  Draw out = clean;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index r = 0; r < clean.data.size(); ++r) {
    const int cluster = clean.data.group_ids.empty()
                            ? 0
                            : clean.data.group_ids[static_cast<size_t>(r)];
    const Eigen::MatrixXd T =
        transition_at(shift, clean.data.features.row(r), cluster);
    const int y = clean.data.labels[static_cast<size_t>(r)];
    out.data.labels[static_cast<size_t>(r)] =
        draw_index(T.row(y).transpose(), unif(rng));
    // P_noisy(i|x) = sum_k T_ki(x) P_clean(k|x).
    out.conditional.probs.row(r) =
        clean.conditional.probs.row(r) * T;
  }
  out.data.validate();
  out.conditional.validate(out.data);
  return out;
}

Draw corrupt_domain_discrete(const DiscreteSpec& spec, const Draw& clean,
                             const DsShift& ds, std::mt19937_64& rng) {
  if (ds.discrete_marginal.size() != spec.support()) {
    throw Error("domain shift: marginal length does not match the support");
  }
  if (ds.discrete_marginal.minCoeff() < 0.0 ||
      std::abs(ds.discrete_marginal.sum() - 1.0) > 1e-9) {
    throw Error("domain shift: marginal must be a distribution");
  }
  const Eigen::MatrixXd cond = spec.conditional();
  const Eigen::Index n = clean.data.size();
  const int m = spec.classes();

  Draw out;
  out.data.features.resize(n, spec.points.cols());
  out.data.labels.resize(static_cast<size_t>(n));
  out.data.group_ids.resize(static_cast<size_t>(n));
  out.data.num_classes = m;
  out.data.label_map = clean.data.label_map;
  out.conditional.probs.resize(n, m);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index p = draw_index(ds.discrete_marginal, unif(rng));
    const int y = draw_index(cond.row(p).transpose(), unif(rng));
    out.data.features.row(r) = spec.points.row(p);
    out.data.labels[static_cast<size_t>(r)] = y;
    out.data.group_ids[static_cast<size_t>(r)] = spec.cluster_of(p);
    out.conditional.probs.row(r) = cond.row(p);
  }
  out.data.validate();
  out.conditional.validate(out.data);
  return out;
}

Draw corrupt_domain_gaussian(const GaussianSpec& spec, const Draw& clean,
                             const DsShift& ds, std::mt19937_64& rng) {
  if (!ds.gaussian_marginal.has_value()) {
    throw Error("domain shift: gaussian generator needs a gaussian marginal");
  }
  const GaussianSpec& alt = *ds.gaussian_marginal;
  alt.validate();
  if (alt.means.cols() != spec.means.cols()) {
    throw Error("domain shift: marginal dimension mismatch");
  }
  // Draw x from the alternative mixture, ignore its label, then label from the
  // clean conditional at that x.
  Draw redrawn = sample_gaussian(alt, clean.data.size(), rng);
  Draw out = redrawn;
  out.data.num_classes = spec.classes();
  out.data.label_map = clean.data.label_map;
  out.conditional.probs = spec.conditional(out.data.features);
  const bool clustered = !spec.cluster_thresholds.empty();
  if (clustered) out.data.group_ids.resize(static_cast<size_t>(out.data.size()));
  else out.data.group_ids.clear();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index r = 0; r < out.data.size(); ++r) {
    out.data.labels[static_cast<size_t>(r)] =
        draw_index(out.conditional.probs.row(r).transpose(), unif(rng));
    if (clustered) {
      out.data.group_ids[static_cast<size_t>(r)] =
          spec.cluster_of(out.data.features.row(r));
    }
  }
  out.data.validate();
  out.conditional.validate(out.data);
  return out;
}

}  // namespace

Draw corrupt(const SyntheticSpec& spec, const Draw& clean,
             const ShiftSpec& shift, std::mt19937_64& rng) {
  const int m = clean.data.num_classes;
  check_shift(shift, m);
  if (const auto* ds = std::get_if<DsShift>(&shift)) {
    if (const auto* disc = std::get_if<DiscreteSpec>(&spec)) {
      return corrupt_domain_discrete(*disc, clean, *ds, rng);
    }
    return corrupt_domain_gaussian(std::get<GaussianSpec>(spec), clean, *ds,
                                   rng);
  }
  return corrupt_labels(clean, shift, rng);
}

DiscreteSpec corrupt_population(const DiscreteSpec& spec,
                                const ShiftSpec& shift) {
  spec.validate();
  check_shift(shift, spec.classes());
  DiscreteSpec out = spec;
  if (const auto* ds = std::get_if<DsShift>(&shift)) {
    if (ds->discrete_marginal.size() != spec.support()) {
      throw Error("domain shift: marginal length does not match the support");
    }
    const Eigen::MatrixXd cond = spec.conditional();
    for (Eigen::Index p = 0; p < spec.support(); ++p) {
      out.joint.row(p) = ds->discrete_marginal(p) * cond.row(p);
    }
    return out;
  }
  for (Eigen::Index p = 0; p < spec.support(); ++p) {
    const Eigen::MatrixXd T =
        transition_at(shift, spec.points.row(p), spec.cluster_of(p));
    out.joint.row(p) = spec.joint.row(p) * T;
  }
  return out;
}

// ----------------------------------------------------------------------------
// Ground-truth weights
// ----------------------------------------------------------------------------

Eigen::MatrixXd true_weights(const ShiftSpec& shift, const DiscreteSpec& spec,
                             const Eigen::MatrixXd& cost,
                             Eigen::Index point_index) {
  if (point_index < 0 || point_index >= spec.support()) {
    throw Error("true_weights: point index out of range");
  }
  if (const auto* ds = std::get_if<DsShift>(&shift)) {
    if (ds->discrete_marginal.size() != spec.support()) {
      throw Error("domain shift: marginal length does not match the support");
    }
    const double p_train = ds->discrete_marginal(point_index);
    if (p_train <= 0.0) {
      throw Error("true_weights: training marginal is zero at the point");
    }
    const double ratio = spec.marginal()(point_index) / p_train;
    return ratio * cost;
  }
  const Eigen::MatrixXd T =
      transition_at(shift, spec.points.row(point_index),
                    spec.cluster_of(point_index));
  return invert_transition(T) * cost;
}

Eigen::MatrixXd true_weights(const ShiftSpec& shift, const GaussianSpec& spec,
                             const Eigen::MatrixXd& cost,
                             const Eigen::RowVectorXd& x) {
  if (const auto* ds = std::get_if<DsShift>(&shift)) {
    if (!ds->gaussian_marginal.has_value()) {
      throw Error("domain shift: gaussian generator needs a gaussian marginal");
    }
    const double p_train = ds->gaussian_marginal->density(x);
    if (p_train <= 0.0) throw Error("true_weights: zero training density");
    return (spec.density(x) / p_train) * cost;
  }
  const Eigen::MatrixXd T = transition_at(shift, x, spec.cluster_of(x));
  return invert_transition(T) * cost;
}

Eigen::VectorXd true_alpha_diagonal(const ShiftSpec& shift,
                                    const DiscreteSpec& spec,
                                    const Eigen::MatrixXd& cost) {
  spec.validate();
  const int m = spec.classes();
  if (cost.rows() != m || cost.cols() != m) {
    throw Error("true_alpha_diagonal: cost must be m x m");
  }
  int num_clusters = 0;
  for (Eigen::Index p = 0; p < spec.support(); ++p) {
    num_clusters = std::max(num_clusters, spec.cluster_of(p) + 1);
  }
  Eigen::VectorXd alpha(static_cast<Eigen::Index>(num_clusters) * m);
  std::vector<bool> seen(static_cast<size_t>(num_clusters), false);
  for (Eigen::Index p = 0; p < spec.support(); ++p) {
    const int c = spec.cluster_of(p);
    const Eigen::MatrixXd W = true_weights(shift, spec, cost, p);
    for (int i = 0; i < m; ++i) {
      const double w = W(i, i);
      const Eigen::Index slot = static_cast<Eigen::Index>(c) * m + i;
      if (seen[static_cast<size_t>(c)] &&
          std::abs(alpha(slot) - w) > 1e-9) {
        throw Error("true_alpha_diagonal: weights vary within cluster " +
                    std::to_string(c));
      }
      alpha(slot) = w;
    }
    seen[static_cast<size_t>(c)] = true;
  }
  return alpha;
}

// ----------------------------------------------------------------------------
// Population oracle
// ----------------------------------------------------------------------------

namespace {

// Midpoint-rule discretization of a gaussian generator over [-span, span]^d.
DiscreteSpec quadrature_table(const GaussianSpec& spec, int grid, double span) {
  const Eigen::Index d = spec.means.cols();
  if (d > 2) {
    throw Error("bayes_oracle: gaussian quadrature supports d <= 2");
  }
  const int m = spec.classes();
  const double step = 2.0 * span / grid;
  const double norm = std::pow(2.0 * M_PI * spec.sigma * spec.sigma,
                               -0.5 * static_cast<double>(d));
  const double cell = std::pow(step, static_cast<double>(d));

  const Eigen::Index cells =
      d == 1 ? grid : static_cast<Eigen::Index>(grid) * grid;
  DiscreteSpec table;
  table.points.resize(cells, d);
  table.joint.resize(cells, m);
  Eigen::Index r = 0;
  for (int a = 0; a < grid; ++a) {
    const double x0 = -span + (a + 0.5) * step;
    const int binner = d == 1 ? 1 : grid;
    for (int b = 0; b < binner; ++b) {
      table.points(r, 0) = x0;
      if (d == 2) table.points(r, 1) = -span + (b + 0.5) * step;
      for (int k = 0; k < m; ++k) {
        const double q =
            (table.points.row(r) - spec.means.row(k)).squaredNorm() /
            (2.0 * spec.sigma * spec.sigma);
        table.joint(r, k) = spec.priors(k) * norm * std::exp(-q) * cell;
      }
      ++r;
    }
  }
  // Renormalize the truncation loss so the table is a proper joint.
  table.joint /= table.joint.sum();
  if (!spec.cluster_thresholds.empty()) {
    table.point_cluster.resize(static_cast<size_t>(cells));
    for (Eigen::Index p = 0; p < cells; ++p) {
      table.point_cluster[static_cast<size_t>(p)] =
          spec.cluster_of(table.points.row(p));
    }
  }
  return table;
}

double weighted_rule_value(const DiscreteSpec& table,
                           const Eigen::MatrixXd& cond,
                           const Eigen::VectorXd& w, const MetricSpec& metric,
                           const Eigen::VectorXd& priors) {
  const int m = table.classes();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index p = 0; p < table.support(); ++p) {
    int best = 0;
    double best_score = w(0) * cond(p, 0);
    for (int i = 1; i < m; ++i) {
      const double s = w(i) * cond(p, i);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    for (int i = 0; i < m; ++i) C(i, best) += table.joint(p, i);
  }
  ConfusionStats stats;
  stats.full = C;
  stats.priors = priors;
  MetricFlags flags;
  return eval_metric(metric, stats, &flags);
}

}  // namespace

OracleReport bayes_oracle(const SyntheticSpec& spec, const MetricSpec& metric,
                          int weight_grid, int quad_grid) {
  if (weight_grid < 2) throw Error("bayes_oracle: weight_grid must be >= 2");
  if (metric.is_oracle()) {
    throw Error("bayes_oracle: needs an explicit metric, not a black box");
  }

  OracleReport report;
  report.weight_grid = weight_grid;

  DiscreteSpec table;
  if (const auto* disc = std::get_if<DiscreteSpec>(&spec)) {
    disc->validate();
    table = *disc;
  } else {
    const auto& gauss = std::get<GaussianSpec>(spec);
    gauss.validate();
    if (quad_grid < 8) throw Error("bayes_oracle: quad_grid must be >= 8");
    table = quadrature_table(gauss, quad_grid, 8.0);
    report.quad_grid = quad_grid;
    report.population_exact = false;
  }

  const int m = table.classes();
  const Eigen::MatrixXd cond = table.conditional();
  const Eigen::VectorXd priors = table.joint.colwise().sum().transpose();

  // Uniform grid over (0, 1]^m; scale-invariance of the rule makes the range
  // immaterial, only the mesh matters.
  Eigen::VectorXd w(m);
  std::vector<int> idx(static_cast<size_t>(m), 1);
  report.value = -std::numeric_limits<double>::infinity();
  for (;;) {
    for (int i = 0; i < m; ++i) {
      w(i) = static_cast<double>(idx[static_cast<size_t>(i)]) / weight_grid;
    }
    const double v = weighted_rule_value(table, cond, w, metric, priors);
    if (v > report.value) {
      report.value = v;
      report.weights = w;
    }
    int pos = 0;
    while (pos < m && ++idx[static_cast<size_t>(pos)] > weight_grid) {
      idx[static_cast<size_t>(pos)] = 1;
      ++pos;
    }
    if (pos == m) break;
  }
  return report;
}

}  // namespace ewopt
