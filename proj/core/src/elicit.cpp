#include "ewopt/elicit.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "ewopt/error.hpp"
#include "ewopt/rng.hpp"

namespace ewopt {

namespace {

void check_phi_range(const Eigen::MatrixXd& phi, const char* where) {
  if ((phi.array() < -1e-12).any() || (phi.array() > 1.0 + 1e-12).any())
    throw Error(std::string(where) + ": basis values must lie in [0, 1]");
}

void check_pair(const Sample& train, const Sample& val) {
  if (train.data.num_classes != val.data.num_classes)
    throw Error("probes: train/val class count mismatch");
  if (train.phi.cols() != val.phi.cols())
    throw Error("probes: train/val basis count mismatch");
  if (train.phi.cols() == 0) throw Error("probes: empty basis");
}

void check_base(const Materialized& base, const Sample& train,
                const Sample& val) {
  if (base.train.rows() != train.data.size() ||
      base.train.cols() != train.data.num_classes ||
      base.val.rows() != val.data.size() ||
      base.val.cols() != val.data.num_classes)
    throw Error("probes: base classifier shape mismatch");
}

Eigen::MatrixXd blend_toward_class(const Eigen::MatrixXd& base,
                                   const Eigen::VectorXd& mass, int cls) {
  Eigen::MatrixXd out = base.array().colwise() * (1.0 - mass.array());
  out.col(cls) += mass;
  return out;
}

}  // namespace

Materialized materialize_pair(const RandomizedClassifier& h,
                              const Sample& train, const Sample& val) {
  return Materialized{distribution(h, train), distribution(h, val)};
}

Materialized uniform_base(const Sample& train, const Sample& val) {
  const int m = train.data.num_classes;
  const double u = 1.0 / m;
  return Materialized{
      Eigen::MatrixXd::Constant(train.data.size(), m, u),
      Eigen::MatrixXd::Constant(val.data.size(), m, u)};
}

bool ProbingSet::all_feasible() const {
  for (const auto& p : probes)
    if (!p.feasible) return false;
  return true;
}

// ============================================================================
// Probe constructions
// ============================================================================

ProbingSet build_fixed_probes(const Sample& train, const Sample& val,
                              const Materialized& base, double epsilon) {
  check_pair(train, val);
  check_base(base, train, val);
  check_phi_range(train.phi, "fixed probes");
  check_phi_range(val.phi, "fixed probes");
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw Error("fixed probes: epsilon must lie in (0, 1]");

  const int L = static_cast<int>(train.phi.cols());
  const int m = train.data.num_classes;
  ProbingSet set;
  set.kind = ProbeKind::kFixed;
  set.epsilon = epsilon;
  set.probes.reserve(static_cast<std::size_t>(L) * m);
  for (int l = 0; l < L; ++l) {
    const Eigen::VectorXd mass_tr = epsilon * train.phi.col(l);
    const Eigen::VectorXd mass_val = epsilon * val.phi.col(l);
    for (int i = 0; i < m; ++i) {
      Probe p;
      p.basis_index = l;
      p.target_class = i;
      p.train_dist = blend_toward_class(base.train, mass_tr, i);
      p.val_dist = blend_toward_class(base.val, mass_val, i);
      set.probes.push_back(std::move(p));
    }
  }
  return set;
}

namespace {

// Cluster id per example from a disjoint binary-indicator basis; -1 when no
// indicator is on.
std::vector<int> cluster_ids(const Eigen::MatrixXd& phi, const char* where) {
  std::vector<int> ids(phi.rows(), -1);
  for (Eigen::Index x = 0; x < phi.rows(); ++x) {
    for (Eigen::Index l = 0; l < phi.cols(); ++l) {
      const double v = phi(x, l);
      if (v != 0.0 && v != 1.0)
        throw Error(std::string(where) +
                    ": requires a binary indicator basis");
      if (v == 1.0) {
        if (ids[x] >= 0)
          throw Error(std::string(where) + ": basis clusters overlap");
        ids[x] = static_cast<int>(l);
      }
    }
  }
  return ids;
}

struct ClusterRule {
  // Binary: predict class 1 when eta_1 <= tau.
  // Multiclass: predict argmin_j w_j eta_j, lowest index on ties.
  bool binary = true;
  double tau = 0.0;
  Eigen::VectorXd w;

  int predict(const Eigen::RowVectorXd& eta) const {
    if (binary) return eta[1] <= tau ? 1 : 0;
    int best = 0;
    for (int j = 1; j < eta.size(); ++j)
      if (w[j] * eta[j] < w[best] * eta[best]) best = j;
    return best;
  }
};

// Smallest-threshold minimizer of the worst within-cluster diagonal mass,
// searched over the quantile grid of the cluster's eta_1 values.
ClusterRule tune_binary_cluster(const Sample& train,
                                const std::vector<int>& clusters, int cluster,
                                double grid_step, double inv_n,
                                std::vector<double>* out_param) {
  std::vector<std::pair<double, int>> pts;  // (eta_1, label)
  for (Eigen::Index x = 0; x < train.data.size(); ++x)
    if (clusters[x] == cluster)
      pts.emplace_back(train.eta(x, 1), train.data.labels[x]);
  std::sort(pts.begin(), pts.end());

  std::vector<double> candidates;
  candidates.push_back(pts.empty() ? -1.0 : pts.front().first - 1.0);
  const int steps = static_cast<int>(std::lround(1.0 / grid_step));
  for (int k = 0; k <= steps && !pts.empty(); ++k) {
    const double q = static_cast<double>(k) / steps;
    const std::size_t idx = std::min(
        pts.size() - 1,
        static_cast<std::size_t>(q * static_cast<double>(pts.size() - 1)));
    candidates.push_back(pts[idx].first);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  double best_tau = candidates.front();
  double best_obj = std::numeric_limits<double>::infinity();
  for (double tau : candidates) {
    double mass1 = 0.0, mass0 = 0.0;  // correct mass per class
    for (const auto& [eta1, y] : pts) {
      const int pred = eta1 <= tau ? 1 : 0;
      if (pred == y) (y == 1 ? mass1 : mass0) += inv_n;
    }
    const double obj = std::max(mass0, mass1);
    if (obj < best_obj - 1e-15) {
      best_obj = obj;
      best_tau = tau;
    }
  }
  if (out_param) out_param->push_back(best_tau);
  ClusterRule rule;
  rule.binary = true;
  rule.tau = best_tau;
  return rule;
}

// Coordinate-wise weight line searches against the anchor class m-1: for
// each class i, zeta minimizing the worst within-cluster diagonal mass of
// the pair rule (predict i when zeta*eta_i < (1-zeta)*eta_anchor).
ClusterRule tune_multiclass_cluster(const Sample& train,
                                    const std::vector<int>& clusters,
                                    int cluster, double grid_step,
                                    double inv_n,
                                    std::vector<double>* out_params) {
  const int m = train.data.num_classes;
  const int anchor = m - 1;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index x = 0; x < train.data.size(); ++x)
    if (clusters[x] == cluster) rows.push_back(x);

  Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
  const int steps = static_cast<int>(std::lround(1.0 / grid_step));
  for (int i = 0; i < m - 1; ++i) {
    double best_zeta = 0.0;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= steps; ++k) {
      const double zeta = static_cast<double>(k) / steps;
      Eigen::VectorXd mass = Eigen::VectorXd::Zero(m);
      for (Eigen::Index x : rows) {
        const int pred =
            zeta * train.eta(x, i) < (1.0 - zeta) * train.eta(x, anchor)
                ? i
                : anchor;
        if (pred == train.data.labels[x]) mass[pred] += inv_n;
      }
      const double obj = mass.maxCoeff();
      if (obj < best_obj - 1e-15) {
        best_obj = obj;
        best_zeta = zeta;
      }
    }
    const double capped = std::min(best_zeta, 1.0 - grid_step);
    w[i] = capped / (1.0 - capped);
    if (out_params) out_params->push_back(best_zeta);
  }
  ClusterRule rule;
  rule.binary = false;
  rule.w = w;
  return rule;
}

}  // namespace

ProbingSet build_threshold_probes(const Sample& train, const Sample& val,
                                  const ThresholdProbeOptions& opts) {
  check_pair(train, val);
  if (train.eta.size() == 0 || val.eta.size() == 0)
    throw Error("threshold probes: probability model required");
  const std::vector<int> clusters_tr =
      cluster_ids(train.phi, "threshold probes");
  const std::vector<int> clusters_val =
      cluster_ids(val.phi, "threshold probes");

  const int L = static_cast<int>(train.phi.cols());
  const int m = train.data.num_classes;
  const double inv_n = 1.0 / static_cast<double>(train.data.size());

  ProbingSet set;
  set.kind = ProbeKind::kThreshold;
  set.epsilon = 0.0;

  // One tuned low-correctness rule per cluster, shared across probes.
  std::vector<ClusterRule> rules;
  std::vector<std::vector<double>> params(L);
  rules.reserve(L);
  for (int l = 0; l < L; ++l) {
    rules.push_back(
        m == 2 ? tune_binary_cluster(train, clusters_tr, l, opts.grid_step,
                                     inv_n, &params[l])
               : tune_multiclass_cluster(train, clusters_tr, l,
                                         opts.grid_step, inv_n, &params[l]));
  }

  auto materialize_probe = [&](int l, int i, const Sample& s,
                               const std::vector<int>& clusters) {
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(s.data.size(), m);
    for (Eigen::Index x = 0; x < s.data.size(); ++x) {
      const int c = clusters[x];
      const int pred = c == l ? i
                       : c < 0 ? i
                               : rules[c].predict(s.eta.row(x));
      dist(x, pred) = 1.0;
    }
    return dist;
  };

  for (int l = 0; l < L; ++l) {
    for (int i = 0; i < m; ++i) {
      Probe p;
      p.basis_index = l;
      p.target_class = i;
      p.train_dist = materialize_probe(l, i, train, clusters_tr);
      p.val_dist = materialize_probe(l, i, val, clusters_val);
      p.tuned_params = params[l];

      const Eigen::MatrixXd phi_conf =
          phi_confusions(train.data, train.phi, p.train_dist);
      p.on_target = phi_conf(l, i);
      p.worst_off_target = 0.0;
      for (int l2 = 0; l2 < L; ++l2) {
        if (l2 == l) continue;
        p.worst_off_target =
            std::max(p.worst_off_target, phi_conf.row(l2).maxCoeff());
      }
      p.feasible = p.on_target >= opts.gamma - 1e-12 &&
                   p.worst_off_target <= opts.omega + 1e-12;
      set.probes.push_back(std::move(p));
    }
  }
  return set;
}

namespace {

std::uint64_t feature_hash(const Eigen::MatrixXd& features, Eigen::Index row) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    std::uint64_t bits;
    const double v = features(row, j);
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// Random class per example, a deterministic function of the feature vector:
// identical rows receive identical draws on every sample.
std::vector<int> hashed_assignment(const Sample& s, std::uint64_t salt) {
  std::vector<int> out(s.data.size());
  for (Eigen::Index x = 0; x < s.data.size(); ++x)
    out[x] = static_cast<int>(
        splitmix64(feature_hash(s.data.features, x) ^ salt) %
        static_cast<std::uint64_t>(s.data.num_classes));
  return out;
}

}  // namespace

ProbingSet build_full_matrix_probes(const Sample& train, const Sample& val,
                                    const Materialized& base, double epsilon,
                                    std::uint64_t salt) {
  check_pair(train, val);
  check_base(base, train, val);
  check_phi_range(train.phi, "full-matrix probes");
  check_phi_range(val.phi, "full-matrix probes");
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw Error("full-matrix probes: epsilon must lie in (0, 1]");

  const int L = static_cast<int>(train.phi.cols());
  const int m = train.data.num_classes;
  ProbingSet set;
  set.kind = ProbeKind::kFullRandom;
  set.epsilon = epsilon;
  set.probes.reserve(static_cast<std::size_t>(L) * m * m);

  int k = 0;
  for (int l = 0; l < L; ++l) {
    const Eigen::VectorXd mass_tr = epsilon * train.phi.col(l);
    const Eigen::VectorXd mass_val = epsilon * val.phi.col(l);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j, ++k) {
        const std::uint64_t probe_salt = splitmix64(salt + 0x9e37 + k);
        Probe p;
        p.basis_index = l;
        p.target_class = i;
        p.target_col = j;

        const std::vector<int> a_tr = hashed_assignment(train, probe_salt);
        const std::vector<int> a_val = hashed_assignment(val, probe_salt);
        p.train_dist = base.train.array().colwise() * (1.0 - mass_tr.array());
        for (Eigen::Index x = 0; x < train.data.size(); ++x)
          p.train_dist(x, a_tr[x]) += mass_tr[x];
        p.val_dist = base.val.array().colwise() * (1.0 - mass_val.array());
        for (Eigen::Index x = 0; x < val.data.size(); ++x)
          p.val_dist(x, a_val[x]) += mass_val[x];
        set.probes.push_back(std::move(p));
      }
    }
  }
  return set;
}

// ============================================================================
// System assembly and solve
// ============================================================================

namespace {

// Flattened phi-confusion row of one prediction distribution, in unknown
// order ((l, i) or (l, i, j) lexicographic).
Eigen::RowVectorXd phi_row(const Sample& train, const Eigen::MatrixXd& dist,
                           WeightMode mode) {
  if (mode == WeightMode::kDiagonal) {
    const Eigen::MatrixXd pc = phi_confusions(train.data, train.phi, dist);
    const int L = static_cast<int>(pc.rows());
    const int m = static_cast<int>(pc.cols());
    Eigen::RowVectorXd row(Eigen::Index(L) * m);
    for (int l = 0; l < L; ++l)
      for (int i = 0; i < m; ++i) row[Eigen::Index(l) * m + i] = pc(l, i);
    return row;
  }
  return phi_confusions_full(train.data, train.phi, dist).transpose();
}

}  // namespace

Eigen::MatrixXd assemble_sigma(const ProbingSet& probes, const Sample& train,
                               WeightMode mode) {
  if (probes.probes.empty()) throw Error("assemble: no probes");
  const int L = static_cast<int>(train.phi.cols());
  const int m = train.data.num_classes;
  const Eigen::Index cols = mode == WeightMode::kDiagonal
                                ? Eigen::Index(L) * m
                                : Eigen::Index(L) * m * m;
  Eigen::MatrixXd sigma(static_cast<Eigen::Index>(probes.probes.size()), cols);
  for (std::size_t k = 0; k < probes.probes.size(); ++k) {
    sigma.row(static_cast<Eigen::Index>(k)) =
        phi_row(train, probes.probes[k].train_dist, mode);
  }
  return sigma;
}

AssembledSystem assemble_system(const ProbingSet& probes, const Sample& train,
                                const std::vector<double>& metric_values,
                                WeightMode mode) {
  if (metric_values.size() != probes.probes.size())
    throw Error("assemble: metric value count does not match probes");
  AssembledSystem sys;
  sys.sigma = assemble_sigma(probes, train, mode);
  sys.rhs.resize(static_cast<Eigen::Index>(metric_values.size()));
  for (std::size_t k = 0; k < metric_values.size(); ++k) {
    if (!std::isfinite(metric_values[k])) {
      const auto& p = probes.probes[k];
      throw Error("assemble: non-finite metric value at probe (basis " +
                  std::to_string(p.basis_index) + ", class " +
                  std::to_string(p.target_class) + ")");
    }
    sys.rhs[static_cast<Eigen::Index>(k)] = metric_values[k];
  }
  return sys;
}

SolveResult solve_alpha(const Eigen::MatrixXd& sigma,
                        const Eigen::VectorXd& rhs, const SolveOptions& opts) {
  if (sigma.rows() != rhs.size())
    throw Error("solve: rhs length does not match probe count");
  if (sigma.rows() == 0 || sigma.cols() == 0)
    throw Error("solve: empty system");

  SolveResult res;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      sigma, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;

  if (opts.ridge > 0.0) {
    const Eigen::MatrixXd gram =
        sigma.transpose() * sigma +
        opts.ridge * Eigen::MatrixXd::Identity(sigma.cols(), sigma.cols());
    res.alpha = gram.ldlt().solve(sigma.transpose() * rhs);
    res.effective_rank = static_cast<int>(sv.size());
    res.condition_number =
        sv[sv.size() - 1] > 0.0
            ? smax / sv[sv.size() - 1]
            : std::numeric_limits<double>::infinity();
  } else {
    const double cutoff = opts.allow_rank_deficient
                              ? opts.rank_tol * smax
                              : 1e-14 * smax;
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv[k] > cutoff && sv[k] > 0.0) ++rank;
    if (rank == 0) throw Error("solve: zero probing matrix");
    if (!opts.allow_rank_deficient && rank < sv.size())
      throw Error(
          "solve: singular probing system; increase epsilon or reduce the "
          "basis count");
    res.effective_rank = rank;
    res.condition_number = smax / sv[rank - 1];

    Eigen::VectorXd coeff = svd.matrixU().transpose() * rhs;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      coeff[k] = k < rank ? coeff[k] / sv[k] : 0.0;
    res.alpha = svd.matrixV() * coeff;
  }

  res.residual = (sigma * res.alpha - rhs).norm();
  res.ill_conditioned = res.condition_number > opts.warn_condition;
  return res;
}

// ============================================================================
// End-to-end elicitation
// ============================================================================

namespace {

ProbingSet build_probes(const Sample& train, const Sample& val,
                        const Materialized& base, const ElicitOptions& opts,
                        std::uint64_t salt) {
  switch (opts.probe_kind) {
    case ProbeKind::kFixed:
      return build_fixed_probes(train, val, base, opts.epsilon);
    case ProbeKind::kThreshold:
      return build_threshold_probes(train, val, opts.threshold);
    case ProbeKind::kFullRandom:
      return build_full_matrix_probes(train, val, base, opts.epsilon, salt);
  }
  throw Error("elicit: unknown probe kind");
}

}  // namespace

ElicitationResult elicit(const ProbeEvaluator& evaluator, const Sample& train,
                         const Sample& val, const Materialized& base,
                         const ElicitOptions& opts) {
  if (!evaluator) throw Error("elicit: empty metric evaluator");
  if (opts.mode == WeightMode::kFull &&
      opts.probe_kind != ProbeKind::kFullRandom)
    throw Error("elicit: full weight mode requires full-matrix probes");
  if (opts.mode == WeightMode::kDiagonal &&
      opts.probe_kind == ProbeKind::kFullRandom)
    throw Error("elicit: full-matrix probes require full weight mode");

  ElicitationResult res;
  SolveOptions solve_opts = opts.solve;
  if (opts.mode == WeightMode::kFull) solve_opts.allow_rank_deficient = true;

  const Eigen::RowVectorXd base_row =
      opts.center_on_base ? phi_row(train, base.train, opts.mode)
                          : Eigen::RowVectorXd();

  const int budget =
      opts.probe_kind == ProbeKind::kFullRandom ? opts.max_retries : 0;
  ProbingSet probes;
  Eigen::MatrixXd sigma;
  int attempt = 0;
  for (;; ++attempt) {
    probes = build_probes(train, val, base, opts,
                          splitmix64(opts.seed) + attempt);
    sigma = assemble_sigma(probes, train, opts.mode);
    if (opts.center_on_base) sigma.rowwise() -= base_row;
    if (attempt >= budget) break;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv[0];
    double smin = 0.0;
    for (Eigen::Index k = sv.size() - 1; k >= 0; --k) {
      if (sv[k] > solve_opts.rank_tol * smax) {
        smin = sv[k];
        break;
      }
    }
    if (smin > 0.0 && smax / smin <= opts.retry_condition) break;
  }
  res.retries = attempt;

  std::vector<double> values;
  values.reserve(probes.probes.size());
  for (const auto& p : probes.probes) values.push_back(evaluator(p.val_dist));

  AssembledSystem sys = assemble_system(probes, train, values, opts.mode);
  if (opts.center_on_base) sys.sigma.rowwise() -= base_row;
  res.solve = solve_alpha(sys.sigma, sys.rhs, solve_opts);

  res.coef.alpha = res.solve.alpha;
  res.coef.mode = opts.mode;
  res.coef.num_bases = static_cast<int>(train.phi.cols());
  res.coef.num_classes = train.data.num_classes;
  res.coef.validate();

  res.probes = std::move(probes);
  res.sigma = std::move(sys.sigma);
  res.rhs = std::move(sys.rhs);
  return res;
}

EpsilonChoice select_epsilon(const Sample& train, const Sample& val,
                             const Materialized& base, WeightMode mode,
                             std::uint64_t seed, double max_condition) {
  EpsilonChoice choice;
  double best_cond = std::numeric_limits<double>::infinity();
  double best_eps = kEpsilonGrid.back();
  for (double eps : kEpsilonGrid) {
    ProbingSet probes =
        mode == WeightMode::kDiagonal
            ? build_fixed_probes(train, val, base, eps)
            : build_full_matrix_probes(train, val, base, eps,
                                       splitmix64(seed));
    const Eigen::MatrixXd sigma = assemble_sigma(probes, train, mode);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv[0];
    double smin = 0.0;
    for (Eigen::Index k = sv.size() - 1; k >= 0; --k) {
      if (sv[k] > 1e-10 * smax) {
        smin = sv[k];
        break;
      }
    }
    const double cond = smin > 0.0
                            ? smax / smin
                            : std::numeric_limits<double>::infinity();
    choice.conditions.push_back(cond);
    if (cond < best_cond) {
      best_cond = cond;
      best_eps = eps;
    }
    if (choice.epsilon == 0.0 && cond < max_condition) choice.epsilon = eps;
  }
  if (choice.epsilon == 0.0) choice.epsilon = best_eps;
  return choice;
}

}  // namespace ewopt
