#include "ewopt/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "ewopt/baselines.hpp"
#include "ewopt/basis.hpp"
#include "ewopt/classifier.hpp"
#include "ewopt/confusion.hpp"
#include "ewopt/dataset.hpp"
#include "ewopt/elicit.hpp"
#include "ewopt/error.hpp"
#include "ewopt/fw.hpp"
#include "ewopt/logistic.hpp"
#include "ewopt/metrics.hpp"
#include "ewopt/postshift.hpp"
#include "ewopt/rng.hpp"
#include "ewopt/shiftlab.hpp"

namespace ewopt {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ----------------------------------------------------------------------------
// JSON plumbing
// ----------------------------------------------------------------------------

const json& require(const json& j, const std::string& key,
                    const std::string& ctx) {
  if (!j.contains(key)) {
    throw Error("config: missing \"" + key + "\" in " + ctx);
  }
  return j.at(key);
}

Eigen::VectorXd to_vector(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) {
    throw Error("config: " + what + " must be a non-empty array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd to_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    throw Error("config: " + what + " must be a non-empty array of arrays");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error("config: " + what + " rows have unequal lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return out;
}

json from_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json from_matrix(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    rows.push_back(from_vector(M.row(r).transpose()));
  }
  return rows;
}

// ----------------------------------------------------------------------------
// Generator / shift parsing
// ----------------------------------------------------------------------------

GaussianSpec parse_gaussian(const json& j, const std::string& ctx) {
  GaussianSpec s;
  s.means = to_matrix(require(j, "means", ctx), ctx + ".means");
  s.sigma = j.value("sigma", 1.0);
  s.priors = to_vector(require(j, "priors", ctx), ctx + ".priors");
  s.cluster_coord = j.value("cluster_coord", 0);
  if (j.contains("cluster_thresholds")) {
    s.cluster_thresholds = j["cluster_thresholds"].get<std::vector<double>>();
  }
  s.validate();
  return s;
}

SyntheticSpec parse_generator(const json& j) {
  const std::string kind = require(j, "kind", "generator").get<std::string>();
  if (kind == "discrete") {
    DiscreteSpec s;
    s.points = to_matrix(require(j, "points", "generator"), "generator.points");
    s.joint = to_matrix(require(j, "joint", "generator"), "generator.joint");
    if (j.contains("point_cluster")) {
      s.point_cluster = j["point_cluster"].get<std::vector<int>>();
    }
    s.validate();
    return s;
  }
  if (kind == "gaussian") {
    return parse_gaussian(j, "generator");
  }
  throw Error("config: unknown generator kind \"" + kind + "\"");
}

std::optional<ShiftSpec> parse_shift(const json& j) {
  const std::string kind = j.value("kind", "none");
  if (kind == "none") return std::nullopt;
  if (kind == "iln") {
    IlnShift s;
    s.T = to_matrix(require(j, "T", "shift"), "shift.T");
    return ShiftSpec{s};
  }
  if (kind == "cdln") {
    CdlnShift s;
    const json& mats = require(j, "T_per_cluster", "shift");
    if (!mats.is_array() || mats.empty()) {
      throw Error("config: shift.T_per_cluster must be a non-empty array");
    }
    for (const auto& mj : mats) {
      s.T_per_cluster.push_back(to_matrix(mj, "shift.T_per_cluster entry"));
    }
    return ShiftSpec{s};
  }
  if (kind == "idln") {
    IdlnShift s;
    s.T_low = to_matrix(require(j, "T_low", "shift"), "shift.T_low");
    s.T_high = to_matrix(require(j, "T_high", "shift"), "shift.T_high");
    s.coord = j.value("coord", 0);
    s.scale = j.value("scale", 1.0);
    s.offset = j.value("offset", 0.0);
    return ShiftSpec{s};
  }
  if (kind == "ds") {
    DsShift s;
    if (j.contains("marginal")) {
      s.discrete_marginal = to_vector(j["marginal"], "shift.marginal");
    }
    if (j.contains("gaussian_marginal")) {
      s.gaussian_marginal =
          parse_gaussian(j["gaussian_marginal"], "shift.gaussian_marginal");
    }
    if (s.discrete_marginal.size() == 0 && !s.gaussian_marginal.has_value()) {
      throw Error("config: domain shift needs marginal or gaussian_marginal");
    }
    return ShiftSpec{s};
  }
  throw Error("config: unknown shift kind \"" + kind + "\"");
}

// The training-law conditional P(noisy y | x) at arbitrary feature rows.
Eigen::MatrixXd noisy_conditional_at(const SyntheticSpec& spec,
                                     const std::optional<ShiftSpec>& shift,
                                     const Eigen::MatrixXd& X) {
  if (const auto* disc = std::get_if<DiscreteSpec>(&spec)) {
    const DiscreteSpec table =
        shift && !std::holds_alternative<DsShift>(*shift)
            ? corrupt_population(*disc, *shift)
            : *disc;
    const Eigen::MatrixXd cond = table.conditional();
    Eigen::MatrixXd out(X.rows(), table.classes());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      Eigen::Index found = -1;
      for (Eigen::Index p = 0; p < disc->support(); ++p) {
        if (X.row(r) == disc->points.row(p)) {
          found = p;
          break;
        }
      }
      if (found < 0) {
        throw Error("feature row " + std::to_string(r) +
                    " is not a support point of the discrete generator");
      }
      out.row(r) = cond.row(found);
    }
    return out;
  }
  const auto& gauss = std::get<GaussianSpec>(spec);
  Eigen::MatrixXd cond = gauss.conditional(X);
  if (shift && !std::holds_alternative<DsShift>(*shift)) {
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const Eigen::MatrixXd T = [&]() -> Eigen::MatrixXd {
        if (const auto* iln = std::get_if<IlnShift>(&*shift)) return iln->T;
        if (const auto* cdln = std::get_if<CdlnShift>(&*shift)) {
          const int c = gauss.cluster_of(X.row(r));
          if (c >= static_cast<int>(cdln->T_per_cluster.size())) {
            throw Error("cluster id " + std::to_string(c) +
                        " has no transition matrix");
          }
          return cdln->T_per_cluster[static_cast<std::size_t>(c)];
        }
        return std::get<IdlnShift>(*shift).at(X.row(r));
      }();
      cond.row(r) = (cond.row(r) * T).eval();
    }
  }
  return cond;
}

// ----------------------------------------------------------------------------
// Data stage
// ----------------------------------------------------------------------------

struct SplitData {
  Dataset train, val, test;
  // Exact or file-provided probability rows, when available.
  std::optional<ProbabilityModel> given_train, given_val, given_test;
};

ColumnSchema parse_schema(const json& j) {
  ColumnSchema s;
  s.label = j.value("label", "label");
  if (j.contains("features")) {
    s.features = j["features"].get<std::vector<std::string>>();
  }
  s.group = j.value("group", "");
  s.protected_attr = j.value("protected", "");
  s.prob_prefix = j.value("prob_prefix", "");
  s.num_classes = j.value("num_classes", 0);
  return s;
}

SplitData build_synthetic(const json& dconf, std::uint64_t seed,
                          json* data_report) {
  const SyntheticSpec spec =
      parse_generator(require(dconf, "generator", "data"));
  const std::optional<ShiftSpec> shift =
      dconf.contains("shift") ? parse_shift(dconf["shift"]) : std::nullopt;
  const auto n_train =
      require(dconf, "n_train", "data").get<Eigen::Index>();
  const auto n_val = require(dconf, "n_val", "data").get<Eigen::Index>();
  const auto n_test = require(dconf, "n_test", "data").get<Eigen::Index>();
  const bool population = dconf.value("population", false);
  const bool prot_from_cluster =
      dconf.value("protected_from_cluster", false);

  Draw train_draw, val_draw, test_draw;
  if (population) {
    const auto* disc = std::get_if<DiscreteSpec>(&spec);
    if (!disc) {
      throw Error("config: population mode requires a discrete generator");
    }
    const DiscreteSpec noisy =
        shift ? corrupt_population(*disc, *shift) : *disc;
    train_draw = exact_population(noisy, n_train);
    val_draw = exact_population(*disc, n_val);
    test_draw = exact_population(*disc, n_test);
  } else {
    auto rng_train = substream(seed, "sample-train");
    Draw clean_train = sample_clean(spec, n_train, rng_train);
    if (shift) {
      auto rng_corrupt = substream(seed, "corrupt");
      train_draw = corrupt(spec, clean_train, *shift, rng_corrupt);
    } else {
      train_draw = std::move(clean_train);
    }
    auto rng_val = substream(seed, "sample-val");
    val_draw = sample_clean(spec, n_val, rng_val);
    auto rng_test = substream(seed, "sample-test");
    test_draw = sample_clean(spec, n_test, rng_test);
  }

  SplitData out;
  out.train = std::move(train_draw.data);
  out.val = std::move(val_draw.data);
  out.test = std::move(test_draw.data);
  out.given_train = std::move(train_draw.conditional);
  // Validation and test carry the same model the train data estimates: the
  // training-law conditional evaluated at their features.
  out.given_val =
      ProbabilityModel{noisy_conditional_at(spec, shift, out.val.features)};
  out.given_test =
      ProbabilityModel{noisy_conditional_at(spec, shift, out.test.features)};

  if (prot_from_cluster) {
    for (Dataset* d : {&out.train, &out.val, &out.test}) {
      if (d->group_ids.empty()) {
        throw Error("config: protected_from_cluster needs cluster ids");
      }
      d->protected_ids = d->group_ids;
    }
  }
  if (data_report) {
    (*data_report)["population"] = population;
    (*data_report)["shift"] = dconf.contains("shift")
                                  ? dconf["shift"].value("kind", "none")
                                  : "none";
  }
  return out;
}

SplitData build_data(const json& dconf, std::uint64_t seed,
                     json* data_report) {
  const std::string kind = require(dconf, "kind", "data").get<std::string>();
  SplitData out;
  if (kind == "files") {
    const ColumnSchema schema =
        parse_schema(dconf.value("columns", json::object()));
    LoadResult tr =
        load_dataset(require(dconf, "train", "data").get<std::string>(),
                     schema);
    LoadResult va =
        load_dataset(require(dconf, "val", "data").get<std::string>(), schema);
    LoadResult te =
        load_dataset(require(dconf, "test", "data").get<std::string>(),
                     schema);
    if (tr.data.num_classes != va.data.num_classes ||
        tr.data.num_classes != te.data.num_classes) {
      throw Error("data: splits disagree on the number of classes; declare "
                  "columns.num_classes");
    }
    out.train = std::move(tr.data);
    out.val = std::move(va.data);
    out.test = std::move(te.data);
    out.given_train = std::move(tr.probs);
    out.given_val = std::move(va.probs);
    out.given_test = std::move(te.probs);
  } else if (kind == "synthetic") {
    out = build_synthetic(dconf, seed, data_report);
  } else {
    throw Error("config: unknown data kind \"" + kind + "\"");
  }
  if (data_report) {
    (*data_report)["kind"] = kind;
    (*data_report)["train_size"] = out.train.size();
    (*data_report)["val_size"] = out.val.size();
    (*data_report)["test_size"] = out.test.size();
    (*data_report)["num_classes"] = out.train.num_classes;
    (*data_report)["dim"] = out.train.dim();
  }
  return out;
}

// ----------------------------------------------------------------------------
// Probability model stage
// ----------------------------------------------------------------------------

struct EtaBundle {
  Eigen::MatrixXd train, val, test;
};

EtaBundle build_eta(const json& config, const SplitData& splits,
                    json* eta_report) {
  const json econf = config.value("eta", json::object());
  const std::string source = econf.value("source", "fit");
  EtaBundle out;
  if (source == "fit") {
    LogisticOptions lo;
    lo.iterations = econf.value("iterations", 2000);
    lo.learning_rate = econf.value("learning_rate", 1.0);
    lo.l2 = econf.value("l2", 1e-4);
    const LogisticModel model = fit_logistic(splits.train, lo);
    out.train = model.predict_proba(splits.train.features);
    out.val = model.predict_proba(splits.val.features);
    out.test = model.predict_proba(splits.test.features);
    if (eta_report) (*eta_report)["final_loss"] = model.final_loss;
  } else if (source == "columns" || source == "exact") {
    if (!splits.given_train || !splits.given_val || !splits.given_test) {
      throw Error("config: eta source \"" + source +
                  "\" needs probability columns (or a synthetic generator)");
    }
    out.train = splits.given_train->probs;
    out.val = splits.given_val->probs;
    out.test = splits.given_test->probs;
  } else {
    throw Error("config: unknown eta source \"" + source + "\"");
  }
  if (eta_report) (*eta_report)["source"] = source;
  return out;
}

// ----------------------------------------------------------------------------
// Basis stage
// ----------------------------------------------------------------------------

int max_groups(const SplitData& s) {
  int g = 0;
  for (const Dataset* d : {&s.train, &s.val, &s.test}) {
    g = std::max(g, d->num_groups());
  }
  return g;
}

BasisSet parse_basis(const json& arr, const SplitData& splits,
                     std::vector<std::string>* names) {
  BasisSet set;
  bool any_rbf = false;
  const json entries = arr.is_null() ? json::array({json{{"kind", "constant"}}})
                                     : arr;
  if (!entries.is_array() || entries.empty()) {
    throw Error("config: basis must be a non-empty array");
  }
  for (const auto& e : entries) {
    const std::string kind = require(e, "kind", "basis entry").get<std::string>();
    if (kind == "constant") {
      set.functions.push_back(ConstantBasis{});
      if (names) names->push_back("constant");
    } else if (kind == "clusters") {
      const int g = max_groups(splits);
      if (g < 1) throw Error("config: cluster basis needs cluster ids");
      for (int c = 0; c < g; ++c) {
        set.functions.push_back(ClusterBasis{c});
        if (names) names->push_back("cluster:" + std::to_string(c));
      }
    } else if (kind == "binary") {
      BinaryFeatureBasis b;
      b.column = require(e, "column", "binary basis").get<int>();
      b.value = e.value("value", 1.0);
      set.functions.push_back(b);
      if (names) {
        names->push_back("binary:" + std::to_string(b.column));
      }
    } else if (kind == "rbf") {
      RbfBasis b;
      b.center = to_vector(require(e, "center", "rbf basis"), "rbf center");
      b.sigma = e.value("sigma", 1.0);
      set.functions.push_back(b);
      any_rbf = true;
      if (names) {
        names->push_back("rbf:" + std::to_string(set.size() - 1));
      }
    } else {
      throw Error("config: unknown basis kind \"" + kind + "\"");
    }
  }
  if (any_rbf) {
    set.standardizer = Standardizer::fit(splits.train.features);
  }
  return set;
}

// ----------------------------------------------------------------------------
// Metric stage
// ----------------------------------------------------------------------------

MetricSpec parse_metric(const json& mconf, const Dataset& handle_data,
                        int num_classes) {
  const std::string name = require(mconf, "name", "metric").get<std::string>();
  if (name == "accuracy") return MetricSpec::accuracy(num_classes);
  if (name == "gmean") return MetricSpec::gmean();
  if (name == "fmeasure-binary") return MetricSpec::fmeasure_binary();
  if (name == "fmeasure-macro") return MetricSpec::fmeasure_macro();
  if (name == "linear") {
    if (mconf.contains("diag")) {
      return MetricSpec::linear_diag(to_vector(mconf["diag"], "metric.diag"));
    }
    return MetricSpec::linear_full(
        to_matrix(require(mconf, "coeffs", "metric"), "metric.coeffs"));
  }
  if (name == "fairness") {
    return MetricSpec::black_box(make_fairness_oracle(handle_data));
  }
  throw Error("config: unknown metric \"" + name + "\"");
}

// ----------------------------------------------------------------------------
// Method stage
// ----------------------------------------------------------------------------

std::vector<int> preds_from_dist(const Eigen::MatrixXd& dist) {
  std::vector<int> preds(static_cast<std::size_t>(dist.rows()));
  for (Eigen::Index r = 0; r < dist.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < dist.cols(); ++c) {
      if (dist(r, c) > dist(r, best)) best = static_cast<int>(c);
    }
    preds[static_cast<std::size_t>(r)] = best;
  }
  return preds;
}

ElicitOptions parse_elicit(const json& j, std::uint64_t probe_seed,
                           bool* auto_epsilon) {
  ElicitOptions eo;
  const std::string mode = j.value("mode", "diagonal");
  if (mode == "diagonal") {
    eo.mode = WeightMode::kDiagonal;
  } else if (mode == "full") {
    eo.mode = WeightMode::kFull;
  } else {
    throw Error("config: unknown elicit mode \"" + mode + "\"");
  }
  const std::string probes = j.value(
      "probes", eo.mode == WeightMode::kFull ? "full-random" : "fixed");
  if (probes == "fixed") {
    eo.probe_kind = ProbeKind::kFixed;
  } else if (probes == "threshold") {
    eo.probe_kind = ProbeKind::kThreshold;
  } else if (probes == "full-random") {
    eo.probe_kind = ProbeKind::kFullRandom;
  } else {
    throw Error("config: unknown probe kind \"" + probes + "\"");
  }
  if (auto_epsilon) *auto_epsilon = false;
  if (j.contains("epsilon")) {
    if (j["epsilon"].is_string()) {
      if (j["epsilon"].get<std::string>() != "auto") {
        throw Error("config: elicit.epsilon must be a number or \"auto\"");
      }
      if (!auto_epsilon) {
        throw Error("config: elicit.epsilon \"auto\" is not valid here");
      }
      *auto_epsilon = true;
    } else {
      eo.epsilon = j["epsilon"].get<double>();
    }
  }
  eo.threshold.gamma = j.value("gamma", eo.threshold.gamma);
  eo.threshold.omega = j.value("omega", eo.threshold.omega);
  eo.threshold.grid_step = j.value("grid_step", eo.threshold.grid_step);
  eo.solve.ridge = j.value("ridge", 0.0);
  eo.max_retries = j.value("max_retries", eo.max_retries);
  eo.seed = probe_seed;
  return eo;
}

// Base classifier the probes perturb. The uniform default suits a single
// basis; with cluster bases its probe rows become linearly dependent (the
// per-class perturbations cancel within each cluster), so configs switch
// to the argmax of the training model instead.
Materialized parse_base(const json& j, const Sample& train,
                        const Sample& val) {
  const std::string base = j.value("base", "uniform");
  if (base == "uniform") return uniform_base(train, val);
  if (base == "argmax") {
    return materialize_pair(RandomizedClassifier::pure(ArgmaxRule{}), train,
                            val);
  }
  throw Error("config: unknown elicit base \"" + base + "\"");
}

struct MethodOutput {
  Eigen::MatrixXd dist_train, dist_val, dist_test;
  json artifacts = json::object();
  std::optional<FwTrace> trace;
};

json elicitation_artifacts(const ElicitationResult& er) {
  json a;
  a["alpha"] = from_vector(er.coef.alpha);
  a["mode"] =
      er.coef.mode == WeightMode::kDiagonal ? "diagonal" : "full";
  a["condition_number"] = er.solve.condition_number;
  a["residual"] = er.solve.residual;
  a["effective_rank"] = er.solve.effective_rank;
  a["ill_conditioned"] = er.solve.ill_conditioned;
  a["retries"] = er.retries;
  a["num_probes"] = er.probes.probes.size();
  a["probes_feasible"] = er.probes.all_feasible();
  a["epsilon"] = er.probes.epsilon;
  return a;
}

MethodOutput run_method(const json& config, const MetricSpec& metric,
                        const SplitData& splits, const Sample& train,
                        const Sample& val, const Sample& test,
                        std::uint64_t seed, const std::string& out_dir) {
  const json& mconf = require(config, "method", "config");
  const std::string name = require(mconf, "name", "method").get<std::string>();
  const std::uint64_t probe_seed = splitmix64(seed ^ fnv1a("probes"));
  MethodOutput out;

  auto hard = [&](const std::vector<int>& p_tr, const std::vector<int>& p_va,
                  const std::vector<int>& p_te) {
    const int m = splits.train.num_classes;
    out.dist_train = one_hot(p_tr, m);
    out.dist_val = one_hot(p_va, m);
    out.dist_test = one_hot(p_te, m);
  };

  if (name == "pi-ew") {
    bool auto_eps = false;
    const json econf = mconf.value("elicit", json::object());
    ElicitOptions eo = parse_elicit(econf, probe_seed, &auto_eps);
    const Materialized base = parse_base(econf, train, val);
    out.artifacts["base"] = econf.value("base", "uniform");
    if (auto_eps) {
      const EpsilonChoice choice =
          select_epsilon(train, val, base, eo.mode, probe_seed);
      eo.epsilon = choice.epsilon;
      out.artifacts["epsilon_grid_conditions"] = choice.conditions;
    }
    const PiEwResult r = pi_ew(metric, train, val, base, eo);
    hard(apply_rule(r.rule, train), apply_rule(r.rule, val),
         apply_rule(r.rule, test));
    out.artifacts.update(elicitation_artifacts(r.elicitation));
    write_rule_report((fs::path(out_dir) / "rule.json").string(), r.rule);
    out.artifacts["rule_file"] = "rule.json";
  } else if (name == "fw-eg-known" || name == "fw-eg-unknown") {
    FwOptions fo;
    fo.known_gradient = name == "fw-eg-known";
    const json fconf = mconf.value("fw", json::object());
    fo.iterations = fconf.value("iterations", 25);
    fo.epsilon = fconf.value("epsilon", fo.known_gradient ? 0.4 : 0.1);
    const std::string split = fconf.value("split", "shared");
    if (split == "shared") {
      fo.split = SplitMode::kShared;
    } else if (split == "halved") {
      fo.split = SplitMode::kHalved;
    } else {
      throw Error("config: unknown fw split \"" + split + "\"");
    }
    fo.elicit = parse_elicit(mconf.value("elicit", json::object()),
                             probe_seed, nullptr);
    const FwResult r = fw_eg(metric, train, val, fo);
    out.dist_train = distribution(r.classifier, train);
    out.dist_val = distribution(r.classifier, val);
    out.dist_test = distribution(r.classifier, test);
    out.trace = r.trace;
    out.artifacts["iterations"] = fo.iterations;
    out.artifacts["epsilon"] = fo.epsilon;
    out.artifacts["split"] = split;
    out.artifacts["components"] = r.classifier.components.size();
    json conds = json::array(), objs = json::array();
    for (const auto& it : r.trace.iters) {
      conds.push_back(it.condition_number);
      objs.push_back(it.objective);
    }
    out.artifacts["condition_numbers"] = conds;
    out.artifacts["objectives"] = objs;
  } else if (name == "argmax") {
    const DeterministicRule rule = argmax_baseline();
    hard(materialize(rule, train), materialize(rule, val),
         materialize(rule, test));
  } else if (name == "coordinate-search") {
    const double spacing = mconf.value("spacing", 0.01);
    const CoordinateSearchResult r =
        coordinate_search_plugin(metric, val, spacing);
    hard(materialize(r.rule, train), materialize(r.rule, val),
         materialize(r.rule, test));
    out.artifacts["weights"] = from_vector(r.weights);
    out.artifacts["zeta"] = from_vector(r.best_zeta);
    out.artifacts["queries"] = r.queries;
    out.artifacts["capped"] = r.capped;
  } else {
    throw Error("config: unknown method \"" + name + "\"");
  }
  out.artifacts["name"] = name;
  return out;
}

// ----------------------------------------------------------------------------
// Outputs
// ----------------------------------------------------------------------------

void write_predictions(const std::string& path, const Dataset& data,
                       const Eigen::MatrixXd& dist) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write predictions: " + path);
  const int m = data.num_classes;
  out << "label_index,pred_index";
  for (int k = 1; k <= m; ++k) out << ",w" << k;
  if (!data.group_ids.empty()) out << ",group";
  if (!data.protected_ids.empty()) out << ",prot";
  out << "\n";
  const std::vector<int> preds = preds_from_dist(dist);
  char buf[64];
  for (Eigen::Index r = 0; r < data.size(); ++r) {
    out << data.labels[static_cast<std::size_t>(r)] << ","
        << preds[static_cast<std::size_t>(r)];
    for (int k = 0; k < m; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", dist(r, k));
      out << "," << buf;
    }
    if (!data.group_ids.empty()) {
      out << "," << data.group_ids[static_cast<std::size_t>(r)];
    }
    if (!data.protected_ids.empty()) {
      out << "," << data.protected_ids[static_cast<std::size_t>(r)];
    }
    out << "\n";
  }
}

// Per-split metric; black-box metrics need a handle bound to that split,
// which only exists when the split carries what the handle reads.
json split_metric(const json& mconf, const Dataset& data,
                  const Eigen::MatrixXd& dist) {
  try {
    const MetricSpec spec = parse_metric(mconf, data, data.num_classes);
    return metric_value(spec, data, dist);
  } catch (const Error&) {
    return nullptr;
  }
}

void write_summary(const std::string& path, const json& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write summary: " + path);
  auto metric_str = [&](const char* split) {
    const json& v = report["metrics"][split];
    if (v.is_null()) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v.get<double>());
    return std::string(buf);
  };
  out << "method  " << report["method"]["name"].get<std::string>() << "\n"
      << "metric  " << report["metric"]["name"].get<std::string>() << "\n"
      << "train   " << metric_str("train") << "\n"
      << "val     " << metric_str("val") << "\n"
      << "test    " << metric_str("test") << "\n";
  const json& a = report["method"];
  if (a.contains("condition_number")) {
    out << "cond    " << a["condition_number"].get<double>() << "\n";
  }
  if (a.contains("components")) {
    out << "parts   " << a["components"].get<std::size_t>() << "\n";
  }
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

// ----------------------------------------------------------------------------
// Entry points
// ----------------------------------------------------------------------------

RunOutcome run_config(const json& config, const std::string& out_dir) {
  const auto t_start = std::chrono::steady_clock::now();
  if (config.value("schema_version", 0) != kConfigSchemaVersion) {
    throw Error("config: schema_version must be " +
                std::to_string(kConfigSchemaVersion));
  }
  if (!config.contains("seed")) throw Error("config: seed is mandatory");
  const auto seed = config["seed"].get<std::uint64_t>();
  fs::create_directories(out_dir);

  json report;
  report["schema_version"] = kConfigSchemaVersion;
  report["library_version"] = kLibraryVersion;
  report["config"] = config;

  json data_report;
  SplitData splits = build_data(require(config, "data", "config"), seed,
                                &data_report);
  const auto t_data = std::chrono::steady_clock::now();

  json eta_report;
  const EtaBundle eta = build_eta(config, splits, &eta_report);
  const auto t_eta = std::chrono::steady_clock::now();

  std::vector<std::string> basis_names;
  const BasisSet basis =
      parse_basis(config.value("basis", json{}), splits, &basis_names);
  report["basis"] = basis_names;
  data_report["num_bases"] = basis.size();
  report["data"] = data_report;
  report["eta"] = eta_report;

  const Sample train =
      make_sample(splits.train, basis.evaluate(splits.train), eta.train);
  const Sample val = make_sample(splits.val, basis.evaluate(splits.val),
                                 eta.val);
  const Sample test = make_sample(splits.test, basis.evaluate(splits.test),
                                  eta.test);

  const json& mconf = require(config, "metric", "config");
  const MetricSpec metric =
      parse_metric(mconf, val.data, val.data.num_classes);
  report["metric"] = json{{"name", mconf["name"]}};

  MethodOutput method =
      run_method(config, metric, splits, train, val, test, seed, out_dir);
  const auto t_method = std::chrono::steady_clock::now();

  report["method"] = method.artifacts;

  json metrics;
  metrics["train"] = split_metric(mconf, train.data, method.dist_train);
  metrics["val"] = split_metric(mconf, val.data, method.dist_val);
  metrics["test"] = split_metric(mconf, test.data, method.dist_test);
  report["metrics"] = metrics;

  json files;
  write_predictions((fs::path(out_dir) / "predictions_train.csv").string(),
                    train.data, method.dist_train);
  write_predictions((fs::path(out_dir) / "predictions_val.csv").string(),
                    val.data, method.dist_val);
  write_predictions((fs::path(out_dir) / "predictions_test.csv").string(),
                    test.data, method.dist_test);
  files["predictions"] =
      json{{"train", "predictions_train.csv"},
           {"val", "predictions_val.csv"},
           {"test", "predictions_test.csv"}};
  if (method.trace) {
    write_trace((fs::path(out_dir) / "trace.jsonl").string(), *method.trace);
    files["trace"] = "trace.jsonl";
  }
  report["files"] = files;

  {
    std::ofstream rf(fs::path(out_dir) / "report.json");
    if (!rf) throw Error("cannot write report under " + out_dir);
    rf << report.dump(2) << "\n";
  }
  write_summary((fs::path(out_dir) / "summary.txt").string(), report);

  const auto t_end = std::chrono::steady_clock::now();
  auto ms = [](auto a, auto b) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(b - a)
        .count();
  };
  json timing;
  timing["timestamp"] = iso_timestamp();
  timing["wall_ms"] = json{{"total", ms(t_start, t_end)},
                           {"data", ms(t_start, t_data)},
                           {"eta", ms(t_data, t_eta)},
                           {"method", ms(t_eta, t_method)},
                           {"outputs", ms(t_method, t_end)}};
  {
    std::ofstream tf(fs::path(out_dir) / "timing.json");
    tf << timing.dump(2) << "\n";
  }

  RunOutcome out;
  out.report = std::move(report);
  out.timing = std::move(timing);
  out.selection_metric = metrics["val"].is_null()
                             ? -std::numeric_limits<double>::infinity()
                             : metrics["val"].get<double>();
  return out;
}

json sweep_config(const json& config, const std::string& out_dir) {
  const json& sconf = require(config, "sweep", "config");
  std::vector<json> candidates;
  const json eps_grid = sconf.value("epsilon", json::array());
  const json basis_sets = sconf.value("basis_sets", json::array());
  if (eps_grid.empty() && basis_sets.empty()) {
    throw Error("config: sweep needs an epsilon grid or basis_sets");
  }

  auto push = [&](const json& eps, const json& basis) {
    json child = config;
    child.erase("sweep");
    json desc;
    if (!eps.is_null()) {
      child["method"]["elicit"]["epsilon"] = eps;
      desc["epsilon"] = eps;
    }
    if (!basis.is_null()) {
      child["basis"] = basis;
      desc["basis"] = basis;
    }
    candidates.push_back(json{{"config", child}, {"desc", desc}});
  };
  if (!eps_grid.empty() && !basis_sets.empty()) {
    for (const auto& b : basis_sets)
      for (const auto& e : eps_grid) push(e, b);
  } else if (!eps_grid.empty()) {
    for (const auto& e : eps_grid) push(e, json{});
  } else {
    for (const auto& b : basis_sets) push(json{}, b);
  }

  fs::create_directories(out_dir);
  json result;
  result["candidates"] = json::array();
  int winner = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const std::string child_dir =
        (fs::path(out_dir) / ("candidate-" + std::to_string(k))).string();
    json row;
    row["dir"] = "candidate-" + std::to_string(k);
    row["desc"] = candidates[k]["desc"];
    try {
      const RunOutcome rc = run_config(candidates[k]["config"], child_dir);
      row["val_metric"] = rc.selection_metric;
      if (rc.selection_metric > best) {
        best = rc.selection_metric;
        winner = static_cast<int>(k);
      }
    } catch (const std::exception& e) {
      row["error"] = e.what();
    }
    result["candidates"].push_back(row);
  }
  if (winner < 0) {
    throw Error("sweep: every candidate failed");
  }
  result["winner"] = winner;
  result["winner_dir"] = "candidate-" + std::to_string(winner);
  result["winner_val_metric"] = best;
  {
    std::ofstream sf(fs::path(out_dir) / "sweep.json");
    if (!sf) throw Error("cannot write sweep report under " + out_dir);
    sf << result.dump(2) << "\n";
  }
  return result;
}

json synth_config(const json& config, const std::string& out_dir) {
  if (config.value("schema_version", 0) != kConfigSchemaVersion) {
    throw Error("config: schema_version must be " +
                std::to_string(kConfigSchemaVersion));
  }
  if (!config.contains("seed")) throw Error("config: seed is mandatory");
  json dconf = config.contains("data") ? config["data"] : config;
  dconf["kind"] = "synthetic";

  json data_report;
  const SplitData splits =
      build_data(dconf, config["seed"].get<std::uint64_t>(), &data_report);
  fs::create_directories(out_dir);
  write_dataset((fs::path(out_dir) / "train.csv").string(), splits.train,
                splits.given_train ? &*splits.given_train : nullptr);
  write_dataset((fs::path(out_dir) / "val.csv").string(), splits.val,
                splits.given_val ? &*splits.given_val : nullptr);
  write_dataset((fs::path(out_dir) / "test.csv").string(), splits.test,
                splits.given_test ? &*splits.given_test : nullptr);

  json meta;
  meta["schema_version"] = kConfigSchemaVersion;
  meta["config"] = config;
  meta["data"] = data_report;
  meta["files"] = json{{"train", "train.csv"},
                       {"val", "val.csv"},
                       {"test", "test.csv"}};
  if (config.contains("oracle")) {
    const json& oconf = config["oracle"];
    const SyntheticSpec spec =
        parse_generator(require(dconf, "generator", "data"));
    Dataset dummy;
    const MetricSpec metric = parse_metric(
        require(oconf, "metric", "oracle"), dummy,
        std::visit([](const auto& s) { return s.classes(); }, spec));
    const OracleReport rep =
        bayes_oracle(spec, metric, oconf.value("weight_grid", 20),
                     oconf.value("quad_grid", 200));
    meta["oracle"] = json{{"value", rep.value},
                          {"weights", from_vector(rep.weights)},
                          {"weight_grid", rep.weight_grid},
                          {"quad_grid", rep.quad_grid},
                          {"population_exact", rep.population_exact}};
  }
  {
    std::ofstream mf(fs::path(out_dir) / "meta.json");
    if (!mf) throw Error("cannot write meta under " + out_dir);
    mf << meta.dump(2) << "\n";
  }
  return meta;
}

json eval_predictions(const std::string& predictions_path,
                      const json& metric_config) {
  std::ifstream in(predictions_path);
  if (!in) throw Error("cannot open " + predictions_path);
  std::string header;
  if (!std::getline(in, header)) {
    throw Error(predictions_path + ": empty file");
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::string> names;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) names.push_back(tok);
  }
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int label_col = col("label_index");
  if (label_col < 0) {
    throw Error(predictions_path + ": missing label_index column");
  }
  int m = 0;
  while (col("w" + std::to_string(m + 1)) >= 0) ++m;
  if (m < 2) throw Error(predictions_path + ": missing w1..wm columns");
  const int w0 = col("w1");
  const int prot_col = col("prot");
  const int group_col = col("group");

  std::vector<int> labels, prot, groups;
  std::vector<double> flat;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cells;
    while (std::getline(ss, tok, ',')) cells.push_back(tok);
    if (cells.size() != names.size()) {
      throw Error(predictions_path + ":" + std::to_string(lineno) +
                  ": wrong column count");
    }
    labels.push_back(std::stoi(cells[static_cast<std::size_t>(label_col)]));
    for (int k = 0; k < m; ++k) {
      flat.push_back(std::stod(cells[static_cast<std::size_t>(w0 + k)]));
    }
    if (prot_col >= 0) {
      prot.push_back(std::stoi(cells[static_cast<std::size_t>(prot_col)]));
    }
    if (group_col >= 0) {
      groups.push_back(std::stoi(cells[static_cast<std::size_t>(group_col)]));
    }
  }
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (n == 0) throw Error(predictions_path + ": no data rows");

  Dataset data;
  data.features = Eigen::MatrixXd::Zero(n, 1);
  data.labels = labels;
  data.num_classes = m;
  data.label_map.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    data.label_map[static_cast<std::size_t>(k)] = k + 1;
  }
  data.protected_ids = prot;
  data.group_ids = groups;
  data.validate();

  Eigen::MatrixXd dist(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int k = 0; k < m; ++k) {
      dist(r, k) = flat[static_cast<std::size_t>(r * m + k)];
    }
  }

  const MetricSpec spec = parse_metric(metric_config, data, m);
  json out;
  out["value"] = metric_value(spec, data, dist);
  out["rows"] = n;
  out["classes"] = m;
  out["metric"] = metric_config.value("name", "");
  return out;
}

json parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config parse error in " + path + ": " + e.what());
  }
}

}  // namespace ewopt
