#include "ewopt/fw.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ewopt/error.hpp"

namespace ewopt {

double fw_step_size(int t) {
  if (t < 0) throw Error("fw: negative iteration index");
  return 2.0 / (t + 2.0);
}

FwState fw_step(const FwState& state, const DeterministicRule& direction,
                const Eigen::VectorXd& c_tilde) {
  const double s = fw_step_size(state.t);
  FwState next;
  next.t = state.t + 1;
  next.h = mix(state.h, RandomizedClassifier::pure(direction), 1.0 - s);
  next.c = (1.0 - s) * state.c + s * c_tilde;
  return next;
}

namespace {

Sample subsample(const Sample& s, Eigen::Index begin, Eigen::Index count) {
  Dataset d;
  d.features = s.data.features.middleRows(begin, count);
  d.labels.assign(s.data.labels.begin() + begin,
                  s.data.labels.begin() + begin + count);
  d.num_classes = s.data.num_classes;
  d.label_map = s.data.label_map;
  if (!s.data.group_ids.empty())
    d.group_ids.assign(s.data.group_ids.begin() + begin,
                       s.data.group_ids.begin() + begin + count);
  if (!s.data.protected_ids.empty())
    d.protected_ids.assign(s.data.protected_ids.begin() + begin,
                           s.data.protected_ids.begin() + begin + count);
  Eigen::MatrixXd phi =
      s.phi.size() > 0 ? s.phi.middleRows(begin, count) : Eigen::MatrixXd();
  Eigen::MatrixXd eta =
      s.eta.size() > 0 ? s.eta.middleRows(begin, count) : Eigen::MatrixXd();
  return make_sample(std::move(d), std::move(phi), std::move(eta));
}

}  // namespace

FwResult fw_eg(const MetricSpec& metric, const Sample& train,
               const Sample& val, const FwOptions& opts) {
  if (opts.iterations < 1) throw Error("fw: iterations must be positive");
  if (train.eta.size() == 0 || val.eta.size() == 0)
    throw Error("fw: probability model required on train and val");
  if (opts.known_gradient && metric.is_oracle())
    throw Error("fw: known-gradient path requires a closed-form metric");
  if (opts.known_gradient && !metric.diagonal_only())
    throw Error("fw: known-gradient path requires a diagonal metric");

  // Validation split: val1 elicits, val2 measures confusions.
  const bool halved = opts.split == SplitMode::kHalved;
  if (halved && metric.is_oracle())
    throw Error("fw: a black-box handle is bound to one sample and cannot "
                "score both validation halves; use the shared split");
  const Eigen::Index n_val = val.data.size();
  const Eigen::Index n1 = halved ? (n_val + 1) / 2 : n_val;
  Sample val1_storage, val2_storage;
  const Sample* val1 = &val;
  const Sample* val2 = &val;
  if (halved) {
    if (n_val < 2) throw Error("fw: halved split needs at least 2 rows");
    val1_storage = subsample(val, 0, n1);
    val2_storage = subsample(val, n1, n_val - n1);
    val1 = &val1_storage;
    val2 = &val2_storage;
  }

  const int m = train.data.num_classes;
  const Eigen::VectorXd priors2 = val2->data.priors();

  FwState state;
  state.h = RandomizedClassifier::pure(ArgmaxRule{});
  Eigen::MatrixXd h_train = distribution(state.h, train);
  Eigen::MatrixXd h_val1 = distribution(state.h, *val1);
  Eigen::MatrixXd h_val2 = distribution(state.h, *val2);
  state.c = confusion(val2->data, h_val2).diagonal();

  FwResult out;
  out.trace.c0 = state.c;
  out.trace.val1_size = val1->data.size();
  out.trace.val2_size = val2->data.size();
  out.trace.initial_objective =
      metric.is_oracle() ? metric.oracle(h_val2)
                         : eval_diag(metric, state.c, priors2);

  ElicitOptions eopts = opts.elicit;
  eopts.mode = WeightMode::kDiagonal;
  eopts.epsilon = opts.epsilon;
  // The unknown path measures the metric relative to the iterate, so the
  // probe rows must be centered on it as well.
  eopts.center_on_base = !opts.known_gradient;
  if (eopts.probe_kind == ProbeKind::kFullRandom)
    throw Error("fw: full-matrix probes are not a diagonal-mode probe kind");

  for (int t = 0; t < opts.iterations; ++t) {
    FwIterRecord rec;
    rec.t = t;
    rec.known_path = opts.known_gradient;

    ProbeEvaluator evaluator;
    const Dataset& val1_data = val1->data;
    if (opts.known_gradient) {
      MetricFlags flags;
      rec.beta = grad_diag(metric, state.c, priors2, &flags);
      rec.grad_clamped = flags.grad_clamped;
      const Eigen::VectorXd beta = rec.beta;
      evaluator = [beta, &val1_data](const Eigen::MatrixXd& dist) {
        return beta.dot(confusion(val1_data, dist).diagonal());
      };
    } else {
      const double at_iterate = metric_value(metric, val1_data, h_val1);
      evaluator = [&metric, &val1_data, at_iterate](
                      const Eigen::MatrixXd& dist) {
        return metric_value(metric, val1_data, dist) - at_iterate;
      };
    }

    Materialized base{h_train, h_val1};
    eopts.seed = opts.elicit.seed + static_cast<std::uint64_t>(t);
    ElicitationResult er = elicit(evaluator, train, *val1, base, eopts);
    rec.alpha = er.coef.alpha;
    rec.condition_number = er.solve.condition_number;
    rec.rhs = er.rhs;

    PostShiftRule direction{er.coef};
    out.directions.push_back(direction);
    const std::vector<int> pred_tr = apply_rule(direction, train);
    const std::vector<int> pred_val1 = apply_rule(direction, *val1);
    const std::vector<int> pred_val2 =
        halved ? apply_rule(direction, *val2) : pred_val1;

    rec.c_tilde = confusion(val2->data, pred_val2).diagonal();

    const double s = fw_step_size(t);
    rec.step = s;
    state = fw_step(state, DeterministicRule{direction}, rec.c_tilde);

    h_train = (1.0 - s) * h_train + s * one_hot(pred_tr, m);
    h_val1 = (1.0 - s) * h_val1 + s * one_hot(pred_val1, m);
    h_val2 = (1.0 - s) * h_val2 + s * one_hot(pred_val2, m);

    rec.c_after = state.c;
    rec.objective = metric.is_oracle()
                        ? metric.oracle(h_val2)
                        : eval_diag(metric, state.c, priors2);
    out.trace.iters.push_back(std::move(rec));
  }

  out.classifier = compact(state.h);
  return out;
}

void write_trace(const std::string& path, const FwTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace: " + path);
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  {
    nlohmann::json j;
    j["t"] = -1;
    j["c0"] = vec(trace.c0);
    j["objective"] = trace.initial_objective;
    j["val1_size"] = trace.val1_size;
    j["val2_size"] = trace.val2_size;
    out << j.dump() << "\n";
  }
  for (const auto& it : trace.iters) {
    nlohmann::json j;
    j["t"] = it.t;
    j["known_path"] = it.known_path;
    if (it.beta.size() > 0) j["beta"] = vec(it.beta);
    j["alpha"] = vec(it.alpha);
    j["condition_number"] = it.condition_number;
    j["step"] = it.step;
    j["rhs"] = vec(it.rhs);
    j["c_tilde"] = vec(it.c_tilde);
    j["c_after"] = vec(it.c_after);
    j["objective"] = it.objective;
    j["grad_clamped"] = it.grad_clamped;
    out << j.dump() << "\n";
  }
}

}  // namespace ewopt
