#include "ewopt/postshift.hpp"

#include <fstream>

#include <json.hpp>

#include "ewopt/error.hpp"

namespace ewopt {

PiEwResult pi_ew(const ProbeEvaluator& evaluator, const Sample& train,
                 const Sample& val, const Materialized& base,
                 const ElicitOptions& opts) {
  PiEwResult out;
  out.elicitation = elicit(evaluator, train, val, base, opts);
  out.rule.coef = out.elicitation.coef;
  return out;
}

PiEwResult pi_ew(const MetricSpec& metric, const Sample& train,
                 const Sample& val, const Materialized& base,
                 const ElicitOptions& opts) {
  const Dataset& val_data = val.data;
  ProbeEvaluator evaluator = [&metric, &val_data](const Eigen::MatrixXd& dist) {
    return metric_value(metric, val_data, dist);
  };
  return pi_ew(evaluator, train, val, base, opts);
}

std::vector<int> apply_rule(const PostShiftRule& rule, const Sample& sample) {
  return materialize(DeterministicRule{rule}, sample);
}

void write_rule_report(const std::string& path, const PostShiftRule& rule,
                       const std::vector<std::string>& basis_names) {
  nlohmann::json j;
  j["kind"] = "post-shift";
  j["mode"] = rule.coef.mode == WeightMode::kDiagonal ? "diagonal" : "full";
  j["num_bases"] = rule.coef.num_bases;
  j["num_classes"] = rule.coef.num_classes;
  j["tie_break"] = "lowest-index";
  j["alpha"] = std::vector<double>(
      rule.coef.alpha.data(), rule.coef.alpha.data() + rule.coef.alpha.size());
  if (!basis_names.empty()) j["basis"] = basis_names;

  std::ofstream out(path);
  if (!out) throw Error("cannot write rule report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace ewopt
