#pragma once

#include <string>
#include <vector>

#include "ewopt/classifier.hpp"
#include "ewopt/elicit.hpp"
#include "ewopt/metrics.hpp"

namespace ewopt {

struct PiEwResult {
  PostShiftRule rule;
  ElicitationResult elicitation;
};

// Elicits example weights against the evaluator, then forms the plug-in
// rule argmax_i W_i(x) eta_i(x) (full mode: argmax_j sum_i W_ij(x)
// eta_i(x)); ties go to the lowest class index.
PiEwResult pi_ew(const ProbeEvaluator& evaluator, const Sample& train,
                 const Sample& val, const Materialized& base,
                 const ElicitOptions& opts);

// Convenience overload: the evaluator computes `metric` on the validation
// sample.
PiEwResult pi_ew(const MetricSpec& metric, const Sample& train,
                 const Sample& val, const Materialized& base,
                 const ElicitOptions& opts);

// Predictions of the rule on any sample carrying phi and eta.
std::vector<int> apply_rule(const PostShiftRule& rule, const Sample& sample);

// Writes the rule (coefficients, shape, tie-break policy) as JSON,
// sufficient to re-apply it to new data with the same basis and model.
void write_rule_report(const std::string& path, const PostShiftRule& rule,
                       const std::vector<std::string>& basis_names = {});

}  // namespace ewopt
