#include "ewopt/baselines.hpp"

#include <cmath>

#include "ewopt/confusion.hpp"
#include "ewopt/error.hpp"

namespace ewopt {

DeterministicRule argmax_baseline() { return ArgmaxRule{}; }

CoordinateSearchResult coordinate_search_plugin(const MetricSpec& metric,
                                                const Sample& val,
                                                double spacing) {
  if (spacing <= 0.0 || spacing > 1.0) {
    throw Error("coordinate search: spacing must lie in (0, 1]");
  }
  const double steps_d = 1.0 / spacing;
  const auto steps = static_cast<long>(std::llround(steps_d));
  if (std::abs(steps_d - static_cast<double>(steps)) > 1e-9) {
    throw Error("coordinate search: 1/spacing must be an integer");
  }
  const int m = val.data.num_classes;
  const int anchor = m - 1;

  CoordinateSearchResult out;
  out.weights = Eigen::VectorXd::Ones(m);
  out.best_zeta = Eigen::VectorXd::Zero(m);

  auto score = [&](const std::vector<int>& preds) {
    ++out.queries;
    return metric_value(metric, val.data, preds);
  };

  for (int j = 0; j < m - 1; ++j) {
    double best_value = -std::numeric_limits<double>::infinity();
    double best_zeta = 0.0;
    for (long s = 0; s <= steps; ++s) {
      const double zeta = static_cast<double>(s) * spacing;
      std::vector<int> preds(static_cast<size_t>(val.data.size()), anchor);
      for (Eigen::Index r = 0; r < val.data.size(); ++r) {
        if (zeta * val.eta(r, j) > (1.0 - zeta) * val.eta(r, anchor)) {
          preds[static_cast<size_t>(r)] = j;
        }
      }
      const double v = score(preds);
      if (v > best_value) {
        best_value = v;
        best_zeta = zeta;
      }
    }
    out.best_zeta(j) = best_zeta;
    if (best_zeta >= 1.0) {
      // zeta = 1 maps to an infinite weight; cap at the largest finite ratio
      // the grid can distinguish.
      out.weights(j) = steps_d;
      out.capped = true;
    } else {
      out.weights(j) = best_zeta / (1.0 - best_zeta);
    }
  }
  out.rule = WeightedArgmaxRule{out.weights};
  return out;
}

}  // namespace ewopt
