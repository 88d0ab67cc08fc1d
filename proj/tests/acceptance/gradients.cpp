#include "acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "ewopt/metrics.hpp"
#include "ewopt/rng.hpp"

namespace acceptance {
namespace {

Eigen::VectorXd random_priors(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Eigen::VectorXd p(m);
  for (int i = 0; i < m; ++i) p[i] = u(rng);
  return p / p.sum();
}

// Max relative error between the analytic gradient and central finite
// differences over 100 random interior points.
double max_rel_error(const ewopt::MetricSpec& spec, int m, std::uint64_t seed) {
  const double h = 1e-6;
  double worst = 0.0;
  for (int point = 0; point < 100; ++point) {
    auto rng = ewopt::substream(seed + point, "gradient-check");
    const Eigen::VectorXd priors = random_priors(rng, m);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    Eigen::VectorXd diag(m);
    for (int i = 0; i < m; ++i) diag[i] = u(rng) * priors[i];

    const Eigen::VectorXd grad = ewopt::grad_diag(spec, diag, priors);
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd up = diag, down = diag;
      up[i] += h;
      down[i] -= h;
      const double fd = (ewopt::eval_diag(spec, up, priors) -
                         ewopt::eval_diag(spec, down, priors)) /
                        (2 * h);
      const double rel =
          std::abs(fd - grad[i]) / std::max(std::abs(grad[i]), 1e-8);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace

CriterionResult criterion4_gradient_checks() {
  const double gmean_err = max_rel_error(ewopt::MetricSpec::gmean(), 3, 4100);
  const double fbin_err =
      max_rel_error(ewopt::MetricSpec::fmeasure_binary(), 2, 4200);
  const double fmac_err =
      max_rel_error(ewopt::MetricSpec::fmeasure_macro(), 2, 4300);

  const bool pass =
      gmean_err < 1e-5 && fbin_err < 1e-5 && fmac_err < 1e-5;
  std::ostringstream os;
  os.precision(3);
  os << "max relative error over 100 interior points each: gmean " << gmean_err
     << ", binary F " << fbin_err << ", macro F " << fmac_err << ", all < 1e-05";
  return {pass, os.str()};
}

}  // namespace acceptance
