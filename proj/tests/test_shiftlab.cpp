#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ewopt/error.hpp"
#include "ewopt/metrics.hpp"
#include "ewopt/shiftlab.hpp"
#include "support/property.hpp"

using namespace ewopt;

namespace {

DiscreteSpec two_point_table() {
  DiscreteSpec spec;
  spec.points.resize(2, 1);
  spec.points << 0.0, 1.0;
  spec.joint.resize(2, 2);
  spec.joint << 0.3, 0.2, 0.1, 0.4;
  return spec;
}

GaussianSpec symmetric_pair() {
  GaussianSpec spec;
  spec.means.resize(2, 1);
  spec.means << 1.0, -1.0;
  spec.sigma = 1.0;
  spec.priors = Eigen::VectorXd::Constant(2, 0.5);
  return spec;
}

Eigen::MatrixXd identity2() { return Eigen::MatrixXd::Identity(2, 2); }

Eigen::MatrixXd swap2() {
  Eigen::MatrixXd T(2, 2);
  T << 0.0, 1.0, 1.0, 0.0;
  return T;
}

Eigen::MatrixXd symmetric_noise(double keep) {
  Eigen::MatrixXd T(2, 2);
  T << keep, 1.0 - keep, 1.0 - keep, keep;
  return T;
}

}  // namespace

TEST_CASE("discrete spec validates and derives marginal and conditional") {
  DiscreteSpec spec = two_point_table();
  spec.validate();

  const Eigen::VectorXd px = spec.marginal();
  CHECK(px(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(px(1) == doctest::Approx(0.5).epsilon(1e-12));

  const Eigen::MatrixXd cond = spec.conditional();
  CHECK(cond(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cond(0, 1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(cond(1, 0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(cond(1, 1) == doctest::Approx(0.8).epsilon(1e-12));

  DiscreteSpec empty;
  CHECK_THROWS_AS(empty.validate(), Error);

  DiscreteSpec narrow = spec;
  narrow.joint = Eigen::MatrixXd::Constant(2, 1, 0.5);
  CHECK_THROWS_WITH_AS(narrow.validate(),
                       doctest::Contains("m >= 2"), Error);

  DiscreteSpec negative = spec;
  negative.joint(0, 0) = -0.1;
  negative.joint(1, 1) = 0.8;
  CHECK_THROWS_WITH_AS(negative.validate(),
                       doctest::Contains("negative joint mass"), Error);

  DiscreteSpec off = spec;
  off.joint(0, 0) = 0.4;
  CHECK_THROWS_WITH_AS(off.validate(),
                       doctest::Contains("does not sum to 1"), Error);

  DiscreteSpec bad_clusters = spec;
  bad_clusters.point_cluster = {0};
  CHECK_THROWS_WITH_AS(bad_clusters.validate(),
                       doctest::Contains("point_cluster size mismatch"), Error);

  DiscreteSpec hollow = spec;
  hollow.joint << 0.5, 0.5, 0.0, 0.0;
  CHECK_THROWS_WITH_AS(hollow.conditional(), doctest::Contains("zero mass"),
                       Error);

  CHECK(spec.cluster_of(0) == 0);
  CHECK(spec.cluster_of(1) == 1);
  spec.point_cluster = {1, 1};
  CHECK(spec.cluster_of(0) == 1);
}

TEST_CASE("gaussian spec validates, assigns clusters, and computes P(y|x)") {
  GaussianSpec spec = symmetric_pair();
  spec.validate();

  GaussianSpec one_class = spec;
  one_class.means = Eigen::MatrixXd::Zero(1, 1);
  CHECK_THROWS_WITH_AS(one_class.validate(),
                       doctest::Contains("m >= 2"), Error);

  GaussianSpec bad_priors = spec;
  bad_priors.priors = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  CHECK_THROWS_WITH_AS(bad_priors.validate(),
                       doctest::Contains("priors length mismatch"), Error);

  GaussianSpec zero_prior = spec;
  zero_prior.priors << 1.0, 0.0;
  CHECK_THROWS_AS(zero_prior.validate(), Error);

  GaussianSpec flat = spec;
  flat.sigma = 0.0;
  CHECK_THROWS_WITH_AS(flat.validate(),
                       doctest::Contains("sigma must be positive"), Error);

  GaussianSpec bad_coord = spec;
  bad_coord.cluster_coord = 1;
  CHECK_THROWS_WITH_AS(bad_coord.validate(),
                       doctest::Contains("cluster coordinate"), Error);

  GaussianSpec unsorted = spec;
  unsorted.cluster_thresholds = {1.0, 0.0};
  CHECK_THROWS_WITH_AS(unsorted.validate(),
                       doctest::Contains("sorted"), Error);

  // Cluster id counts thresholds strictly below the coordinate.
  GaussianSpec banded = spec;
  banded.cluster_thresholds = {0.0, 1.0};
  Eigen::RowVectorXd x(1);
  x << -1.0;
  CHECK(banded.cluster_of(x) == 0);
  x << 0.0;
  CHECK(banded.cluster_of(x) == 0);
  x << 0.5;
  CHECK(banded.cluster_of(x) == 1);
  x << 2.0;
  CHECK(banded.cluster_of(x) == 2);

  // Balanced symmetric means give P(y=0|x) = logistic(2x).
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 1.0, -1.0;
  const Eigen::MatrixXd cond = spec.conditional(X);
  CHECK(cond(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cond(1, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(cond(2, 0) == doctest::Approx(1.0 / (1.0 + std::exp(2.0))).epsilon(1e-12));
  for (int r = 0; r < 3; ++r) {
    CHECK(cond.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }

  // At the midpoint both mixture components sit one sigma away.
  Eigen::RowVectorXd origin(1);
  origin << 0.0;
  CHECK(spec.density(origin) ==
        doctest::Approx(0.24197072451914337).epsilon(1e-12));
}

TEST_CASE("feature-dependent transition interpolates between its endpoints") {
  IdlnShift shift;
  shift.T_low = identity2();
  shift.T_high = swap2();
  shift.coord = 0;
  shift.scale = 1.0;
  shift.offset = 0.0;

  Eigen::RowVectorXd x(1);
  x << 0.0;
  const Eigen::MatrixXd mid = shift.at(x);
  CHECK(mid(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mid(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  shift.scale = 1000.0;
  x << -1.0;
  CHECK((shift.at(x) - identity2()).cwiseAbs().maxCoeff() < 1e-9);
  x << 1.0;
  CHECK((shift.at(x) - swap2()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("discrete sampling is deterministic and tracks the joint table") {
  const DiscreteSpec spec = two_point_table();
  const Eigen::MatrixXd cond = spec.conditional();

  std::mt19937_64 rng(101);
  const Draw draw = sample_clean(spec, 20000, rng);
  CHECK(draw.data.size() == 20000);
  CHECK(draw.data.num_classes == 2);
  CHECK(draw.data.label_map == std::vector<int>{1, 2});

  // Empirical cell frequencies stay close to the population joint.
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(2, 2);
  for (Eigen::Index r = 0; r < draw.data.size(); ++r) {
    const int p = draw.data.features(r, 0) > 0.5 ? 1 : 0;
    freq(p, draw.data.labels[static_cast<size_t>(r)]) += 1.0 / 20000.0;
    // Clusters default to the support point index.
    CHECK(draw.data.group_ids[static_cast<size_t>(r)] == p);
    CHECK((draw.conditional.probs.row(r) - cond.row(p)).cwiseAbs().maxCoeff() <
          1e-12);
  }
  CHECK((freq - spec.joint).cwiseAbs().sum() < 0.02);

  std::mt19937_64 again(101);
  const Draw replay = sample_clean(spec, 20000, again);
  CHECK((replay.data.features - draw.data.features).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(replay.data.labels == draw.data.labels);

  std::mt19937_64 other(7);
  CHECK_THROWS_WITH_AS(sample_clean(spec, 0, other),
                       doctest::Contains("need n >= 1"), Error);
}

TEST_CASE("gaussian sampling follows the priors and threshold clusters") {
  GaussianSpec spec = symmetric_pair();

  std::mt19937_64 rng(55);
  const Draw plain = sample_clean(spec, 4000, rng);
  CHECK(plain.data.group_ids.empty());

  double share0 = 0.0;
  double mean0 = 0.0;
  for (Eigen::Index r = 0; r < plain.data.size(); ++r) {
    if (plain.data.labels[static_cast<size_t>(r)] == 0) {
      share0 += 1.0;
      mean0 += plain.data.features(r, 0);
    }
  }
  mean0 /= share0;
  share0 /= static_cast<double>(plain.data.size());
  CHECK(std::abs(share0 - 0.5) < 0.05);
  CHECK(std::abs(mean0 - 1.0) < 0.1);

  spec.cluster_thresholds = {0.0};
  std::mt19937_64 rng2(55);
  const Draw banded = sample_clean(spec, 500, rng2);
  REQUIRE(banded.data.group_ids.size() == 500);
  for (Eigen::Index r = 0; r < banded.data.size(); ++r) {
    const int expect = banded.data.features(r, 0) > 0.0 ? 1 : 0;
    CHECK(banded.data.group_ids[static_cast<size_t>(r)] == expect);
  }
}

TEST_CASE("exact population enumerates counts in point-label order") {
  const DiscreteSpec spec = two_point_table();
  const Draw draw = exact_population(spec, 10);

  const std::vector<int> labels = {0, 0, 0, 1, 1, 0, 1, 1, 1, 1};
  CHECK(draw.data.labels == labels);
  for (Eigen::Index r = 0; r < 10; ++r) {
    CHECK(draw.data.features(r, 0) == (r < 5 ? 0.0 : 1.0));
    CHECK(draw.data.group_ids[static_cast<size_t>(r)] == (r < 5 ? 0 : 1));
  }
  const Eigen::VectorXd priors = draw.data.priors();
  CHECK(priors(0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(priors(1) == doctest::Approx(0.6).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(exact_population(spec, 7),
                       doctest::Contains("is not an integer count"), Error);
}

TEST_CASE("identity label noise keeps labels but advances the generator") {
  const DiscreteSpec spec = two_point_table();
  std::mt19937_64 seed_rng(3);
  const Draw clean = sample_clean(spec, 60, seed_rng);

  IlnShift identity;
  identity.T = identity2();
  std::mt19937_64 rng(9);
  const Draw same = corrupt(spec, clean, ShiftSpec(identity), rng);
  CHECK(same.data.labels == clean.data.labels);
  CHECK((same.data.features - clean.data.features).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((same.conditional.probs - clean.conditional.probs)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  // One uniform per example is always consumed.
  std::mt19937_64 untouched(9);
  CHECK(rng() != untouched());

  IlnShift noisy;
  noisy.T = symmetric_noise(0.7);
  std::mt19937_64 a(21), b(21);
  const Draw first = corrupt(spec, clean, ShiftSpec(noisy), a);
  const Draw second = corrupt(spec, clean, ShiftSpec(noisy), b);
  CHECK(first.data.labels == second.data.labels);

  // Noisy conditional is the clean conditional pushed through T.
  const Eigen::MatrixXd expected =
      clean.conditional.probs * noisy.T;
  CHECK((first.conditional.probs - expected).cwiseAbs().maxCoeff() < 1e-12);

  IlnShift bad;
  bad.T = Eigen::MatrixXd::Constant(2, 2, 0.6);
  std::mt19937_64 c(1);
  CHECK_THROWS_WITH_AS(corrupt(spec, clean, ShiftSpec(bad), c),
                       doctest::Contains("does not sum to 1"), Error);
}

TEST_CASE("cluster-conditional noise flips only the designated cluster") {
  DiscreteSpec spec = two_point_table();
  spec.point_cluster = {0, 1};
  std::mt19937_64 seed_rng(13);
  const Draw clean = sample_clean(spec, 80, seed_rng);

  CdlnShift shift;
  shift.T_per_cluster = {identity2(), swap2()};
  std::mt19937_64 rng(5);
  const Draw noisy = corrupt(spec, clean, ShiftSpec(shift), rng);
  for (Eigen::Index r = 0; r < clean.data.size(); ++r) {
    const int was = clean.data.labels[static_cast<size_t>(r)];
    const int now = noisy.data.labels[static_cast<size_t>(r)];
    if (clean.data.group_ids[static_cast<size_t>(r)] == 0) {
      CHECK(now == was);
    } else {
      CHECK(now == 1 - was);
    }
  }

  CdlnShift missing;
  missing.T_per_cluster = {identity2()};
  std::mt19937_64 rng2(5);
  CHECK_THROWS_WITH_AS(corrupt(spec, clean, ShiftSpec(missing), rng2),
                       doctest::Contains("has no transition matrix"), Error);

  CdlnShift empty;
  std::mt19937_64 rng3(5);
  CHECK_THROWS_WITH_AS(corrupt(spec, clean, ShiftSpec(empty), rng3),
                       doctest::Contains("no transition matrices"), Error);
}

TEST_CASE("domain shift redraws features and keeps the clean conditional") {
  const DiscreteSpec spec = two_point_table();
  const Eigen::MatrixXd cond = spec.conditional();
  std::mt19937_64 seed_rng(17);
  const Draw clean = sample_clean(spec, 5000, seed_rng);

  DsShift ds;
  ds.discrete_marginal = Eigen::VectorXd(2);
  ds.discrete_marginal << 0.9, 0.1;
  std::mt19937_64 rng(23);
  const Draw shifted = corrupt(spec, clean, ShiftSpec(ds), rng);

  double at0 = 0.0, label0_at0 = 0.0;
  for (Eigen::Index r = 0; r < shifted.data.size(); ++r) {
    const int p = shifted.data.features(r, 0) > 0.5 ? 1 : 0;
    CHECK(shifted.data.group_ids[static_cast<size_t>(r)] == p);
    CHECK((shifted.conditional.probs.row(r) - cond.row(p))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    if (p == 0) {
      at0 += 1.0;
      if (shifted.data.labels[static_cast<size_t>(r)] == 0) label0_at0 += 1.0;
    }
  }
  CHECK(std::abs(at0 / 5000.0 - 0.9) < 0.02);
  CHECK(std::abs(label0_at0 / at0 - 0.6) < 0.05);

  DsShift wrong;
  wrong.discrete_marginal = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  std::mt19937_64 rng2(23);
  CHECK_THROWS_WITH_AS(corrupt(spec, clean, ShiftSpec(wrong), rng2),
                       doctest::Contains("marginal length"), Error);

  DsShift lopsided;
  lopsided.discrete_marginal = Eigen::VectorXd(2);
  lopsided.discrete_marginal << 0.9, 0.3;
  std::mt19937_64 rng3(23);
  CHECK_THROWS_WITH_AS(corrupt(spec, clean, ShiftSpec(lopsided), rng3),
                       doctest::Contains("must be a distribution"), Error);

  // Gaussian generators need an explicit alternative mixture.
  const GaussianSpec gauss = symmetric_pair();
  std::mt19937_64 rng4(31);
  const Draw gclean = sample_clean(gauss, 200, rng4);
  DsShift no_marginal;
  no_marginal.discrete_marginal = Eigen::VectorXd(2);
  no_marginal.discrete_marginal << 0.5, 0.5;
  std::mt19937_64 rng5(31);
  CHECK_THROWS_WITH_AS(corrupt(gauss, gclean, ShiftSpec(no_marginal), rng5),
                       doctest::Contains("needs a gaussian marginal"), Error);

  GaussianSpec alt = symmetric_pair();
  alt.priors << 0.9, 0.1;
  DsShift gds;
  gds.gaussian_marginal = alt;
  std::mt19937_64 rng6(31);
  const Draw gshift = corrupt(gauss, gclean, ShiftSpec(gds), rng6);
  // Labels come from the clean conditional, so class balance stays near 1/2
  // only where the alt marginal visits; the conditional rows must match the
  // clean law at the redrawn features.
  const Eigen::MatrixXd expect = gauss.conditional(gshift.data.features);
  CHECK((gshift.conditional.probs - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("corrupted population tables are exact") {
  const DiscreteSpec spec = two_point_table();

  IlnShift iln;
  iln.T = symmetric_noise(0.8);
  const DiscreteSpec noisy = corrupt_population(spec, ShiftSpec(iln));
  CHECK(noisy.joint(0, 0) == doctest::Approx(0.28).epsilon(1e-12));
  CHECK(noisy.joint(0, 1) == doctest::Approx(0.22).epsilon(1e-12));
  CHECK(noisy.joint(1, 0) == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(noisy.joint(1, 1) == doctest::Approx(0.34).epsilon(1e-12));

  DsShift ds;
  ds.discrete_marginal = Eigen::VectorXd(2);
  ds.discrete_marginal << 0.7, 0.3;
  const DiscreteSpec moved = corrupt_population(spec, ShiftSpec(ds));
  CHECK(moved.joint(0, 0) == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(moved.joint(0, 1) == doctest::Approx(0.28).epsilon(1e-12));
  CHECK(moved.joint(1, 0) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(moved.joint(1, 1) == doctest::Approx(0.24).epsilon(1e-12));
}

TEST_CASE("ground-truth weights invert the corruption") {
  const DiscreteSpec spec = two_point_table();
  const Eigen::MatrixXd cost = identity2();

  IlnShift iln;
  iln.T = symmetric_noise(0.8);
  const Eigen::MatrixXd W = true_weights(ShiftSpec(iln), spec, cost, 0);
  CHECK(W(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(W(0, 1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(W(1, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(W(1, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  IlnShift degenerate;
  degenerate.T = Eigen::MatrixXd::Constant(2, 2, 0.5);
  CHECK_THROWS_WITH_AS(true_weights(ShiftSpec(degenerate), spec, cost, 0),
                       doctest::Contains("singular"), Error);

  DsShift ds;
  ds.discrete_marginal = Eigen::VectorXd(2);
  ds.discrete_marginal << 0.25, 0.75;
  Eigen::MatrixXd scaled_cost(2, 2);
  scaled_cost << 1.0, 0.0, 0.0, 2.0;
  const Eigen::MatrixXd Wds =
      true_weights(ShiftSpec(ds), spec, scaled_cost, 0);
  CHECK(Wds(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(Wds(1, 1) == doctest::Approx(4.0).epsilon(1e-12));

  DsShift starved;
  starved.discrete_marginal = Eigen::VectorXd(2);
  starved.discrete_marginal << 0.0, 1.0;
  CHECK_THROWS_WITH_AS(true_weights(ShiftSpec(starved), spec, cost, 0),
                       doctest::Contains("training marginal is zero"), Error);

  CHECK_THROWS_WITH_AS(true_weights(ShiftSpec(iln), spec, cost, 5),
                       doctest::Contains("point index out of range"), Error);

  // Gaussian overloads: identical alt marginal means ratio 1.
  const GaussianSpec gauss = symmetric_pair();
  Eigen::RowVectorXd x(1);
  x << 0.3;
  DsShift same;
  same.gaussian_marginal = gauss;
  const Eigen::MatrixXd Wsame =
      true_weights(ShiftSpec(same), gauss, scaled_cost, x);
  CHECK((Wsame - scaled_cost).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXd Wg = true_weights(ShiftSpec(iln), gauss, cost, x);
  CHECK(Wg(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("diagonal coefficient target is constant per cluster") {
  DiscreteSpec spec;
  spec.points.resize(4, 1);
  spec.points << 0.0, 1.0, 2.0, 3.0;
  spec.joint = Eigen::MatrixXd::Constant(4, 2, 0.125);
  spec.point_cluster = {0, 0, 1, 1};

  DsShift ds;
  ds.discrete_marginal = Eigen::VectorXd(4);
  ds.discrete_marginal << 0.125, 0.125, 0.375, 0.375;
  const Eigen::VectorXd alpha =
      true_alpha_diagonal(ShiftSpec(ds), spec, identity2());
  REQUIRE(alpha.size() == 4);
  CHECK(alpha(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(alpha(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(alpha(2) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(alpha(3) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  DsShift uneven;
  uneven.discrete_marginal = Eigen::VectorXd(4);
  uneven.discrete_marginal << 0.1, 0.15, 0.375, 0.375;
  CHECK_THROWS_WITH_AS(true_alpha_diagonal(ShiftSpec(uneven), spec, identity2()),
                       doctest::Contains("weights vary within cluster"), Error);

  CHECK_THROWS_WITH_AS(
      true_alpha_diagonal(ShiftSpec(ds), spec, Eigen::MatrixXd::Identity(3, 3)),
      doctest::Contains("cost must be m x m"), Error);
}

TEST_CASE("population oracle finds the best weighted rule on a finite domain") {
  DiscreteSpec spec;
  spec.points.resize(3, 1);
  spec.points << 0.0, 1.0, 2.0;
  spec.joint.resize(3, 2);
  spec.joint << 0.3, 1.0 / 30.0, 0.2, 2.0 / 15.0, 1.0 / 15.0, 4.0 / 15.0;

  const OracleReport report =
      bayes_oracle(SyntheticSpec(spec), MetricSpec::accuracy(2), 20);
  CHECK(report.value == doctest::Approx(23.0 / 30.0).epsilon(1e-12));
  CHECK(report.weight_grid == 20);
  CHECK(report.quad_grid == 0);
  CHECK(report.population_exact);
  // The winning rule predicts the larger conditional at every point, which
  // needs w1/w0 between 0.25 (point 2 flips below) and 1.5 (point 1 flips
  // above).
  const double ratio = report.weights(1) / report.weights(0);
  CHECK(ratio >= 0.25);
  CHECK(ratio <= 1.5);

  CHECK_THROWS_WITH_AS(bayes_oracle(SyntheticSpec(spec),
                                    MetricSpec::accuracy(2), 1),
                       doctest::Contains("weight_grid must be >= 2"), Error);

  OracleHandle handle;
  handle.fn = [](const Eigen::MatrixXd&) { return 0.5; };
  CHECK_THROWS_WITH_AS(bayes_oracle(SyntheticSpec(spec),
                                    MetricSpec::black_box(handle), 20),
                       doctest::Contains("black box"), Error);
}

TEST_CASE("population oracle integrates gaussian mixtures") {
  const GaussianSpec spec = symmetric_pair();
  const OracleReport report =
      bayes_oracle(SyntheticSpec(spec), MetricSpec::accuracy(2), 20, 200);
  // Bayes accuracy of balanced unit gaussians at +-1 is Phi(1).
  CHECK(std::abs(report.value - 0.8413447460685429) < 2e-3);
  CHECK_FALSE(report.population_exact);
  CHECK(report.quad_grid == 200);

  CHECK_THROWS_WITH_AS(bayes_oracle(SyntheticSpec(spec),
                                    MetricSpec::accuracy(2), 20, 4),
                       doctest::Contains("quad_grid must be >= 8"), Error);

  GaussianSpec wide = spec;
  wide.means = Eigen::MatrixXd::Zero(2, 3);
  wide.means(0, 0) = 1.0;
  wide.means(1, 0) = -1.0;
  CHECK_THROWS_WITH_AS(bayes_oracle(SyntheticSpec(wide),
                                    MetricSpec::accuracy(2), 20, 16),
                       doctest::Contains("d <= 2"), Error);
}

TEST_CASE("property: label-noise tables conserve mass and invert cleanly") {
  testsupport::for_each_case(4242, "shiftlab-noise", [](std::mt19937_64& rng,
                                                        int) {
    std::uniform_int_distribution<int> m_dist(2, 3);
    std::uniform_int_distribution<int> px_dist(2, 5);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    const int m = m_dist(rng);
    const Eigen::Index px = px_dist(rng);

    DiscreteSpec spec;
    spec.points.resize(px, 1);
    spec.joint.resize(px, m);
    for (Eigen::Index p = 0; p < px; ++p) {
      spec.points(p, 0) = static_cast<double>(p);
      for (int i = 0; i < m; ++i) spec.joint(p, i) = unif(rng);
    }
    spec.joint /= spec.joint.sum();

    // Diagonally dominant rows keep the transition invertible.
    Eigen::MatrixXd T(m, m);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) T(r, c) = unif(rng) * 0.2;
      T(r, r) += 1.0;
      T.row(r) /= T.row(r).sum();
    }
    IlnShift shift;
    shift.T = T;

    const DiscreteSpec noisy = corrupt_population(spec, ShiftSpec(shift));
    CHECK(noisy.joint.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((noisy.marginal() - spec.marginal()).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd cost(m, m);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) cost(r, c) = unif(rng);
    }
    const Eigen::MatrixXd W = true_weights(ShiftSpec(shift), spec, cost, 0);
    CHECK((T * W - cost).cwiseAbs().maxCoeff() < 1e-8);
  });
}
