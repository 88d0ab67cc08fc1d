#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <vector>

#include "ewopt/baselines.hpp"
#include "ewopt/error.hpp"
#include "support/property.hpp"

using namespace ewopt;

namespace {

// Binary sample with eta in blocks of five; labels chosen so the best
// threshold on eta_0 is interior.
Sample blocked_binary() {
  const std::vector<double> eta0 = {0.8, 0.55, 0.3, 0.1};
  const std::vector<int> zeros_per_block = {4, 3, 1, 0};
  Dataset data;
  data.features.resize(20, 1);
  data.labels.resize(20);
  data.num_classes = 2;
  data.label_map = {1, 2};
  Eigen::MatrixXd eta(20, 2);
  int r = 0;
  for (int b = 0; b < 4; ++b) {
    for (int k = 0; k < 5; ++k, ++r) {
      data.features(r, 0) = eta0[static_cast<size_t>(b)];
      data.labels[static_cast<size_t>(r)] =
          k < zeros_per_block[static_cast<size_t>(b)] ? 0 : 1;
      eta(r, 0) = eta0[static_cast<size_t>(b)];
      eta(r, 1) = 1.0 - eta0[static_cast<size_t>(b)];
    }
  }
  return make_sample(std::move(data), Eigen::MatrixXd::Ones(20, 1),
                     std::move(eta));
}

// Best accuracy over every threshold rule "predict 0 iff eta_0 > t".
double exhaustive_threshold_best(const Sample& s, const MetricSpec& metric) {
  std::vector<double> cuts = {-1.0};
  for (Eigen::Index r = 0; r < s.data.size(); ++r) cuts.push_back(s.eta(r, 0));
  double best = -1.0;
  for (double t : cuts) {
    std::vector<int> preds(static_cast<size_t>(s.data.size()), 1);
    for (Eigen::Index r = 0; r < s.data.size(); ++r) {
      if (s.eta(r, 0) > t) preds[static_cast<size_t>(r)] = 0;
    }
    best = std::max(best, metric_value(metric, s.data, preds));
  }
  return best;
}

}  // namespace

TEST_CASE("argmax baseline predicts the largest class probability") {
  std::mt19937_64 rng(77);
  Dataset data = testsupport::random_dataset(rng, 30, 3, 2);
  Eigen::MatrixXd eta = testsupport::random_simplex_rows(rng, 30, 3);
  const Sample s = make_sample(std::move(data), {}, std::move(eta));

  const std::vector<int> preds = materialize(argmax_baseline(), s);
  for (Eigen::Index r = 0; r < s.data.size(); ++r) {
    Eigen::Index arg = 0;
    s.eta.row(r).maxCoeff(&arg);
    CHECK(preds[static_cast<size_t>(r)] == static_cast<int>(arg));
  }
}

TEST_CASE("coordinate search spends exactly its query budget") {
  std::mt19937_64 rng(78);
  Dataset data = testsupport::random_dataset(rng, 40, 3, 1);
  Eigen::MatrixXd eta = testsupport::random_simplex_rows(rng, 40, 3);
  const Sample s = make_sample(std::move(data), {}, std::move(eta));

  const auto res =
      coordinate_search_plugin(MetricSpec::accuracy(3), s, 0.25);
  CHECK(res.queries == static_cast<size_t>((3 - 1) * (4 + 1)));
  REQUIRE(res.weights.size() == 3);
  CHECK(res.weights(2) == 1.0);

  const auto fine = coordinate_search_plugin(MetricSpec::accuracy(3), s, 0.1);
  CHECK(fine.queries == static_cast<size_t>((3 - 1) * (10 + 1)));
}

TEST_CASE("coordinate search rejects unusable spacings") {
  std::mt19937_64 rng(79);
  Dataset data = testsupport::random_dataset(rng, 10, 2, 1);
  Eigen::MatrixXd eta = testsupport::random_simplex_rows(rng, 10, 2);
  const Sample s = make_sample(std::move(data), {}, std::move(eta));

  CHECK_THROWS_WITH_AS(coordinate_search_plugin(MetricSpec::accuracy(2), s, 0.0),
                       doctest::Contains("(0, 1]"), Error);
  CHECK_THROWS_WITH_AS(coordinate_search_plugin(MetricSpec::accuracy(2), s, 1.5),
                       doctest::Contains("(0, 1]"), Error);
  CHECK_THROWS_WITH_AS(coordinate_search_plugin(MetricSpec::accuracy(2), s, 0.3),
                       doctest::Contains("must be an integer"), Error);
}

TEST_CASE("coordinate search matches the exhaustive threshold optimum") {
  const Sample s = blocked_binary();
  const MetricSpec metric = MetricSpec::accuracy(2);

  const auto res = coordinate_search_plugin(metric, s, 0.01);
  CHECK(res.queries == 101);
  CHECK_FALSE(res.capped);

  // The search grid separates every pair of distinct eta values here, so the
  // grid optimum equals the unconstrained threshold optimum exactly.
  const double exact = exhaustive_threshold_best(s, metric);
  CHECK(exact == doctest::Approx(0.8).epsilon(1e-12));
  const double achieved =
      metric_value(metric, s.data, materialize(res.rule, s));
  CHECK(achieved == doctest::Approx(exact).epsilon(1e-12));

  // First zeta whose threshold 1 - zeta reaches the 0.55 block; the weighted
  // scores tie there and the argmax resolves ties toward the smaller index.
  CHECK(res.best_zeta(0) == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(res.weights(0) == doctest::Approx(0.45 / 0.55).epsilon(1e-12));
}

TEST_CASE("coordinate search caps the weight when zeta reaches one") {
  Dataset data;
  data.features.resize(10, 1);
  data.labels.assign(10, 0);
  data.num_classes = 2;
  data.label_map = {1, 2};
  Eigen::MatrixXd eta(10, 2);
  for (int r = 0; r < 10; ++r) {
    const double e = r < 5 ? 0.005 : 0.5;
    data.features(r, 0) = e;
    eta(r, 0) = e;
    eta(r, 1) = 1.0 - e;
  }
  const Sample s = make_sample(std::move(data), {}, std::move(eta));

  // Only zeta = 1 classifies the low-confidence block as class 0, and every
  // example is labeled 0, so the boundary wins and the weight is capped.
  const auto res = coordinate_search_plugin(MetricSpec::accuracy(2), s, 0.1);
  CHECK(res.capped);
  CHECK(res.best_zeta(0) == 1.0);
  CHECK(res.weights(0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(res.queries == 11);
  // The capped finite weight cannot reproduce the infinite-weight rule on
  // the low-confidence block: 10 * 0.005 still loses to 0.995.
  const std::vector<int> preds = materialize(res.rule, s);
  for (int r = 0; r < 10; ++r) {
    CHECK(preds[static_cast<size_t>(r)] == (r < 5 ? 1 : 0));
  }
}

TEST_CASE("property: tuned rule is the weighted argmax of its weights") {
  testsupport::for_each_case(909, "baseline-rule", [](std::mt19937_64& rng,
                                                      int) {
    std::uniform_int_distribution<int> m_dist(2, 4);
    const int m = m_dist(rng);
    Dataset data = testsupport::random_dataset(rng, 25, m, 1);
    Eigen::MatrixXd eta = testsupport::random_simplex_rows(rng, 25, m);
    const Sample s = make_sample(std::move(data), {}, std::move(eta));

    const auto res =
        coordinate_search_plugin(MetricSpec::accuracy(m), s, 0.2);
    CHECK(res.queries == static_cast<size_t>((m - 1) * 6));
    const std::vector<int> preds = materialize(res.rule, s);
    for (Eigen::Index r = 0; r < s.data.size(); ++r) {
      Eigen::Index arg = 0;
      (s.eta.row(r).transpose().cwiseProduct(res.weights)).maxCoeff(&arg);
      CHECK(preds[static_cast<size_t>(r)] == static_cast<int>(arg));
    }
  });
}
