#pragma once

#include <doctest.h>

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "ewopt/classifier.hpp"
#include "ewopt/dataset.hpp"
#include "ewopt/rng.hpp"

namespace testsupport {

// Every property below runs this many independently seeded instances.
inline constexpr int kCases = 200;

// Runs body(rng, case_index) over `cases` instances; each case gets its own
// generator so a failure reproduces from (seed, tag, case) alone.
template <typename Body>
void for_each_case(std::uint64_t seed, const char* tag, Body&& body,
                   int cases = kCases) {
  for (int c = 0; c < cases; ++c) {
    INFO("case " << c << " of tag " << tag);
    std::mt19937_64 rng =
        ewopt::substream(seed + static_cast<std::uint64_t>(c), tag);
    body(rng, c);
  }
}

inline ewopt::Dataset random_dataset(std::mt19937_64& rng, int n, int m,
                                     int d, int groups = 0) {
  ewopt::Dataset data;
  data.features.resize(n, d);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) data.features(i, j) = gauss(rng);
  std::uniform_int_distribution<int> lab(0, m - 1);
  data.labels.resize(n);
  // Every class appears at least once so priors never vanish.
  for (int i = 0; i < n; ++i) data.labels[i] = i < m ? i : lab(rng);
  data.num_classes = m;
  data.label_map.resize(m);
  for (int k = 0; k < m; ++k) data.label_map[k] = k + 1;
  if (groups > 0) {
    std::uniform_int_distribution<int> grp(0, groups - 1);
    data.group_ids.resize(n);
    for (int i = 0; i < n; ++i)
      data.group_ids[i] = i < groups ? i : grp(rng);
  }
  return data;
}

// Rows drawn from a Dirichlet(1,...,1) via normalized exponentials.
inline Eigen::MatrixXd random_simplex_rows(std::mt19937_64& rng, int n,
                                           int m) {
  Eigen::MatrixXd dist(n, m);
  std::exponential_distribution<double> ex(1.0);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      dist(i, j) = ex(rng) + 1e-12;
      sum += dist(i, j);
    }
    dist.row(i) /= sum;
  }
  return dist;
}

// Sample with hard-cluster indicator basis values and a random model.
inline ewopt::Sample random_sample(std::mt19937_64& rng, int n, int m, int d,
                                   int groups) {
  ewopt::Dataset data = random_dataset(rng, n, m, d, groups);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, groups);
  for (int i = 0; i < n; ++i) phi(i, data.group_ids[i]) = 1.0;
  Eigen::MatrixXd eta = random_simplex_rows(rng, n, m);
  return ewopt::make_sample(std::move(data), std::move(phi), std::move(eta));
}

inline std::vector<int> random_preds(std::mt19937_64& rng, int n, int m) {
  std::uniform_int_distribution<int> cls(0, m - 1);
  std::vector<int> preds(n);
  for (int i = 0; i < n; ++i) preds[i] = cls(rng);
  return preds;
}

}  // namespace testsupport
