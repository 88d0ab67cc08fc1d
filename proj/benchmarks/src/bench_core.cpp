#include <benchmark/benchmark.h>

#include "ewopt/classifier.hpp"
#include "ewopt/confusion.hpp"
#include "ewopt/elicit.hpp"
#include "ewopt/rng.hpp"
#include "ewopt/shiftlab.hpp"

namespace {

using namespace ewopt;

GaussianSpec bench_spec() {
  GaussianSpec spec;
  spec.means.resize(3, 2);
  spec.means << 2.2, 0.0, -1.1, 1.906, -1.1, -1.906;
  spec.sigma = 1.0;
  spec.priors = Eigen::Vector3d(0.5, 0.3, 0.2);
  spec.cluster_thresholds = {0.0};
  return spec;
}

Sample bench_sample(Eigen::Index n, std::uint64_t seed) {
  auto rng = substream(seed, "bench");
  Draw d = sample_clean(bench_spec(), n, rng);
  const int groups = 2;
  Eigen::MatrixXd phi(n, groups);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int g = 0; g < groups; ++g) {
      phi(r, g) = d.data.group_ids[static_cast<size_t>(r)] == g ? 1.0 : 0.0;
    }
  }
  return make_sample(std::move(d.data), std::move(phi),
                     std::move(d.conditional.probs));
}

void BM_confusion(benchmark::State& state) {
  const Sample s = bench_sample(state.range(0), 11);
  const Eigen::MatrixXd dist = one_hot(materialize(ArgmaxRule{}, s), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(confusion(s.data, dist));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_confusion)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_fixed_probes(benchmark::State& state) {
  const Sample tr = bench_sample(state.range(0), 12);
  const Sample va = bench_sample(state.range(0) / 10, 13);
  const Materialized base = uniform_base(tr, va);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_fixed_probes(tr, va, base, 0.4));
  }
}
BENCHMARK(BM_fixed_probes)->Arg(1000)->Arg(10000);

void BM_sigma_assembly(benchmark::State& state) {
  const Sample tr = bench_sample(state.range(0), 14);
  const Sample va = bench_sample(state.range(0) / 10, 15);
  const Materialized base = uniform_base(tr, va);
  const ProbingSet probes = build_fixed_probes(tr, va, base, 0.4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        assemble_sigma(probes, tr, WeightMode::kDiagonal));
  }
}
BENCHMARK(BM_sigma_assembly)->Arg(1000)->Arg(10000);

void BM_solve_alpha(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  auto rng = substream(16, "solve");
  std::normal_distribution<double> g;
  Eigen::MatrixXd sigma(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) sigma(r, c) = g(rng) + (r == c ? 3.0 : 0.0);
  Eigen::VectorXd rhs(k);
  for (int r = 0; r < k; ++r) rhs(r) = g(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_alpha(sigma, rhs));
  }
}
BENCHMARK(BM_solve_alpha)->Arg(6)->Arg(12)->Arg(48);

}  // namespace

BENCHMARK_MAIN();
