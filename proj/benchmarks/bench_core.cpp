#include <benchmark/benchmark.h>

#include "mixedbo/acquisition.hpp"
#include "mixedbo/reparam.hpp"
#include "mixedbo/rng.hpp"
#include "mixedbo/sobol.hpp"
#include "mixedbo/surrogate.hpp"

namespace {

using namespace mixedbo;

SearchSpace bench_space() {
  return SearchSpace(std::vector<ParameterDescriptor>{
      ParameterDescriptor::continuous(-1.0, 1.0),
      ParameterDescriptor::continuous(-1.0, 1.0),
      ParameterDescriptor::binary(),
      ParameterDescriptor::binary(),
      ParameterDescriptor::ordinal(5),
      ParameterDescriptor::categorical(4),
  });
}

GPModel bench_model(const SearchSpace& space, std::size_t n) {
  const auto points = sobol_init(space, n, 3);
  std::vector<double> ys;
  Rng rng = make_rng(5);
  for (const auto& p : points) {
    double s = 0.0;
    for (double v : p.values) s += v * v;
    ys.push_back(s + 0.01 * normal01(rng));
  }
  return fit_gp(space, points, ys, 1);
}

void BM_SobolDraw(benchmark::State& state) {
  SobolSequence seq(static_cast<std::size_t>(state.range(0)), 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(seq.next());
  }
}
BENCHMARK(BM_SobolDraw)->Arg(8)->Arg(32);

void BM_KernelMatrix(benchmark::State& state) {
  const SearchSpace space = bench_space();
  const auto points = sobol_init(space, static_cast<std::size_t>(state.range(0)), 9);
  const KernelConfig cfg = default_kernel_config(space, KernelStructure::kMixedSumProduct);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_kernel_matrix(cfg, space, points, points));
  }
}
BENCHMARK(BM_KernelMatrix)->Arg(32)->Arg(128);

void BM_PosteriorBatch(benchmark::State& state) {
  const SearchSpace space = bench_space();
  static const GPModel model = bench_model(space, 64);
  const auto queries = sobol_init(space, 32, 17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.posterior(queries, false));
  }
}
BENCHMARK(BM_PosteriorBatch);

void BM_McPoGrad(benchmark::State& state) {
  const SearchSpace space = bench_space();
  static const GPModel model = bench_model(space, 64);
  AcquisitionSpec spec;
  spec.kind = AcquisitionKind::kEi;
  spec.incumbent = 0.5;
  spec.objective_model = &model;
  const AcqOracle oracle = make_oracle(spec, space);

  std::vector<double> phi(theta_dim(space), 0.4);
  phi[2] = 2.3;  // ordinal slot
  const TransformResult tr = transform(space, RawParams{phi, 0.1});
  Rng rng = make_rng(23);
  const auto samples = sample(space, tr.theta, static_cast<std::size_t>(state.range(0)), rng);
  const std::vector<double> x = {0.2, -0.3};
  const BaselineState baseline;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_po_grad(oracle, space, x, tr.theta, samples, baseline));
  }
}
BENCHMARK(BM_McPoGrad)->Arg(32)->Arg(128);

void BM_Transform(benchmark::State& state) {
  const SearchSpace space = bench_space();
  std::vector<double> phi(theta_dim(space), 0.37);
  phi[2] = 3.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(transform(space, RawParams{phi, 0.1}));
  }
}
BENCHMARK(BM_Transform);

}  // namespace
