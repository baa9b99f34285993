// Serial reference vs OpenMP for the three hot kernels. Arg 0 = serial,
// 1 = parallel. Thread count follows OMP_NUM_THREADS / MATCHX_THREADS.

#include <benchmark/benchmark.h>

#include "matchx/datagen.hpp"
#include "matchx/explainer.hpp"
#include "matchx/gnn.hpp"
#include "matchx/matcher.hpp"
#include "matchx/parallel.hpp"

namespace {

using namespace matchx;

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

struct Fixture {
  std::vector<Graph> graphs;
  Model model;
  ReferenceSet refs;

  Fixture() : model(default_model(11, 2, 0)) {
    configure_threads();
    DatasetSpec spec = preset("ba2");
    spec.n_graphs = 300;
    graphs = gen_motif_dataset(spec);
    refs = ReferenceSet::build(model, graphs);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_PairwiseDistances(benchmark::State& state) {
  const Matrix a = Matrix::Random(400, 32);
  const Matrix b = Matrix::Random(400, 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairwise_distances(a, b, Metric::euclidean, exec_of(state)));
  }
}
BENCHMARK(BM_PairwiseDistances)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ExplainSweep(benchmark::State& state) {
  const auto& f = fixture();
  ExplainConfig cfg;
  cfg.budget = Budget::nodes(5);
  cfg.exec = exec_of(state);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain(f.model, f.graphs[i++ % 20], f.refs, cfg));
  }
}
BENCHMARK(BM_ExplainSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BatchGradient(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<const Graph*> batch;
  for (std::size_t i = 0; i < 64; ++i) batch.push_back(&f.graphs[i]);
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(f.model.num_params()));
  for (auto _ : state) {
    grad.setZero();
    benchmark::DoNotOptimize(batch_gradient(f.model, batch, grad, exec_of(state)));
  }
}
BENCHMARK(BM_BatchGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
