#include <benchmark/benchmark.h>

#include "causal/eif.hpp"
#include "causal/rng.hpp"

namespace {

using namespace causal;
using namespace causal::eif;

/// Binary x and a with `levels` outcome values per cell.
DiscreteMeasure measure(std::size_t levels) {
  Rng rng(3);
  std::vector<Point> points;
  std::vector<double> probs;
  for (int x = 0; x < 2; ++x) {
    for (int a = 0; a < 2; ++a) {
      for (std::size_t l = 0; l < levels; ++l) {
        points.push_back({double(x), double(a), x + a + static_cast<double>(l)});
        probs.push_back(0.1 + rng.uniform());
      }
    }
  }
  double total = 0.0;
  for (double p : probs) total += p;
  for (double& p : probs) p /= total;
  return DiscreteMeasure({"x", "a", "y"}, std::move(points), std::move(probs));
}

void BM_GateauxAte(benchmark::State& state) {
  const auto p = measure(static_cast<std::size_t>(state.range(0)));
  const auto f = Functional::ate();
  for (auto _ : state) benchmark::DoNotOptimize(gateaux_if_all(f, p));
  state.SetComplexityN(static_cast<std::int64_t>(p.size()));
}
BENCHMARK(BM_GateauxAte)->RangeMultiplier(2)->Range(2, 64)->Complexity();

void BM_SecondOrderRemainder(benchmark::State& state) {
  const auto p = measure(static_cast<std::size_t>(state.range(0)));
  std::vector<double> q(p.probs().rbegin(), p.probs().rend());
  const DiscreteMeasure est(p.coords(), p.points(), q);
  for (auto _ : state) benchmark::DoNotOptimize(second_order_remainder(p, est));
}
BENCHMARK(BM_SecondOrderRemainder)->Arg(2)->Arg(64);

}  // namespace
