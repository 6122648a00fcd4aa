#include <benchmark/benchmark.h>

#include "causal/ate.hpp"
#include "causal/dgp.hpp"
#include "causal/montecarlo.hpp"
#include "causal/nuisance.hpp"

namespace {

using namespace causal;

ObsSimulation dr_sample(std::size_t n) {
  ObsDgpConfig dgp = dr_dgp();
  dgp.n = n;
  return generate_observational(dgp, 1);
}

void BM_CrossFit(benchmark::State& state) {
  const auto sim = dr_sample(static_cast<std::size_t>(state.range(0)));
  const LearnerConfig learners = learners_for(Scenario::BothCorrect, {});
  for (auto _ : state) {
    benchmark::DoNotOptimize(cross_fit(sim.data, 5, learners, {}, 7));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CrossFit)->RangeMultiplier(4)->Range(500, 32000)->Complexity();

void BM_Aipw(benchmark::State& state) {
  const auto sim = dr_sample(static_cast<std::size_t>(state.range(0)));
  const auto fit = cross_fit(sim.data, 5, learners_for(Scenario::BothCorrect, {}), {}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(aipw(sim.data, fit));
}
BENCHMARK(BM_Aipw)->Arg(2000)->Arg(32000);

void BM_PsmAtt(benchmark::State& state) {
  const auto sim = dr_sample(static_cast<std::size_t>(state.range(0)));
  const auto fit = cross_fit(sim.data, 5, {}, {}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(psm_att(sim.data, fit.pi_hat, {}));
}
BENCHMARK(BM_PsmAtt)->Arg(2000)->Arg(8000);

void BM_McReplications(benchmark::State& state) {
  McConfig config;
  config.replications = 10;
  config.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_mc(config));
}
BENCHMARK(BM_McReplications)->Unit(benchmark::kMillisecond);

}  // namespace
