#include <benchmark/benchmark.h>

#include "daal/aggregation.hpp"
#include "daal/harness.hpp"
#include "daal/metrics.hpp"
#include "daal/optim.hpp"
#include "daal/survival.hpp"

namespace {

daal::FeatureBag random_bag(std::size_t k, std::size_t f, daal::Rng& rng) {
  daal::FeatureBag bag;
  bag.features = daal::Mat(k, f);
  for (double& v : bag.features.values()) v = rng.normal();
  bag.anchor_pos = {0, k / 2, k - 1};
  return bag;
}

void BM_DaalForward(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  daal::Rng rng(1);
  const auto bag = random_bag(k, 384, rng);
  const auto p = daal::DaalParams::glorot(384, 64, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(daal::daal_forward(bag, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DaalForward)->Arg(8)->Arg(32)->Arg(96)->Complexity();

void BM_DaalBackward(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  daal::Rng rng(2);
  const auto bag = random_bag(k, 384, rng);
  const auto p = daal::DaalParams::glorot(384, 64, 64, rng);
  std::array<daal::Vec, 3> up{daal::Vec(64, 0.1), daal::Vec(64, -0.2), daal::Vec(64, 0.3)};
  for (auto _ : state) benchmark::DoNotOptimize(daal::daal_backward(bag, p, up));
}
BENCHMARK(BM_DaalBackward)->Arg(8)->Arg(96);

std::pair<daal::Vec, std::vector<daal::SurvivalLabel>> cohort(std::size_t n) {
  daal::Rng rng(3);
  daal::Vec r;
  std::vector<daal::SurvivalLabel> labels;
  for (std::size_t i = 0; i < n; ++i) {
    r.push_back(rng.normal());
    labels.push_back({1.0 + static_cast<double>(rng.below(200)), rng.uniform() < 0.7});
  }
  return {r, labels};
}

void BM_CoxLossAndGrad(benchmark::State& state) {
  const auto [r, labels] = cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(daal::cox_loss(r, labels));
    benchmark::DoNotOptimize(daal::cox_grad(r, labels));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CoxLossAndGrad)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_CIndex(benchmark::State& state) {
  const auto [r, labels] = cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(daal::c_index(r, labels));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CIndex)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_TrainEpoch(benchmark::State& state) {
  const auto kind = static_cast<daal::MethodKind>(state.range(0));
  daal::SynthConfig cfg;
  cfg.seed = 4;
  const auto s = daal::synth_generate(cfg);
  daal::ModelDims dims;
  dims.feature_dim = cfg.feature_dim;
  const daal::TrainConfig tc{1, 1e-3, 0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(daal::train(kind, dims, s.cohort.bags, s.cohort.labels, tc));
  }
  state.SetLabel(std::string(daal::method_name(kind)));
}
BENCHMARK(BM_TrainEpoch)->DenseRange(0, 6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
