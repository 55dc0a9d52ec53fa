#include <vector>

#include <benchmark/benchmark.h>

#include "trust_motion/trust_motion.hpp"

namespace tmo = trust_motion;
using tmo::Matrix;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  tmo::SplitMix64 rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

void BM_Procrustes(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const Matrix a = gaussian(4 * d, d, 1);
  const Matrix b = gaussian(4 * d, d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(tmo::procrustes(a, b));
}
BENCHMARK(BM_Procrustes)->Arg(16)->Arg(64)->Arg(120)->Unit(benchmark::kMicrosecond);

void BM_TrainSlice(benchmark::State& state) {
  tmo::SynthSpec spec;
  spec.n_events = static_cast<std::size_t>(state.range(0));
  spec.slices = 1;
  spec.planted.enabled = false;
  const auto stream = tmo::generate_event_stream(spec);
  tmo::TimeSlice slice;
  slice.index = 1;
  for (const auto& e : stream.events) {
    tmo::LabeledActivity a;
    a.record_id = e.record_id;
    a.sender_id = e.sender_id;
    a.subsystem = e.subsystem;
    a.sent_time = e.sent_time;
    a.label = e.label;
    slice.events.push_back(a);
  }
  tmo::SgnsConfig config;
  config.subsample = 0.0;
  config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(tmo::train_slice(slice, config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(slice.events.size()));
}
BENCHMARK(BM_TrainSlice)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  const Matrix points = gaussian(state.range(0), 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(tmo::kmeans(points, 5, 7, 10));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Tsne(benchmark::State& state) {
  const Matrix x = gaussian(state.range(0), 120, 4);
  tmo::TsneConfig config;
  config.perplexity = 10;
  config.iterations = 250;
  for (auto _ : state) benchmark::DoNotOptimize(tmo::project_tsne(x, config));
}
BENCHMARK(BM_Tsne)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_FitFactorModel(benchmark::State& state) {
  const auto data = tmo::generate_factor_data(tmo::default_loadings(), static_cast<std::size_t>(state.range(0)), 1.0, 5);
  std::vector<std::string> names;
  for (int j = 0; j < 14; ++j) names.push_back("x" + std::to_string(j));
  tmo::PafOptions paf;
  paf.max_iterations = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(tmo::fit_factor_model(data.characteristics, 5, names, {}, paf));
}
BENCHMARK(BM_FitFactorModel)->Arg(5000)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
