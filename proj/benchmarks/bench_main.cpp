// Microbenchmarks for the numeric hot paths: dense/log-domain transport,
// the training forward+backward pass, rollout inference, and upsampling.

#include <benchmark/benchmark.h>

#include <vector>

#include "stground/infer.hpp"
#include "stground/model.hpp"
#include "stground/sinkhorn.hpp"
#include "stground/synth.hpp"

using namespace stground;
using num::Matrix;
using num::Rng;

namespace {

Matrix random_p(std::size_t k, std::size_t u, std::uint64_t seed) {
  Rng rng(seed);
  Matrix p(k, u);
  for (auto& v : p.data()) v = rng.uniform(-1.0, 1.0);
  return p;
}

data::SynthDataset make_dataset(int clips, int videos) {
  data::SynthConfig cfg;
  cfg.classes = 4;
  cfg.train_clips = clips;
  cfg.videos = videos;
  cfg.seed = 1;
  return data::synth_generate(cfg);
}

void bench_matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Matrix a(n, n), b(n, n);
  for (auto& v : a.data()) v = rng.normal();
  for (auto& v : b.data()) v = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(num::matmul(a, b));
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

void bench_sinkhorn_dense(benchmark::State& state) {
  const ot::SimilarityMatrix sim{random_p(8, 16, 2)};
  const ot::SinkhornConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ot::sinkhorn(sim, cfg));
  }
}

void bench_sinkhorn_log(benchmark::State& state) {
  const ot::SimilarityMatrix sim{random_p(8, 16, 3)};
  ot::SinkhornConfig cfg;
  cfg.log_domain = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ot::sinkhorn(sim, cfg));
  }
}

void bench_select_sinkhorn(benchmark::State& state) {
  const auto ds = make_dataset(8, 0);
  Rng rng(4);
  const auto params = net::ModelParams::random_init(32, 32, rng);
  const ot::SinkhornConfig cfg;
  for (auto _ : state) {
    for (const auto& clip : ds.clips) {
      benchmark::DoNotOptimize(
          ot::select_frames(clip, ot::SelectionStrategy::Sinkhorn, 8, params, cfg));
    }
  }
  state.SetItemsProcessed(state.iterations() * ds.clips.size());
}

void bench_loss_and_grads(benchmark::State& state) {
  const int batch_size = static_cast<int>(state.range(0));
  const auto ds = make_dataset(batch_size, 0);
  Rng rng(5);
  const auto params = net::ModelParams::random_init(32, 32, rng);
  net::TrainConfig tcfg;
  tcfg.batch_size = batch_size;
  std::vector<net::BatchItem> batch;
  for (int i = 0; i < batch_size; ++i) batch.push_back({&ds.clips[i], {2, 5, 9, 12}});
  const net::AttentionConfig acfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(net::total_loss_and_grads(batch, params, tcfg, acfg));
  }
}

void bench_st_ground(benchmark::State& state) {
  const auto ds = make_dataset(0, 1);
  Rng rng(6);
  const auto params = net::ModelParams::random_init(32, 32, rng);
  const net::AttentionConfig acfg;
  const infer::InferConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        infer::st_ground(ds.videos[0], ds.bank, params, acfg, cfg, 320, 240));
  }
  state.SetItemsProcessed(state.iterations() * ds.videos[0].frames);
}

void bench_upsample(benchmark::State& state) {
  Rng rng(7);
  std::vector<double> cells(16);
  for (auto& v : cells) v = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(infer::upsample_bilinear(cells, 4, 320, 240));
  }
}

void bench_synth(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_dataset(16, 2));
  }
}

}  // namespace

BENCHMARK(bench_matmul)->Arg(32)->Arg(128);
BENCHMARK(bench_sinkhorn_dense);
BENCHMARK(bench_sinkhorn_log);
BENCHMARK(bench_select_sinkhorn);
BENCHMARK(bench_loss_and_grads)->Arg(2)->Arg(8);
BENCHMARK(bench_st_ground);
BENCHMARK(bench_upsample);
BENCHMARK(bench_synth);

BENCHMARK_MAIN();
