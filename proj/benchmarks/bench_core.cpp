// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "reprforge/encoder.hpp"
#include "reprforge/losses.hpp"
#include "reprforge/rng.hpp"
#include "reprforge/tensor.hpp"

using namespace reprforge;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.uniform(-1, 1);
  return out;
}

void BM_Matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Tensor a = Tensor::from_data({n, n}, random_values(static_cast<std::size_t>(n) * n, 1));
  Tensor b = Tensor::from_data({n, n}, random_values(static_cast<std::size_t>(n) * n, 2));
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_Conv2dForward(benchmark::State& state) {
  Tensor x = Tensor::from_data({8, 1, 16, 16}, random_values(8 * 256, 3));
  Tensor k = Tensor::from_data({8, 1, 3, 3}, random_values(72, 4));
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k, 1, 1));
}
BENCHMARK(BM_Conv2dForward);

void BM_EncoderBackward(benchmark::State& state) {
  EncoderConfig cfg;
  cfg.kind = EncoderKind::kCnn;
  cfg.in_channels = 1;
  cfg.in_height = 16;
  cfg.in_width = 16;
  cfg.hidden = {8, 16};
  cfg.embed_dim = 32;
  Rng rng(5);
  ModelParams params = init_params(cfg, 10, true, rng);
  Tensor x = Tensor::from_data({16, 1, 16, 16}, random_values(16 * 256, 6));
  std::vector<int> labels(16);
  for (int i = 0; i < 16; ++i) labels[static_cast<std::size_t>(i)] = i % 10;
  for (auto _ : state) {
    Tensor loss = cross_entropy(classify(params, encode(cfg, params, x)), labels, 0.0);
    backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_EncoderBackward);

void BM_ArcFace(benchmark::State& state) {
  Rng rng(7);
  std::vector<double> cos_data(64 * 10);
  for (auto& v : cos_data) v = rng.uniform(-0.99, 0.99);
  Tensor cosines = Tensor::from_data({64, 10}, cos_data);
  std::vector<int> y(64);
  for (int i = 0; i < 64; ++i) y[static_cast<std::size_t>(i)] = i % 10;
  for (auto _ : state) benchmark::DoNotOptimize(arcface(cosines, y, 16.0, 0.3).item());
}
BENCHMARK(BM_ArcFace);

void BM_TripletBatchHard(benchmark::State& state) {
  Rng rng(8);
  std::vector<double> z(64 * 32);
  for (auto& v : z) v = rng.uniform(-1, 1);
  Tensor emb = Tensor::from_data({64, 32}, z);
  std::vector<int> ids(64);
  for (int i = 0; i < 64; ++i) ids[static_cast<std::size_t>(i)] = i / 4;
  for (auto _ : state) benchmark::DoNotOptimize(triplet_batch_hard(emb, ids, 0.3).item());
}
BENCHMARK(BM_TripletBatchHard);

} // namespace

BENCHMARK_MAIN();
