#include <benchmark/benchmark.h>

#include <cmath>

#include "dermo/classify.hpp"
#include "dermo/features.hpp"
#include "dermo/metrics.hpp"
#include "dermo/random.hpp"
#include "dermo/sparse.hpp"

using namespace dermo;

namespace {

ImageTensor random_image(Rng& rng, int w, int h) {
  ImageTensor img(w, h, ColorSpace::RGB);
  for (auto& v : img.values()) v = rng.uniform();
  return img;
}

std::vector<std::vector<double>> random_rows(Rng& rng, int n, int dims) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(dims)));
  for (auto& r : rows)
    for (auto& v : r) v = rng.uniform();
  return rows;
}

}  // namespace

static void BM_ColorHistogram(benchmark::State& state) {
  Rng rng(1);
  const auto img = random_image(rng, int(state.range(0)), int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(features::color_histogram_166(img));
}
BENCHMARK(BM_ColorHistogram)->Arg(64)->Arg(256);

static void BM_Mslbp(benchmark::State& state) {
  Rng rng(2);
  const auto img = random_image(rng, int(state.range(0)), int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(features::mslbp_236(img));
}
BENCHMARK(BM_Mslbp)->Arg(64)->Arg(256);

static void BM_LassoEncode(benchmark::State& state) {
  Rng rng(3);
  const int dim = 192, k = int(state.range(0));
  std::vector<double> atoms(std::size_t(dim) * std::size_t(k));
  for (int j = 0; j < k; ++j) {
    double sq = 0;
    for (int i = 0; i < dim; ++i) {
      double& v = atoms[std::size_t(j) * dim + std::size_t(i)];
      v = rng.uniform(-1.0, 1.0);
      sq += v * v;
    }
    for (int i = 0; i < dim; ++i) atoms[std::size_t(j) * dim + std::size_t(i)] /= std::sqrt(sq);
  }
  const sparse::Dictionary dict(dim, k, ColorSpace::RGB, 8, atoms);
  const sparse::LassoSolver solver(dict);
  std::vector<double> x(dim);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  sparse::LassoOptions opts;
  opts.lambda = 0.15;
  for (auto _ : state) benchmark::DoNotOptimize(solver.encode(x, opts));
}
BENCHMARK(BM_LassoEncode)->Arg(64)->Arg(256);

static void BM_SvmTrain(benchmark::State& state) {
  Rng rng(4);
  const int n = int(state.range(0));
  const auto rows = random_rows(rng, n, 166);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) y[std::size_t(i)] = i % 2 ? 1 : -1;
  for (auto _ : state) benchmark::DoNotOptimize(classify::train_svm(rows, y));
}
BENCHMARK(BM_SvmTrain)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_AveragePrecision(benchmark::State& state) {
  Rng rng(5);
  const auto n = std::size_t(state.range(0));
  std::vector<double> s(n);
  std::vector<int> l(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = rng.uniform();
    l[i] = int(i % 3 == 0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::average_precision(s, l));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
