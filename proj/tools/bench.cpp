// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>

#include "lfdepth/align.hpp"
#include "lfdepth/net/kernels.hpp"
#include "lfdepth/stereo/census.hpp"
#include "lfdepth/stereo/sgm.hpp"

using namespace lfd;

namespace {

GrayImage noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  GrayImage img(w, h, 1);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

const CostVolume& volume() {
  static const CostVolume cv = [] {
    const auto l = noise_image(320, 240, 1), r = noise_image(320, 240, 2);
    return census_cost_volume(census_transform(l), census_transform(r), 320, 240, DisparityRange{0, 63});
  }();
  return cv;
}

void BM_census_serial(benchmark::State& s) {
  const auto img = noise_image(320, 240, 3);
  for (auto _ : s) benchmark::DoNotOptimize(census_transform_serial(img));
}
void BM_census_omp(benchmark::State& s) {
  const auto img = noise_image(320, 240, 3);
  for (auto _ : s) benchmark::DoNotOptimize(census_transform(img));
}

void BM_sgm_serial(benchmark::State& s) {
  SgmParams p;
  p.range = {0, 63};
  for (auto _ : s) benchmark::DoNotOptimize(sgm_aggregate_serial(volume(), p));
}
void BM_sgm_omp(benchmark::State& s) {
  SgmParams p;
  p.range = {0, 63};
  for (auto _ : s) benchmark::DoNotOptimize(sgm_aggregate(volume(), p));
}

std::pair<std::vector<double>, std::vector<double>> line_data(int n) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = i * 0.01;
    y[i] = 2.0 * x[i] + 5.0 + noise(rng);
  }
  return {x, y};
}

void BM_slopes_serial(benchmark::State& s) {
  const auto [x, y] = line_data(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(pairwise_slopes_serial(x, y));
}
void BM_slopes_omp(benchmark::State& s) {
  const auto [x, y] = line_data(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(pairwise_slopes(x, y));
}

struct ConvCase {
  net::ConvGeometry g = net::ConvGeometry::make(21, 23, 23, 3, 1, 1);
  int n = 32, out_c = 32;
  std::vector<float> x, w, b, y;
  ConvCase() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    x.resize(static_cast<std::size_t>(n) * g.in_c * g.in_h * g.in_w);
    w.resize(static_cast<std::size_t>(out_c) * g.rows());
    b.resize(out_c);
    y.resize(static_cast<std::size_t>(n) * out_c * g.out_pixels());
    for (auto* v : {&x, &w, &b})
      for (auto& e : *v) e = u(rng);
  }
};

void BM_conv_reference(benchmark::State& s) {
  ConvCase c;
  for (auto _ : s) {
    net::conv2d_forward_reference(c.x.data(), c.n, c.g, c.w.data(), c.b.data(), c.out_c, c.y.data());
    benchmark::ClobberMemory();
  }
}
void BM_conv_omp(benchmark::State& s) {
  ConvCase c;
  for (auto _ : s) {
    net::conv2d_forward(c.x.data(), c.n, c.g, c.w.data(), c.b.data(), c.out_c, c.y.data());
    benchmark::ClobberMemory();
  }
}

}  // namespace

BENCHMARK(BM_census_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_census_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sgm_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sgm_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_slopes_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_slopes_omp)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_omp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
