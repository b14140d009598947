// Reference vs optimized CNN kernels, and a full 2D training batch.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "scanpath/cnn/network.hpp"

using namespace scanpath::cnn;

namespace {

std::vector<double> random_vec(std::size_t n, double zero_frac, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng) < zero_frac ? 0.0 : nd(rng);
  return v;
}

// Scanplot-like input: mostly black.
void BM_Conv2dForward(benchmark::State& st) {
  const auto ks = static_cast<KernelSet>(st.range(0));
  const int h = 110, w = 85, cin = 3, cout = 8;
  const auto in = random_vec(static_cast<std::size_t>(h * w * cin), 0.95, 1);
  const auto wt = random_vec(static_cast<std::size_t>(9 * cin * cout), 0.0, 2);
  const std::vector<double> b(cout, 0.1);
  std::vector<double> out(static_cast<std::size_t>(h * w * cout));
  const auto& k = kernels(ks);
  for (auto _ : st) {
    k.conv2d_forward(in.data(), h, w, cin, wt.data(), b.data(), cout, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Conv2dForward)->Arg(0)->Arg(1)->ArgName("optimized");

void BM_Conv2dBackward(benchmark::State& st) {
  const auto ks = static_cast<KernelSet>(st.range(0));
  const int h = 55, w = 42, cin = 8, cout = 16;
  const auto in = random_vec(static_cast<std::size_t>(h * w * cin), 0.7, 3);
  const auto wt = random_vec(static_cast<std::size_t>(9 * cin * cout), 0.0, 4);
  const auto dout = random_vec(static_cast<std::size_t>(h * w * cout), 0.8, 5);
  std::vector<double> din(in.size()), dw(wt.size()), db(cout);
  const auto& k = kernels(ks);
  for (auto _ : st) {
    k.conv2d_backward(in.data(), h, w, cin, wt.data(), cout, dout.data(), din.data(), dw.data(), db.data());
    benchmark::DoNotOptimize(dw.data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(0)->Arg(1)->ArgName("optimized");

void BM_DenseForward(benchmark::State& st) {
  const auto ks = static_cast<KernelSet>(st.range(0));
  const int n_in = 13 * 10 * 32, n_out = 128;
  const auto in = random_vec(static_cast<std::size_t>(n_in), 0.5, 6);
  const auto wt = random_vec(static_cast<std::size_t>(n_in * n_out), 0.0, 7);
  const std::vector<double> b(n_out, 0.0);
  std::vector<double> out(n_out);
  const auto& k = kernels(ks);
  for (auto _ : st) {
    k.dense_forward(in.data(), n_in, wt.data(), b.data(), n_out, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DenseForward)->Arg(0)->Arg(1)->ArgName("optimized");

// One 32-image batch through loss_and_grad; the optimized path also spreads
// chunks over OpenMP threads.
void BM_TrainBatch2d(benchmark::State& st) {
  const auto ks = static_cast<KernelSet>(st.range(0));
  Network net = Network::make_2d();
  net.init(1);
  std::vector<std::vector<double>> images;
  std::vector<const double*> xs;
  std::vector<int> ys;
  for (int i = 0; i < 32; ++i) {
    images.push_back(random_vec(static_cast<std::size_t>(net.input_size()), 0.95, 100 + i));
    ys.push_back(i % 3);
  }
  for (const auto& im : images) xs.push_back(im.data());
  auto grads = net.zeros_like();
  for (auto _ : st) {
    benchmark::DoNotOptimize(net.loss_and_grad(xs, ys, grads, ks));
  }
}
BENCHMARK(BM_TrainBatch2d)->Arg(0)->Arg(1)->ArgName("optimized")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
