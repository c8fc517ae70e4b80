#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "doctest.h"
#include "gradcheck.hpp"
#include "lfdepth/error.hpp"
#include "lfdepth/net/kernels.hpp"
#include "lfdepth/net/train.hpp"

using namespace lfd;
using namespace lfd::net;

namespace {

template <typename T>
Tensor<T> random_tensor(int n, Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<T> t(n, s);
  for (auto& v : t.values) v = static_cast<T>(u(rng));
  return t;
}

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an lfd::Error");
  return ErrorKind::Usage;
}

// Small stacks whose centroid depth is an affine function of the mean of channel 0.
TrainingSet toy_training_set(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> level(0.0f, 1.0f), noise(-0.05f, 0.05f);
  TrainingSet ts;
  ts.stacks.channels = 3;
  ts.stacks.height = ts.stacks.width = 7;
  for (int i = 0; i < n; ++i) {
    const float a = level(rng);
    for (int k = 0; k < 3 * 49; ++k) ts.stacks.values.push_back(a + noise(rng));
    ts.stacks.coords.push_back({i, 0});
    ts.stacks.centroids.push_back({static_cast<double>(i), 0.0});
    ts.depths.push_back(1.0f + 2.0f * a);
  }
  ts.stacks.n = n;
  return ts;
}

std::vector<LayerSpec> toy_architecture() {
  return {LayerSpec::conv(3, 8, 3, 1, 1), LayerSpec::batchnorm(8), LayerSpec::relu(), LayerSpec::conv(8, 1, 3, 1, 1)};
}

TrainConfig toy_config(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.lr = 1e-2;
  c.seed = 3;
  c.architecture = toy_architecture();
  return c;
}

}  // namespace

TEST_CASE("im2col GEMM convolution matches the direct loop") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 12; ++trial) {
    const int in_c = 1 + trial % 4, out_c = 1 + (trial * 3) % 5, k = trial % 2 ? 3 : 1, s = 1 + trial % 3;
    const int h = 5 + trial % 7, w = 4 + trial % 5, p = k / 2;
    const auto g = ConvGeometry::make(in_c, h, w, k, s, p);
    const auto x = random_vec(static_cast<std::size_t>(2) * in_c * h * w, trial);
    const auto wt = random_vec(static_cast<std::size_t>(out_c) * in_c * k * k, trial + 100);
    const auto b = random_vec(out_c, trial + 200);
    std::vector<float> fast(2 * out_c * g.out_pixels()), ref(fast.size());
    conv2d_forward(x.data(), 2, g, wt.data(), b.data(), out_c, fast.data());
    conv2d_forward_reference(x.data(), 2, g, wt.data(), b.data(), out_c, ref.data());
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == doctest::Approx(ref[i]).epsilon(1e-5));
  }
}

TEST_CASE("transposed convolution matches the direct scatter loop") {
  for (int trial = 0; trial < 12; ++trial) {
    const int in_c = 1 + trial % 3, out_c = 1 + trial % 4, s = 1 + trial % 2, k = 3, p = 1;
    const int oh = 6 + trial % 5, ow = 5 + trial % 4;
    const auto g = ConvGeometry::make(out_c, oh, ow, k, s, p);
    const auto x = random_vec(static_cast<std::size_t>(3) * in_c * g.out_pixels(), trial);
    const auto wt = random_vec(static_cast<std::size_t>(in_c) * out_c * k * k, trial + 1);
    const auto b = random_vec(out_c, trial + 2);
    std::vector<float> fast(3 * out_c * oh * ow), ref(fast.size());
    conv_transpose2d_forward(x.data(), 3, g, wt.data(), b.data(), in_c, fast.data());
    conv_transpose2d_forward_reference(x.data(), 3, g, wt.data(), b.data(), in_c, ref.data());
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == doctest::Approx(ref[i]).epsilon(1e-5));
  }
}

TEST_CASE("transposed convolution is the adjoint of convolution") {
  const auto g = ConvGeometry::make(2, 7, 7, 3, 2, 1);
  std::vector<double> x(2 * 49), y(3 * g.out_pixels()), wt(3 * 2 * 9), zero(3, 0.0);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (auto* v : {&x, &y, &wt})
    for (auto& e : *v) e = nd(rng);
  std::vector<double> cx(y.size()), ty(x.size());
  conv2d_forward(x.data(), 1, g, wt.data(), zero.data(), 3, cx.data());
  conv_transpose2d_forward(y.data(), 1, g, wt.data(), zero.data(), 3, ty.data());
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += cx[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * ty[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("the default architecture maps (N,21,23,23) to (N,1,23,23)") {
  Network<float> net(default_architecture(), kStackShape, 0);
  CHECK(net.output_shape() == Shape{1, 23, 23});
  for (int n : {1, 3}) {
    const auto y = net.forward(random_tensor<float>(n, kStackShape, n));
    CHECK(y.n == n);
    CHECK(y.item_shape() == Shape{1, 23, 23});
  }
}

TEST_CASE("the default architecture has the planned widths") {
  const auto s = default_architecture();
  std::vector<int> conv_out, tconv_out, fc_out;
  for (const auto& l : s) {
    if (l.kind == LayerKind::Conv) conv_out.push_back(l.out_channels);
    if (l.kind == LayerKind::TransposedConv) tconv_out.push_back(l.out_channels);
    if (l.kind == LayerKind::FullyConnected) fc_out.push_back(l.out_features);
  }
  CHECK(conv_out == std::vector<int>{32, 64, 128, 256, 256});
  CHECK(fc_out == std::vector<int>{512, 128, 512, 2304});
  CHECK(tconv_out == std::vector<int>{256, 128, 64, 32, 1});
  CHECK(s.back().kind == LayerKind::TransposedConv);
}

TEST_CASE("wrong input shapes are rejected") {
  Network<float> net(default_architecture(), kStackShape, 0);
  CHECK(kind_of([&] { net.forward(Tensor4(2, 20, 23, 23)); }) == ErrorKind::ShapeMismatch);
  CHECK(kind_of([&] { net.forward(Tensor4(2, 21, 22, 23)); }) == ErrorKind::ShapeMismatch);
  auto bad = default_architecture();
  bad[3].in_channels = 31;
  CHECK(kind_of([&] { Network<float>(bad, kStackShape, 0); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("a 1x1 all-ones kernel with zero bias sums the channels") {
  Network<float> net({LayerSpec::conv(4, 1, 1, 1, 0)}, {4, 5, 6}, 0);
  auto& conv = dynamic_cast<Conv2d<float>&>(net.layer(0));
  std::fill(conv.weight().begin(), conv.weight().end(), 1.0f);
  const auto x = random_tensor<float>(2, {4, 5, 6}, 9);
  const auto y = net.forward(x);
  for (int i = 0; i < 2; ++i)
    for (int yy = 0; yy < 5; ++yy)
      for (int xx = 0; xx < 6; ++xx) {
        float s = 0;
        for (int c = 0; c < 4; ++c) s += x.at(i, c, yy, xx);
        CHECK(y.at(i, 0, yy, xx) == doctest::Approx(s).epsilon(1e-6));
      }
}

TEST_CASE("eval forwards are bitwise deterministic") {
  Network<float> net(default_architecture(), kStackShape, 5);
  const auto x = random_tensor<float>(4, kStackShape, 1);
  CHECK(net.forward(x) == net.forward(x));
  Network<float> twin(default_architecture(), kStackShape, 5);
  CHECK(twin.forward(x) == net.forward(x));
}

TEST_CASE("batchnorm in eval mode is a fixed affine map") {
  BatchNorm2d<float> bn(LayerSpec::batchnorm(3), {3, 4, 4});
  LayerCache<float> cache;
  Tensor4 y;
  bn.forward_train(random_tensor<float>(5, {3, 4, 4}, 2), y, cache);
  const auto x = random_tensor<float>(2, {3, 4, 4}, 3);
  Tensor4 a, b;
  bn.forward(x, a);
  bn.forward(x, b);
  CHECK(a == b);
  for (int c = 0; c < 3; ++c) {
    const double scale = 1.0 / std::sqrt(bn.running_var()[c] + 1e-5);
    CHECK(a.at(1, c, 2, 1) == doctest::Approx((x.at(1, c, 2, 1) - bn.running_mean()[c]) * scale).epsilon(1e-5));
  }
}

TEST_CASE("batchnorm running statistics follow momentum 0.1 with unbiased variance") {
  BatchNorm2d<double> bn(LayerSpec::batchnorm(1), {1, 1, 2});
  Tensor<double> x(2, 1, 1, 2);
  x.values = {1.0, 2.0, 3.0, 6.0};  // mean 3, unbiased variance 14/3
  LayerCache<double> cache;
  Tensor<double> y;
  bn.forward_train(x, y, cache);
  CHECK(bn.running_mean()[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(bn.running_var()[0] == doctest::Approx(0.9 + 0.1 * 14.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("masked MSE fixture values") {
  Tensor<double> p(1, 1, 1, 2), g(1, 1, 1, 2), m(1, 1, 1, 2, 1.0);
  p.values = {2, 4};
  g.values = {1, 4};
  CHECK(masked_mse(p, g, m) == 0.5);
  CHECK(masked_mse(p, p, m) == 0.0);
  Tensor<double> zero(1, 1, 1, 2);
  CHECK(kind_of([&] { masked_mse(p, g, zero); }) == ErrorKind::EmptyMask);
  CHECK(kind_of([&] { masked_mse(p, Tensor<double>(1, 1, 2, 1), m); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("masked MSE is non-negative and ignores values outside the mask") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor<double> p(2, 1, 3, 3), g(2, 1, 3, 3), m(2, 1, 3, 3);
    for (std::size_t k = 0; k < p.size(); ++k) {
      p.values[k] = u(rng);
      g.values[k] = u(rng);
      m.values[k] = (k + trial) % 3 == 0 ? 1.0 : 0.0;
    }
    const double base = masked_mse(p, g, m);
    CHECK(base >= 0.0);
    for (std::size_t k = 0; k < p.size(); ++k)
      if (m.values[k] == 0.0) p.values[k] += 100.0 * u(rng);
    CHECK(masked_mse(p, g, m) == base);
    for (std::size_t k = 0; k < p.size(); ++k)
      if (m.values[k] != 0.0) p.values[k] = g.values[k];
    CHECK(masked_mse(p, g, m) == 0.0);
  }
}

TEST_CASE("every layer kind passes the finite-difference gradient check") {
  std::mt19937_64 rng(0);
  {
    Conv2d<double> l(LayerSpec::conv(3, 4, 3, 2, 1), {3, 7, 6});
    l.init(rng);
    const auto r = gradcheck::check_layer(l, gradcheck::random_tensor(2, 3, 7, 6, rng), 1);
    CHECK_MESSAGE(r.worst < gradcheck::kRelTol, r.worst_where);
  }
  {
    ConvTranspose2d<double> l(LayerSpec::transposed_conv(3, 2, 3, 2, 1, 1), {3, 4, 4});
    l.init(rng);
    const auto r = gradcheck::check_layer(l, gradcheck::random_tensor(2, 3, 4, 4, rng), 2);
    CHECK_MESSAGE(r.worst < gradcheck::kRelTol, r.worst_where);
  }
  {
    BatchNorm2d<double> l(LayerSpec::batchnorm(3), {3, 3, 3});
    auto ps = l.params();
    for (auto& v : ps[0]) v = 0.5 + gradcheck::random_tensor(1, 1, 1, 1, rng).values[0] * 0.1;
    for (auto& v : ps[1]) v = 0.3;
    const auto r = gradcheck::check_layer(l, gradcheck::random_tensor(4, 3, 3, 3, rng), 3);
    CHECK_MESSAGE(r.worst < gradcheck::kRelTol, r.worst_where);
  }
  {
    ReLU<double> l;
    const auto r = gradcheck::check_layer(l, gradcheck::random_tensor(2, 2, 4, 4, rng), 4);
    CHECK_MESSAGE(r.worst < gradcheck::kRelTol, r.worst_where);
  }
  {
    FullyConnected<double> l(LayerSpec::fully_connected(18, 7), {2, 3, 3});
    l.init(rng);
    const auto r = gradcheck::check_layer(l, gradcheck::random_tensor(3, 2, 3, 3, rng), 5);
    CHECK_MESSAGE(r.worst < gradcheck::kRelTol, r.worst_where);
  }
  {
    Reshape<double> l(LayerSpec::reshape(2, 2, 3), {12, 1, 1});
    const auto r = gradcheck::check_layer(l, gradcheck::random_tensor(2, 12, 1, 1, rng), 6);
    CHECK_MESSAGE(r.worst < gradcheck::kRelTol, r.worst_where);
  }
}

TEST_CASE("the composed tiny network passes the finite-difference gradient check") {
  const auto r = gradcheck::check_tiny_network();
  CHECK(r.checked > 1000);
  CHECK_MESSAGE(r.worst < gradcheck::kRelTol, r.worst_where);
}

TEST_CASE("a zero loss gradient yields zero parameter gradients") {
  Network<double> net(gradcheck::tiny_architecture(), gradcheck::kTinyInput, 1);
  Activations<double> acts;
  const auto y = net.forward_train(random_tensor<double>(2, gradcheck::kTinyInput, 3), acts);
  const auto grads = net.backward(acts, Tensor<double>(y.n, y.item_shape()));
  for (const auto& g : grads)
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("relu passes no gradient through negative pre-activations") {
  ReLU<float> relu;
  Tensor4 x(1, 1, 1, 4);
  x.values = {-2.0f, -1e-6f, 0.5f, 3.0f};
  LayerCache<float> cache;
  Tensor4 y, dx;
  relu.forward_train(x, y, cache);
  Gradients<float> g;
  relu.backward(cache, Tensor4(1, 1, 1, 4, 1.0f), &dx, g);
  CHECK(std::vector<float>(dx.values.begin(), dx.values.end()) == std::vector<float>{0.0f, 0.0f, 1.0f, 1.0f});
}

TEST_CASE("adam's first step is -lr * g / (|g| + eps)") {
  std::vector<double> theta{0.5, -1.0, 2.0, 3.0};
  const Gradients<double> g{{10.0, -0.02, 1e-9, 0.0}};
  AdamState<double> st;
  const AdamConfig cfg;
  adam_step<double>({std::span<double>(theta)}, g, st, cfg);
  const double expect[4] = {0.5 - 1e-3 * 10.0 / (10.0 + 1e-8), -1.0 + 1e-3 * 0.02 / (0.02 + 1e-8),
                            2.0 - 1e-3 * 1e-9 / (1e-9 + 1e-8), 3.0};
  for (int i = 0; i < 4; ++i) CHECK(theta[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  // For |g| >> eps the step is lr in magnitude.
  CHECK(std::abs(theta[0] - 0.5 + 1e-3) < 1e-11);
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
  std::vector<float> theta = random_vec(10, 1);
  const auto before = theta;
  AdamState<float> st;
  for (int t = 0; t < 100; ++t) adam_step<float>({std::span<float>(theta)}, Gradients<float>{Buffer<float>(10, 0.0f)}, st, {});
  CHECK(theta == before);
}

TEST_CASE("adam trajectories are deterministic") {
  auto run = [] {
    std::vector<float> theta = random_vec(16, 2);
    AdamState<float> st;
    std::mt19937_64 rng(5);
    std::normal_distribution<float> nd;
    for (int t = 0; t < 50; ++t) {
      std::vector<float> g(16);
      for (auto& v : g) v = nd(rng);
      adam_step<float>({std::span<float>(theta)}, Gradients<float>{Buffer<float>(g.begin(), g.end())}, st, {});
    }
    return theta;
  };
  CHECK(run() == run());
}

TEST_CASE("shuffled indices are seeded permutations") {
  std::mt19937_64 a(1), b(1);
  const auto p = shuffled_indices(1000, a);
  CHECK(p == shuffled_indices(1000, b));
  CHECK(std::set<std::size_t>(p.begin(), p.end()).size() == 1000);
  CHECK(*std::max_element(p.begin(), p.end()) == 999);
}

TEST_CASE("training reduces the loss and is reproducible") {
  const auto data = toy_training_set(96, 1);
  const auto a = train(data, toy_config(30));
  REQUIRE(a.epoch_loss.size() == 30);
  CHECK(a.epoch_loss.back() < 0.1 * a.epoch_loss.front());
  const auto b = train(data, toy_config(30));
  CHECK(a.epoch_loss == b.epoch_loss);
  const auto pa = predict_sparse(a.network, data.stacks), pb = predict_sparse(b.network, data.stacks);
  CHECK(pa == pb);
}

TEST_CASE("a single stack is overfit") {
  auto cfg = toy_config(300);
  cfg.architecture = {LayerSpec::conv(3, 8, 3, 1, 1), LayerSpec::relu(), LayerSpec::conv(8, 1, 3, 1, 1)};
  const auto r = train(toy_training_set(1, 2), cfg);
  CHECK(r.epoch_loss.back() < 1e-4 * r.epoch_loss.front());
}

TEST_CASE("training without data fails") {
  CHECK(kind_of([] { train(TrainingSet{}, toy_config(1)); }) == ErrorKind::NoTrainingData);
  auto cfg = toy_config(0);
  CHECK(kind_of([&] { train(toy_training_set(4, 1), cfg); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("make_training_set pairs stacks with ground truth by lens") {
  FlowerStackBatch b;
  b.n = 3;
  b.values.assign(3 * b.item_size(), 0.0f);
  for (int i = 0; i < 3; ++i) {
    std::fill_n(b.values.begin() + i * b.item_size(), b.item_size(), static_cast<float>(i));
    b.coords.push_back({i, 1});
    b.centroids.push_back({10.0 * i, 5.0});
  }
  SparseDepthMap gt;
  gt.entries = {{{2, 1}, {0, 0}, 2.5}, {{0, 1}, {0, 0}, 1.5}, {{7, 7}, {0, 0}, 9.0}};
  const auto ts = make_training_set(b, gt);
  REQUIRE(ts.size() == 2);
  CHECK(ts.stacks.coords == std::vector<AxialCoord>{{0, 1}, {2, 1}});
  CHECK(ts.depths == std::vector<float>{1.5f, 2.5f});
  CHECK(ts.stacks.values[ts.stacks.item_size()] == 2.0f);
}

TEST_CASE("untrained predictions are finite and keyed by stack") {
  Network<float> net(default_architecture(), kStackShape, 11);
  FlowerStackBatch b;
  b.n = 5;
  b.values = random_vec(5 * b.item_size(), 3);
  for (int i = 0; i < 5; ++i) {
    b.coords.push_back({i, -i});
    b.centroids.push_back({1.5 * i, 2.0});
  }
  const auto pred = predict_sparse(net, b, 2);
  REQUIRE(pred.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(pred.entries[i].coord == b.coords[i]);
    CHECK(pred.entries[i].centroid == b.centroids[i]);
    CHECK(std::isfinite(pred.entries[i].depth));
    CHECK(pred.entries[i].depth >= kMinPredictedDepth);
  }
  FlowerStackBatch wrong = b;
  wrong.channels = 20;
  CHECK(kind_of([&] { predict_sparse(net, wrong); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("weight files round-trip exactly and reject corruption") {
  Network<float> net(default_architecture(), kStackShape, 4);
  {
    // Move the batchnorm buffers away from their defaults.
    Activations<float> acts;
    net.forward_train(random_tensor<float>(3, kStackShape, 8), acts);
  }
  const auto path = (std::filesystem::temp_directory_path() / "lfd_test.mldn").string();
  save_network(path, net);
  auto back = load_network(path);
  auto a = net.arrays(), b = back.arrays();
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::equal(a[k].begin(), a[k].end(), b[k].begin()));
  const auto x = random_tensor<float>(2, kStackShape, 9);
  CHECK(net.forward(x) == back.forward(x));

  CHECK(kind_of([&] { load_network(path, gradcheck::tiny_architecture(), gradcheck::kTinyInput); }) == ErrorKind::FormatError);
  auto text = read_text_file(path);
  write_text_file(path, text.substr(0, text.size() - 10));
  CHECK(kind_of([&] { load_network(path); }) == ErrorKind::FormatError);
  text[0] = 'X';
  write_text_file(path, text);
  CHECK(kind_of([&] { load_network(path); }) == ErrorKind::FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("loss history CSV round-trips") {
  const std::vector<double> h{1.25, 0.5, 1.0 / 3.0};
  const auto path = (std::filesystem::temp_directory_path() / "lfd_loss.csv").string();
  save_loss_history(path, h);
  CHECK(read_text_file(path).rfind("epoch,mean_loss\n1,1.25\n", 0) == 0);
  CHECK(load_loss_history(path) == h);
  std::filesystem::remove(path);
}
