// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any criterion failed.
//   acceptance <lfdepth cli> [lfs dir] [--only N]
// The LFS directory holds manifest.txt, grid.txt and optionally config.txt (thin_lens.* keys);
// criterion 9 is skipped without it.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "lfdepth/align.hpp"
#include "lfdepth/error.hpp"
#include "lfdepth/io.hpp"
#include "lfdepth/metrics.hpp"
#include "lfdepth/net/train.hpp"
#include "lfdepth/pipeline.hpp"
#include "lfdepth/stereo/census.hpp"
#include "lfdepth/stereo/geometry.hpp"
#include "lfdepth/stereo/pipeline.hpp"
#include "lfdepth/stereo/sgm.hpp"
#include "lfdepth/synth.hpp"

namespace fs = std::filesystem;
using namespace lfd;

namespace {

enum class Status { Pass, Fail, Skip };

// Collects failed expectations; the first few are reported.
struct Check {
  Status status = Status::Pass;
  std::vector<std::string> failures;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    status = Status::Fail;
    if (failures.size() < 5) failures.push_back(what);
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

CorrespondenceSet make_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  CorrespondenceSet c;
  for (std::size_t i = 0; i < x.size(); ++i) c.pairs.push_back({x[i], y[i], {0, 0}});
  return c;
}

// ---- 1: gradients ----

void gradients(Check& c) {
  using namespace lfd::net;
  std::mt19937_64 rng(0);
  auto run = [&](const std::string& name, Layer<double>& l, const Tensor<double>& x, std::uint64_t seed) {
    const auto r = gradcheck::check_layer(l, x, seed);
    c.expect(r.checked > 0 && r.worst < gradcheck::kRelTol, name + " worst " + fmt(r.worst) + " at " + r.worst_where);
    c.note(name + " " + fmt(r.worst, 2));
  };
  {
    Conv2d<double> l(LayerSpec::conv(3, 4, 3, 2, 1), {3, 7, 6});
    l.init(rng);
    run("conv", l, gradcheck::random_tensor(2, 3, 7, 6, rng), 1);
  }
  {
    ConvTranspose2d<double> l(LayerSpec::transposed_conv(3, 2, 3, 2, 1, 1), {3, 4, 4});
    l.init(rng);
    run("deconv", l, gradcheck::random_tensor(2, 3, 4, 4, rng), 2);
  }
  {
    BatchNorm2d<double> l(LayerSpec::batchnorm(3), {3, 3, 3});
    auto ps = l.params();
    for (auto& v : ps[0]) v = 0.5 + 0.1 * gradcheck::random_tensor(1, 1, 1, 1, rng).values[0];
    for (auto& v : ps[1]) v = 0.3;
    run("batchnorm", l, gradcheck::random_tensor(4, 3, 3, 3, rng), 3);
  }
  {
    ReLU<double> l;
    run("relu", l, gradcheck::random_tensor(2, 2, 4, 4, rng), 4);
  }
  {
    FullyConnected<double> l(LayerSpec::fully_connected(18, 7), {2, 3, 3});
    l.init(rng);
    run("fc", l, gradcheck::random_tensor(3, 2, 3, 3, rng), 5);
  }
  {
    Reshape<double> l(LayerSpec::reshape(2, 2, 3), {12, 1, 1});
    run("reshape", l, gradcheck::random_tensor(2, 12, 1, 1, rng), 6);
  }
  const auto r = gradcheck::check_tiny_network();
  c.expect(r.checked > 1000 && r.worst < gradcheck::kRelTol, "tiny net worst " + fmt(r.worst) + " at " + r.worst_where);
  c.note("tiny net " + fmt(r.worst, 2) + " over " + std::to_string(r.checked) + " params");
}

// ---- 2: Theil-Sen ----

std::pair<double, double> brute_force_theil_sen(const CorrespondenceSet& c) {
  std::vector<double> slopes, icpt;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j)
      if (c.pairs[i].x != c.pairs[j].x) slopes.push_back((c.pairs[j].y - c.pairs[i].y) / (c.pairs[j].x - c.pairs[i].x));
  const double m = median(slopes);
  for (const auto& p : c.pairs) icpt.push_back(p.y - m * p.x);
  return {m, median(icpt)};
}

void theil_sen(Check& c) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 60), coarse(-5, 5);
  std::normal_distribution<double> nd(0.0, 3.0);
  int exact = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = trial % 3 == 0 ? coarse(rng) : nd(rng);
      y[i] = nd(rng);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) x[0] += 1.0;
    const auto pairs = make_pairs(x, y);
    const auto fit = fit_theil_sen(pairs, {TheilSenOptions::Mode::Exact});
    const auto [bm, bb] = brute_force_theil_sen(pairs);
    const bool same = fit.m == bm && fit.b == bb;
    exact += same;
    c.expect(same, "oracle mismatch on trial " + std::to_string(trial));
  }
  c.note(std::to_string(exact) + "/200 exact");

  double worst = 0.0;
  auto rel = [&](double got, double want) {
    const double e = std::abs(got - want) / (1 + std::abs(want));
    worst = std::max(worst, e);
    return e <= 1e-9;
  };
  std::normal_distribution<double> unit;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(25), y(25);
    for (int i = 0; i < 25; ++i) {
      x[i] = unit(rng);
      y[i] = 1.3 * x[i] - 0.4 + 0.2 * unit(rng);
    }
    const auto base = fit_theil_sen(make_pairs(x, y));
    const double s = 0.5 + std::abs(unit(rng)), shift = unit(rng);
    std::vector<double> ys(y), xt(x);
    for (auto& v : ys) v *= s;
    for (auto& v : xt) v += shift;
    const auto scaled = fit_theil_sen(make_pairs(x, ys));
    const auto moved = fit_theil_sen(make_pairs(xt, y));
    c.expect(rel(scaled.m, s * base.m) && rel(scaled.b, s * base.b), "y-scale equivariance");
    c.expect(rel(moved.m, base.m) && rel(moved.b, base.b - base.m * shift), "x-shift equivariance");
  }
  std::uniform_real_distribution<double> u(-50, 50), ux(0, 10);
  for (int trial = 0; trial < 30; ++trial) {
    const double m = u(rng) / 10, b = u(rng);
    std::vector<double> x(40), y(40);
    for (int i = 0; i < 40; ++i) {
      x[i] = ux(rng);
      y[i] = m * x[i] + b;
    }
    for (int i = 0; i < 10; ++i) y[(i * 7 + trial) % 40] = 1e3 * u(rng);
    const auto fit = fit_theil_sen(make_pairs(x, y));
    c.expect(std::abs(fit.m - m) <= 1e-9 * std::max(1.0, std::abs(m)) && std::abs(fit.b - b) <= 1e-9 * std::max(1.0, std::abs(b)),
             "25% outliers, trial " + std::to_string(trial));
  }
  c.note("equivariance worst " + fmt(worst, 2));
}

// ---- 3: alignment recovery ----

void alignment(Check& c) {
  GridCalibration gc;
  gc.origin = {24.0, 24.0};
  gc.pitch = 24.0;
  gc.rows = 8;
  gc.cols = 10;
  gc.sensor_width = 260;
  gc.sensor_height = 200;
  const auto rig = make_rectified_rig(1000, 0.1, 260, 200);
  SyntheticScene scene;
  scene.rig = rig;
  TexturedPlane near{1.25, 4};
  near.x1 = 0.0;
  scene.planes = {near, {3.0, 5}};
  const auto grid = build_grid(gc);
  const auto sparse = centroid_depths(scene, grid);
  const auto truth = render_view(scene, rig.plenoptic, rig.plenoptic_from_left).depth;
  double worst_mb = 0.0, worst_z = 0.0;
  for (auto [m, b] : {std::pair{1.0, 0.0}, std::pair{2.0, 5.0}, std::pair{0.37, -3.2}}) {
    const auto rel = render_relative_disparity(scene, m, b, 260, 200);
    const auto fit = fit_theil_sen(sample_correspondences(rel, sparse, rig));
    worst_mb = std::max({worst_mb, std::abs(fit.m - m), std::abs(fit.b - b)});
    c.expect(std::abs(fit.m - m) <= 1e-9 && std::abs(fit.b - b) <= 1e-9,
             "(m,b)=(" + fmt(m) + "," + fmt(b) + ") fitted (" + fmt(fit.m, 17) + "," + fmt(fit.b, 17) + ")");
    const auto fused = fuse(rel, fit, rig);
    for (std::size_t i = 0; i < truth.values.size(); ++i) {
      if (!truth.valid[i]) continue;
      if (!fused.valid[i]) {
        c.expect(false, "fused pixel " + std::to_string(i) + " invalid");
        continue;
      }
      const double e = std::abs(fused.values[i] - truth.values[i]) / truth.values[i];
      worst_z = std::max(worst_z, e);
      c.expect(e <= 1e-6, "fused depth off by " + fmt(e) + " relative");
    }
  }
  c.note("worst |dm|,|db| " + fmt(worst_mb, 2) + ", worst depth rel " + fmt(worst_z, 2));
}

// ---- 4: network learning ----

// Render, debayer, cut, pair with exact centroid depth; on the training lattice only the middle lens counts.
net::TrainingSet stacks_of(const SyntheticScene& s, const MicrolensGrid& grid, bool middle_only) {
  const auto r = render_plenoptic(s, grid);
  const auto truth = middle_only ? single_flower_truth(r.depth, grid.calibration()) : r.depth;
  return net::make_training_set(make_batch(build_all_flower_stacks(debayer(r.raw), grid)), truth);
}

double held_out_error(const net::Network<float>& network, const std::vector<TrainingCapture>& captures, double depth) {
  net::TrainingSet held;
  for (const auto& c : captures) net::append(held, stacks_of(c.scene, build_grid(c.grid), true));
  std::vector<double> err;
  for (const auto& e : net::predict_sparse(network, held.stacks).entries) err.push_back(std::abs(e.depth - depth) / depth);
  return median(err);
}

double held_out_error(const net::Network<float>& network, const std::vector<SyntheticScene>& scenes,
                      const MicrolensGrid& grid, double depth) {
  net::TrainingSet held;
  for (const auto& s : scenes) net::append(held, stacks_of(s, grid, false));
  std::vector<double> err;
  for (const auto& e : net::predict_sparse(network, held.stacks).entries) err.push_back(std::abs(e.depth - depth) / depth);
  return median(err);
}

void learning(Check& c) {
  constexpr int kScenes = 4096, kEpochs = 60, kBatch = 512;
  constexpr double kHeldOutDepth = 1.5;
  TrainingScenes ts;
  ts.count = kScenes;
  ts.seed = 3;
  net::TrainingSet set;
  for (const auto& cap : training_captures(ts)) net::append(set, stacks_of(cap.scene, build_grid(cap.grid), true));
  c.expect(set.size() >= 512, "only " + std::to_string(set.size()) + " training stacks");

  net::TrainConfig cfg;
  cfg.epochs = kEpochs;
  cfg.batch_size = kBatch;
  cfg.seed = 7;
  const auto res = net::train(set, cfg);
  const double first = res.epoch_loss.front(), last = res.epoch_loss.back();
  const double reduction = 1.0 - last / first;
  c.expect(reduction >= 0.9, "loss reduced by only " + fmt(100 * reduction, 3) + "%");

  // Held out: unseen seeds, lattice phases and texture shifts from the training distribution, every plane at 1.5 m.
  TrainingScenes hs = ts;
  hs.count = 64;
  hs.seed = 90001;
  auto held = training_captures(hs);
  for (auto& h : held) h.scene.planes[0].depth = kHeldOutDepth;
  const double med = held_out_error(res.network, held, kHeldOutDepth);
  c.expect(med < 0.05, "held-out median relative error " + fmt(100 * med, 3) + "%");

  // Informational: the same planes seen through the interior lenses of a larger sensor.
  GridCalibration wide;
  wide.origin = {24.0, 24.0};
  wide.pitch = 24.0;
  wide.rows = 6;
  wide.cols = 7;
  wide.sensor_width = 200;
  wide.sensor_height = 160;
  const auto wide_rig = make_rectified_rig(300.0, 0.1, wide.sensor_width, wide.sensor_height);
  std::vector<SyntheticScene> wide_scenes;
  for (std::size_t i = 0; i < 8; ++i) {
    wide_scenes.push_back(held[i].scene);
    wide_scenes.back().rig = wide_rig;
  }
  const double wide_med = held_out_error(res.network, wide_scenes, build_grid(wide), kHeldOutDepth);

  c.note(std::to_string(set.size()) + " stacks, " + std::to_string(kEpochs) + " epochs of batch " + std::to_string(kBatch) + ", loss " + fmt(first) + " -> " +
         fmt(last) + " (-" + fmt(100 * reduction, 3) + "%), held-out " + fmt(kHeldOutDepth, 2) + " m median error " +
         fmt(100 * med, 3) + "% over " + std::to_string(hs.count) + " stacks (" + fmt(100 * wide_med, 3) +
         "% through a 6x7 lattice, not gated)");
}

// ---- 5: SGM ----

GrayImage random_texture(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const int cw = (w + 1) / 2 + 1;
  std::vector<float> cells(static_cast<std::size_t>(cw) * ((h + 1) / 2 + 1));
  for (auto& v : cells) v = u(rng);
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = cells[static_cast<std::size_t>(y / 2) * cw + x / 2] + 1e-3f * ((x * 7 + y * 13) % 5);
  return img;
}

GrayImage shifted(const GrayImage& src, int s) {
  GrayImage out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) out.at(x, y) = src.at(std::clamp(x + s, 0, src.width() - 1), y);
  return out;
}

SgmParams sgm_params(int dmin, int dmax, bool subpixel) {
  SgmParams p;
  p.range = {dmin, dmax};
  p.subpixel = subpixel;
  return p;
}

void sgm_oracle(Check& c) {
  const int w = 320, h = 240, dmax = 24;
  const auto left = random_texture(w, h, 11);
  for (int s : {0, 5, 13}) {
    const auto r = sgm(left, shifted(left, s), sgm_params(0, dmax, false));
    std::size_t valid = 0, exact = 0;
    for (int y = kCensusRadius; y < h - kCensusRadius; ++y)
      for (int x = dmax + kCensusRadius; x < w - kCensusRadius - s; ++x) {
        if (!r.left.is_valid(x, y)) continue;
        ++valid;
        exact += r.left.value(x, y) == s;
      }
    const double frac = valid ? static_cast<double>(exact) / valid : 0.0;
    c.expect(valid > 0 && frac >= 0.99, "shift " + std::to_string(s) + ": " + fmt(100 * frac) + "% exact");
    c.note("shift " + std::to_string(s) + " " + fmt(100 * frac, 5) + "% exact of " + std::to_string(valid));
  }
  const auto rig = make_rectified_rig(400.0, 0.1, w, h);
  for (double z : {1.2, 2.5}) {
    const double ideal = 400.0 * 0.1 / z;
    const int range = static_cast<int>(std::ceil(ideal)) + 8;
    const auto views = render_stereo(single_plane_scene(z, 21, rig));
    const auto gl = to_gray(debayer(views.left)), gr = to_gray(debayer(views.right));
    const auto r = sgm(gl, gr, sgm_params(0, range, true));
    const auto texture = texture_population(gl, RegularizeParams{}.texture_tolerance);
    std::size_t textured = 0, close = 0;
    for (int y = kCensusRadius; y < h - kCensusRadius; ++y)
      for (int x = range + kCensusRadius; x < w - kCensusRadius; ++x) {
        if (texture[static_cast<std::size_t>(y) * w + x] < RegularizeParams{}.min_texture) continue;
        ++textured;
        close += r.left.is_valid(x, y) && std::abs(r.left.value(x, y) - ideal) <= 0.5;
      }
    const double frac = textured ? static_cast<double>(close) / textured : 0.0;
    c.expect(textured > 0 && frac >= 0.95, "plane at " + fmt(z) + " m: " + fmt(100 * frac) + "% within 0.5 px");
    c.note("plane " + fmt(z, 2) + " m " + fmt(100 * frac, 4) + "% within 0.5 px");
  }
}

// ---- 6: metrics ----

struct MetricOracle {
  double mse = 0, rmse = 0, mare = 0, msre = 0, d1 = 0, d2 = 0, d3 = 0, bpr = 0;
};

MetricOracle metric_oracle(const std::vector<double>& p, const std::vector<double>& g) {
  const double n = static_cast<double>(g.size());
  MetricOracle o;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double e_cm = (p[i] - g[i]) * 100.0;
    o.mse += e_cm * e_cm / n;
    o.mare += std::abs(p[i] - g[i]) / g[i] / n * 100.0;
    o.msre += std::pow(p[i] - g[i], 2) / std::pow(g[i], 2) / n;
    const double r = std::max(p[i] / g[i], g[i] / p[i]);
    o.d1 += (r < 1.25 ? 100.0 : 0.0) / n;
    o.d2 += (r < 1.25 * 1.25 ? 100.0 : 0.0) / n;
    o.d3 += (r < 1.25 * 1.25 * 1.25 ? 100.0 : 0.0) / n;
    o.bpr += (std::abs(p[i] - g[i]) / g[i] > kDefaultBprThreshold ? 1.0 : 0.0) / n;
  }
  o.rmse = std::sqrt(o.mse);
  return o;
}

void metrics(Check& c) {
  // Hand-derived rows, confirmed against the oracle before comparing the implementation.
  struct Fixture {
    std::vector<double> pred, gt;
    MetricOracle want;
  };
  const std::vector<Fixture> fixtures = {
      {{2.0, 4.0}, {1.0, 4.0}, {5000.0, std::sqrt(5000.0), 50.0, 0.5, 50.0, 50.0, 50.0, 0.5}},
      {{1.2, 2.4, 3.6}, {1.0, 2.0, 3.0}, {5600.0 / 3, std::sqrt(5600.0 / 3), 20.0, 0.04, 100.0, 100.0, 100.0, 0.0}},
      {{1.0, 3.0}, {1.0, 3.0}, {0.0, 0.0, 0.0, 0.0, 100.0, 100.0, 100.0, 0.0}},
  };
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const auto& fx = fixtures[f];
    const auto o = metric_oracle(fx.pred, fx.gt);
    const auto r = evaluate({PairedDepths{fx.pred, fx.gt}});
    // The 1.2x row carries float rounding in its hand values, so it is compared at 1e-12 there.
    const double tol = f == 1 ? 1e-12 : 0.0;
    auto same = [&](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
    const auto& w = fx.want;
    c.expect(same(o.mse, w.mse) && same(o.mare, w.mare) && same(o.msre, w.msre) && o.d1 == w.d1 && o.d2 == w.d2 &&
                 o.d3 == w.d3 && o.bpr == w.bpr,
             "oracle disagrees with fixture " + std::to_string(f));
    c.expect(same(r.mse, w.mse) && same(r.rmse, w.rmse) && same(r.mare, w.mare) && same(r.msre, w.msre) &&
                 r.delta1 == w.d1 && r.delta2 == w.d2 && r.delta3 == w.d3 && r.bpr == w.bpr,
             "implementation disagrees with fixture " + std::to_string(f));
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> depth(0.3, 10.0), ratio(0.4, 2.5);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    PairedDepths p;
    for (int i = 0; i < 200; ++i) {
      p.gt.push_back(depth(rng));
      p.pred.push_back(p.gt.back() * ratio(rng));
    }
    const auto r = evaluate({p});
    c.expect(r.delta1 <= r.delta2 && r.delta2 <= r.delta3, "delta nesting");
    const auto s = evaluate({PairedDepths{p.gt, p.pred}});
    c.expect(s.delta1 == r.delta1 && s.delta2 == r.delta2 && s.delta3 == r.delta3, "delta swap symmetry");
    const double e = std::abs(r.rmse * r.rmse - r.mse) / std::max(1.0, r.mse);
    worst = std::max(worst, e);
    c.expect(e <= 1e-12, "rmse^2 vs mse " + fmt(e));
  }
  c.note(std::to_string(fixtures.size()) + " fixtures exact; rmse^2 vs mse worst " + fmt(worst, 2));
}

// ---- 7: geometry ----

double metric_to_virtual(double z, const ThinLens& l) {
  const double a = l.focal * z / (z - l.focal);
  return (l.main_to_mla - a) / l.mla_to_sensor;
}

void geometry(Check& c) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> zs(0.05, 200.0), fs_(100.0, 5000.0), bs(0.01, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double z = zs(rng), f = fs_(rng), b = bs(rng);
    const double back = disparity_to_depth(depth_to_disparity(z, f, b), f, b);
    const double e = std::abs(back - z) / z;
    worst = std::max(worst, e);
    c.expect(e <= 1e-9, "depth/disparity round trip " + fmt(e));
  }
  c.note("depth<->disparity worst " + fmt(worst, 2));

  const ThinLens lens{0.035, 0.0385, 0.0004};
  lens.validate();
  std::uniform_real_distribution<double> zm(0.3, 50.0);
  worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double z = zm(rng);
    const double e = std::abs(virtual_to_metric(metric_to_virtual(z, lens), lens) - z) / z;
    worst = std::max(worst, e);
    c.expect(e <= 1e-12, "thin-lens round trip " + fmt(e));
  }
  c.note("virtual<->metric worst " + fmt(worst, 2));

  const auto rig = make_rectified_rig(300.0, 0.1, 80, 60);
  DisparityMap d(80, 60);
  std::uniform_real_distribution<double> u(2.0, 30.0);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 80; ++x)
      if ((x * y) % 5) d.set(x, y, u(rng));
  Image<float> color(80, 60, 1);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 80; ++x) color.at(x, y) = static_cast<float>(x + 100 * y);
  const auto t = triangulate(d, rig, color);
  const auto r = reproject(t.cloud, RigidTransform{}, rig.rectified_intrinsics(), 80, 60, false);
  std::size_t hits = 0;
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 80; ++x) {
      if (!r.depth.is_valid(x, y)) continue;
      ++hits;
      c.expect(r.depth.value(x, y) == t.depth.value(x, y) && r.color.at(x, y) == color.at(x, y), "reprojection changed a hit pixel");
    }
  c.expect(hits == t.depth.valid_count(), "reprojection lost pixels");
  c.note("identity reprojection exact on " + std::to_string(hits) + " pixels");
}

// ---- 8: CLI determinism ----

std::map<std::string, std::string> hash_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = file_hash(e.path().string());
  return out;
}

int shell(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

void determinism(Check& c, const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) {
    c.expect(false, "command-line tool not found at '" + cli + "'");
    return;
  }
  const fs::path root = fs::temp_directory_path() / "lfdepth_acceptance_determinism";
  const fs::path data = root / "data";
  const std::string cfg = (data / "config.txt").string();
  const std::vector<std::string> commands = {
      cli + " synth -o " + data.string() + " --seed 4 --train-scenes 64 --epochs 3 --batch-size 16",
      "LFDEPTH_OUTPUT_DIR= " + cli + " run -c " + cfg + " --set output_dir=" + (root / "run").string(),
      cli + " stereo-gt -c " + cfg + " -o " + (root / "stereo/sparse.csv").string() + " --depth " +
          (root / "stereo/depth.pfm").string(),
      cli + " eval --pred fused=" + (root / "run/depth.pfm").string() + " --gt " + (data / "truth_depth.pfm").string() +
          " --csv " + (root / "eval/table.csv").string(),
  };
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(root);
    fs::create_directories(root);
    for (const auto& cmd : commands) {
      const int rc = shell(cmd);
      c.expect(rc == 0, "exit " + std::to_string(rc) + ": " + cmd);
      if (rc != 0) return;
    }
    const auto hashes = hash_tree(root);
    if (pass == 0) {
      first = hashes;
      continue;
    }
    c.expect(hashes.size() == first.size(), "file sets differ between runs");
    for (const auto& [name, h] : hashes) {
      const auto it = first.find(name);
      c.expect(it != first.end() && it->second == h, name + " differs between runs");
    }
    c.note(std::to_string(hashes.size()) + " files bitwise identical across two runs");
  }
  fs::remove_all(root);
}

// ---- 9: public LFS release ----

void lfs(Check& c, const std::string& dir) {
  const fs::path root = dir;
  if (dir.empty() || !fs::exists(root / "manifest.txt") || !fs::exists(root / "grid.txt")) {
    c.status = Status::Skip;
    c.note(dir.empty() ? "no LFS directory configured" : "no manifest.txt and grid.txt under " + dir);
    return;
  }
  constexpr std::size_t kFullGridStacks = 8465;
  const auto grid = build_grid(load_grid_calibration((root / "grid.txt").string()));
  KeyValues kv;
  if (fs::exists(root / "config.txt")) kv = KeyValues::load((root / "config.txt").string());
  if (!kv.has("seed")) kv.set("seed", std::string("0"));
  const auto cfg = PipelineConfig::from_keyvalues(kv, root.string());
  const auto manifest = load_lfs_manifest((root / "manifest.txt").string());

  std::size_t full = 0;
  std::vector<PairedDepths> raytrix;
  for (const auto& e : manifest.entries) {
    const auto capture = ingest_lfs(e.dir, cfg.bayer);
    if (capture.plenoptic.width != grid.calibration().sensor_width ||
        capture.plenoptic.height != grid.calibration().sensor_height)
      continue;
    ++full;
    const auto stacks = extract_stacks(capture.plenoptic, grid);
    c.expect(stacks.n == kFullGridStacks, e.id + ": " + std::to_string(stacks.n) + " stacks");
    if (e.split == Split::Test && cfg.thin_lens.focal > 0.0)
      raytrix.push_back(pair_depths(virtual_to_metric(capture.virtual_depth, cfg.thin_lens), capture.stereo_depth));
  }
  c.expect(full > 0, "no capture matches the grid's sensor size");
  c.note(std::to_string(full) + " full-grid captures");

  std::vector<std::pair<std::string, MetricsReport>> rows;
  if (!raytrix.empty()) rows.emplace_back("raytrix", evaluate(raytrix, cfg.metrics_mode, cfg.bpr_threshold));
  c.expect(!rows.empty(), "nothing to report: config.txt needs thin_lens.* to convert virtual depth");
  if (rows.empty()) return;
  const auto ranked = compare_reports(rows, MetricColumn::Rmse);
  std::cout << to_text_table(ranked);
  const std::string table = to_csv(ranked);
  c.expect(std::count(table.begin(), table.end(), '\n') == static_cast<long>(rows.size()) + 1, "report shape");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<void(Check&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::string cli, lfs_dir;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc)
      only = std::atoi(argv[++i]);
    else if (cli.empty())
      cli = a;
    else
      lfs_dir = a;
  }
  const std::vector<Criterion> criteria = {
      {1, "gradients match finite differences", 60, gradients},
      {2, "theil-sen equals the brute-force oracle", 30, theil_sen},
      {3, "alignment recovers synthetic scale and shift", 60, alignment},
      {4, "network learns synthetic depth", 15 * 60, learning},
      {5, "sgm matches shifts and rendered planes", 120, sgm_oracle},
      {6, "metric invariants and fixtures", 10, metrics},
      {7, "geometry round trips", 10, geometry},
      {8, "cli reruns are bitwise identical", 0, [&](Check& c) { determinism(c, cli); }},
      {9, "lfs stacks and report", 0, [&](Check& c) { lfs(c, lfs_dir); }},
  };
  bool failed = false;
  for (const auto& cr : criteria) {
    if (only && cr.id != only) continue;
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("threw ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.status != Status::Skip && cr.budget_s > 0)
      c.expect(secs < cr.budget_s, "took " + fmt(secs) + " s, budget " + fmt(cr.budget_s) + " s");
    const char* tag = c.status == Status::Pass ? "PASS" : c.status == Status::Fail ? "FAIL" : "SKIP";
    std::cout << tag << " " << cr.id << " " << cr.name << " (" << fmt(secs, 3) << " s)";
    if (!c.detail.empty()) std::cout << ": " << c.detail;
    std::cout << "\n";
    for (const auto& f : c.failures) std::cout << "    " << f << "\n";
    std::cout << std::flush;
    failed |= c.status == Status::Fail;
  }
  return failed ? 1 : 0;
}
