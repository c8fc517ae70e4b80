#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <algorithm>

#include "doctest.h"
#include "lfdepth/error.hpp"
#include "lfdepth/plenoptic.hpp"

using namespace lfd;

namespace {

RawBayerImage constant_raw(int w, int h, std::uint16_t v, BayerPattern p) {
  return {w, h, p, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h, v)};
}

// Image whose channel c at (x, y) encodes the position.
RgbImage coordinate_image(int w, int h) {
  RgbImage img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<float>(x) / w;
      img.at(x, y, 1) = static_cast<float>(y) / h;
      img.at(x, y, 2) = 0.5f;
    }
  return img;
}

RgbImage random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  RgbImage img(w, h, 3);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

GridCalibration grid_calib(int rows, int cols, int sensor_w, int sensor_h, Pixel origin, double rot = 0.0) {
  GridCalibration c;
  c.origin = origin;
  c.pitch = 23.0;
  c.rotation = rot;
  c.rows = rows;
  c.cols = cols;
  c.sensor_width = sensor_w;
  c.sensor_height = sensor_h;
  return c;
}

// Independent oracle: a lens yields a stack iff its six lattice neighbours were kept in
// the grid and every one of the seven crop windows fits the image.
std::size_t brute_force_stack_count(const MicrolensGrid& g, int w, int h) {
  std::set<AxialCoord> present;
  for (const auto& l : g.lenses()) present.insert(l.coord);
  auto fits = [&](AxialCoord a) {
    const Pixel p = centroid(g.calibration(), a);
    const int x0 = static_cast<int>(std::floor(p.x + 0.5)) - 11, y0 = static_cast<int>(std::floor(p.y + 0.5)) - 11;
    return x0 >= 0 && y0 >= 0 && x0 + 23 <= w && y0 + 23 <= h;
  };
  const AxialCoord dirs[6] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};
  std::size_t n = 0;
  for (const auto& l : g.lenses()) {
    bool ok = fits(l.coord);
    for (const auto& d : dirs) {
      const AxialCoord nb{l.coord.q + d.q, l.coord.r + d.r};
      ok = ok && present.contains(nb) && fits(nb);
    }
    n += ok;
  }
  return n;
}

// Direct 3x3 Sobel evaluation with explicit kernels.
double brute_force_sobel_mean(const std::vector<double>& gray, int n) {
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  double sum = 0;
  for (int y = 1; y < n - 1; ++y)
    for (int x = 1; x < n - 1; ++x) {
      double gx = 0, gy = 0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          gx += kx[j + 1][i + 1] * gray[(y + j) * n + x + i];
          gy += ky[j + 1][i + 1] * gray[(y + j) * n + x + i];
        }
      sum += std::sqrt(gx * gx + gy * gy);
    }
  return sum / ((n - 2) * (n - 2));
}

FlowerStack stack_from_gray(const std::vector<double>& gray, AxialCoord key, float offset = 0.0f) {
  FlowerStack s{key, {0, 0}, std::vector<float>(21 * 23 * 23, 0.0f)};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 23 * 23; ++i) s.channels[c * 529 + i] = static_cast<float>(gray[i]) + offset;
  return s;
}

std::vector<double> step_edge(int column) {
  std::vector<double> g(23 * 23, 0.0);
  for (int y = 0; y < 23; ++y)
    for (int x = column; x < 23; ++x) g[y * 23 + x] = 1.0;
  return g;
}

}  // namespace

TEST_CASE("debayer preserves constant images for every pattern") {
  for (auto p : {BayerPattern::RGGB, BayerPattern::BGGR, BayerPattern::GRBG, BayerPattern::GBRG}) {
    const auto rgb = debayer(constant_raw(8, 6, 12345, p));
    for (float v : rgb.data()) CHECK(v == 12345.0f / 65535.0f);
  }
}

TEST_CASE("debayer of a tiled RGGB quad matches the hand-evaluated bilinear kernel") {
  const std::uint16_t r = 40000, g1 = 20000, g2 = 30001, b = 7000;
  RawBayerImage raw{12, 10, BayerPattern::RGGB, {}};
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) raw.samples.push_back((y % 2 == 0) ? (x % 2 == 0 ? r : g1) : (x % 2 == 0 ? g2 : b));
  const auto rgb = debayer(raw);
  const float green_mix = (static_cast<float>(g1) + g2) / 2.0f / 65535.0f;
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 12; ++x) {
      CHECK(rgb.at(x, y, 0) == r / 65535.0f);
      CHECK(rgb.at(x, y, 2) == b / 65535.0f);
      const bool red_site = y % 2 == 0 && x % 2 == 0, blue_site = y % 2 == 1 && x % 2 == 1;
      if (red_site || blue_site) {
        CHECK(rgb.at(x, y, 1) == green_mix);
      } else {
        CHECK(rgb.at(x, y, 1) == (y % 2 == 0 ? g1 : g2) / 65535.0f);
      }
    }
  }
}

TEST_CASE("debayer rejects odd dimensions") {
  try {
    debayer(constant_raw(3, 4, 1, BayerPattern::RGGB));
    FAIL("expected OddDimensions");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OddDimensions);
  }
}

TEST_CASE("debayer output always stays in [0, 1]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> u(0, 65535);
  for (int trial = 0; trial < 10; ++trial) {
    RawBayerImage raw{16, 14, static_cast<BayerPattern>(trial % 4), {}};
    for (int i = 0; i < 16 * 14; ++i) raw.samples.push_back(static_cast<std::uint16_t>(u(rng)));
    const auto rgb = debayer(raw);
    for (float v : rgb.data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("mosaic then debayer returns the sampled colour at each CFA site") {
  const auto img = random_image(10, 8, 5);
  const auto raw = mosaic(img, BayerPattern::GBRG);
  const auto back = debayer(raw);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) {
      const int c = bayer_color(BayerPattern::GBRG, x, y);
      CHECK(back.at(x, y, c) == doctest::Approx(img.at(x, y, c)).epsilon(1e-4));
    }
}

TEST_CASE("crop at the image center returns a 3x23x23 patch") {
  const auto img = coordinate_image(100, 100);
  CHECK(crop_microlens(img, {50, 50}).size() == 3u * 23 * 23);
}

TEST_CASE("crop near the corner is out of bounds") {
  const auto img = coordinate_image(100, 100);
  try {
    crop_microlens(img, {5, 5});
    FAIL("expected OutOfBounds");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfBounds);
  }
}

TEST_CASE("crop centers on the nearest integer pixel") {
  const auto img = coordinate_image(100, 100);
  const auto patch = crop_microlens(img, {50.4, 50.6});
  // Patch center (11, 11) comes from image pixel (50, 51).
  CHECK(patch[11 * 23 + 11] == img.at(50, 51, 0));
  CHECK(patch[529 + 11 * 23 + 11] == img.at(50, 51, 1));
}

TEST_CASE("flower stacks of interior lenses have 21 channels and the center crop first") {
  const auto calib = grid_calib(6, 6, 200, 200, {30, 30});
  const auto g = build_grid(calib);
  const auto img = random_image(200, 200, 9);
  const AxialCoord center = lattice_site(calib, 2, 2);
  const auto stack = build_flower_stack(img, g, center);
  REQUIRE(stack.has_value());
  CHECK(stack->channels.size() == static_cast<std::size_t>(kFlowerChannels) * 23 * 23);
  const auto own = crop_microlens(img, g.lens(center).center);
  CHECK(std::equal(own.begin(), own.end(), stack->channels.begin()));
  for (int k = 0; k < 6; ++k) {
    const auto nb = crop_microlens(img, g.lens(center + kHexDirections[k]).center);
    CHECK(std::equal(nb.begin(), nb.end(), stack->channels.begin() + (k + 1) * 3 * 529));
  }
}

TEST_CASE("border lenses are discarded") {
  const auto calib = grid_calib(6, 6, 200, 200, {30, 30});
  const auto g = build_grid(calib);
  const auto img = random_image(200, 200, 9);
  CHECK_FALSE(build_flower_stack(img, g, g.lenses().front().coord).has_value());
  CHECK_THROWS_AS(build_flower_stack(img, g, {99, 99}), Error);
}

TEST_CASE("full rectangular lattices keep (rows-2)(cols-2) stacks") {
  for (int rows = 3; rows <= 9; ++rows) {
    for (int cols = 3; cols <= 9; cols += 2) {
      const auto calib = grid_calib(rows, cols, 400, 400, {40, 40});
      const auto g = build_grid(calib);
      const auto img = RgbImage(400, 400, 3, 0.5f);
      const auto stacks = build_all_flower_stacks(img, g);
      CHECK(stacks.size() == static_cast<std::size_t>((rows - 2) * (cols - 2)));
      CHECK(stacks.size() == brute_force_stack_count(g, 400, 400));
    }
  }
}

TEST_CASE("stack counts match the brute-force neighbourhood oracle on clipped grids") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> origin(-15.0, 40.0), rot(-0.2, 0.2);
  for (int trial = 0; trial < 25; ++trial) {
    const auto calib = grid_calib(14, 14, 260, 240, {origin(rng), origin(rng)}, rot(rng));
    const auto g = build_grid(calib);
    const RgbImage img(260, 240, 3, 0.25f);
    const auto stacks = build_all_flower_stacks(img, g);
    CHECK(stacks.size() == brute_force_stack_count(g, 260, 240));
    CHECK(stacks.size() <= g.size());
  }
}

TEST_CASE("the 8,837-lens sensor yields stacks matching the oracle") {
  GridCalibration c = grid_calib(120, 100, 2048, 2048, {10, 10}, 0.018);
  c.pitch = 23.3;
  const auto g = build_grid(c);
  REQUIRE(g.size() == 8837);
  const RgbImage img(2048, 2048, 3, 0.5f);
  const auto stacks = build_all_flower_stacks(img, g);
  CHECK(stacks.size() == brute_force_stack_count(g, 2048, 2048));
  CHECK(stacks.size() < g.size());
}

TEST_CASE("stack construction preserves grid order") {
  const auto calib = grid_calib(8, 8, 300, 300, {30, 30}, 0.05);
  const auto g = build_grid(calib);
  const auto stacks = build_all_flower_stacks(random_image(300, 300, 2), g);
  for (std::size_t i = 1; i < stacks.size(); ++i) CHECK(g.index_of(stacks[i - 1].center) < g.index_of(stacks[i].center));
}

TEST_CASE("texture score of a constant patch is zero") {
  CHECK(texture_score(stack_from_gray(std::vector<double>(529, 0.7), {0, 0})) == 0.0);
}

TEST_CASE("texture score of a step edge matches direct Sobel evaluation") {
  const auto edge = step_edge(11);
  const double expected = brute_force_sobel_mean(edge, 23);
  CHECK(expected == doctest::Approx(2.0 * 21 * 4 / 441.0).epsilon(1e-12));
  CHECK(texture_score(stack_from_gray(edge, {0, 0})) == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("texture score ignores a constant offset") {
  const auto edge = step_edge(7);
  CHECK(texture_score(stack_from_gray(edge, {0, 0}, 0.25f)) == texture_score(stack_from_gray(edge, {0, 0})));
}

TEST_CASE("filter_sparse_depth thresholds at the extremes") {
  std::vector<FlowerStack> stacks;
  SparseDepthMap depths;
  for (int i = 0; i < 6; ++i) {
    stacks.push_back(stack_from_gray(step_edge(3 + i), {i, 0}));
    depths.entries.push_back({{i, 0}, {0, 0}, 1.0 + i});
  }
  CHECK(filter_sparse_depth(depths, stacks, 0.0) == depths);
  CHECK(filter_sparse_depth(depths, stacks, std::numeric_limits<double>::infinity()).empty());
}

TEST_CASE("filter_sparse_depth keeps exactly the textured half") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<FlowerStack> stacks;
  SparseDepthMap depths;
  double max_flat = 0, min_textured = 1e9;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> gray(529);
    const bool textured = i % 2 == 1;
    for (auto& v : gray) v = textured ? u(rng) : 0.3 + 1e-4 * u(rng);
    const double score = brute_force_sobel_mean(gray, 23);
    (textured ? min_textured : max_flat) = textured ? std::min(min_textured, score) : std::max(max_flat, score);
    stacks.push_back(stack_from_gray(gray, {i, 1}));
    depths.entries.push_back({{i, 1}, {0, 0}, 2.0});
  }
  REQUIRE(max_flat < min_textured);
  const auto kept = filter_sparse_depth(depths, stacks, 0.5 * (max_flat + min_textured));
  REQUIRE(kept.size() == 10);
  for (const auto& e : kept.entries) CHECK(e.coord.q % 2 == 1);
}

TEST_CASE("filter_sparse_depth is monotone in the threshold") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<FlowerStack> stacks;
  SparseDepthMap depths;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> gray(529);
    const double amp = u(rng);
    for (auto& v : gray) v = amp * u(rng);
    stacks.push_back(stack_from_gray(gray, {i, 0}));
    depths.entries.push_back({{i, 0}, {0, 0}, 1.0});
  }
  for (double lo = 0.0; lo < 2.0; lo += 0.1) {
    const auto a = filter_sparse_depth(depths, stacks, lo);
    const auto b = filter_sparse_depth(depths, stacks, lo + 0.15);
    CHECK(b.size() <= a.size());
    for (const auto& e : b.entries) CHECK(std::find(a.entries.begin(), a.entries.end(), e) != a.entries.end());
  }
}

TEST_CASE("filter_sparse_depth reports depths without stacks") {
  SparseDepthMap depths;
  depths.entries.push_back({{5, 5}, {0, 0}, 1.0});
  try {
    filter_sparse_depth(depths, {}, 0.0);
    FAIL("expected MismatchedKeys");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MismatchedKeys);
  }
}

TEST_CASE("stack archives round-trip bit-exactly") {
  const auto calib = grid_calib(6, 7, 220, 200, {30, 30}, 0.02);
  const auto g = build_grid(calib);
  const auto stacks = build_all_flower_stacks(random_image(220, 200, 3), g);
  auto batch = make_batch(stacks);
  for (auto& c : batch.centroids) c = {static_cast<float>(c.x), static_cast<float>(c.y)};
  const auto path = (std::filesystem::temp_directory_path() / "lfd_test_stacks.lfst").string();
  save_stack_archive(path, batch);
  const auto back = load_stack_archive(path);
  CHECK(back.n == batch.n);
  CHECK(back.values == batch.values);
  CHECK(back.coords == batch.coords);
  CHECK(back.centroids == batch.centroids);
  write_text_file(path, "LFSX garbage");
  CHECK_THROWS_AS(load_stack_archive(path), Error);
  std::filesystem::remove(path);
}
