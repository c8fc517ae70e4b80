#include "lfdepth/stereo/census.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "lfdepth/error.hpp"

namespace lfd {

void DisparityRange::validate() const {
  if (min >= max) {
    throw Error(ErrorKind::InvalidRange,
                "disparity range [" + std::to_string(min) + ", " + std::to_string(max) + "] is empty");
  }
}

namespace {

std::uint32_t census_at(const GrayImage& img, int x, int y) {
  const int w = img.width(), h = img.height();
  const float c = img.at(x, y);
  std::uint32_t bits = 0;
  int k = 0;
  for (int dy = -kCensusRadius; dy <= kCensusRadius; ++dy) {
    const int yy = std::clamp(y + dy, 0, h - 1);
    for (int dx = -kCensusRadius; dx <= kCensusRadius; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int xx = std::clamp(x + dx, 0, w - 1);
      if (img.at(xx, yy) < c) bits |= 1u << k;
      ++k;
    }
  }
  return bits;
}

}  // namespace

std::vector<std::uint32_t> census_transform(const GrayImage& img) {
  const int w = img.width(), h = img.height();
  std::vector<std::uint32_t> out(img.plane_size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(y) * w + x] = census_at(img, x, y);
  return out;
}

std::vector<std::uint32_t> census_transform_serial(const GrayImage& img) {
  std::vector<std::uint32_t> out;
  out.reserve(img.plane_size());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.push_back(census_at(img, x, y));
  return out;
}

std::vector<std::uint8_t> texture_population(const GrayImage& img, float tolerance) {
  const int w = img.width(), h = img.height();
  std::vector<std::uint8_t> out(img.plane_size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float c = img.at(x, y);
      int n = 0;
      for (int dy = -kCensusRadius; dy <= kCensusRadius; ++dy)
        for (int dx = -kCensusRadius; dx <= kCensusRadius; ++dx) {
          const float v = img.at(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
          n += std::abs(v - c) > tolerance;
        }
      out[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint8_t>(n);
    }
  return out;
}

CostVolume census_cost_volume(const std::vector<std::uint32_t>& left, const std::vector<std::uint32_t>& right, int width,
                              int height, DisparityRange range) {
  range.validate();
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (left.size() != n || right.size() != n) throw Error(ErrorKind::ShapeMismatch, "census images differ in size");
  CostVolume v{width, height, range, std::vector<std::uint16_t>(n * range.count())};
  const int nd = range.count();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      std::uint16_t* c = &v.cost[p * nd];
      int sum = 0, inside = 0;
      for (int i = 0; i < nd; ++i) {
        const int xr = x - (range.min + i);
        if (xr < 0 || xr >= width) continue;
        c[i] = static_cast<std::uint16_t>(std::popcount(left[p] ^ right[p - x + xr]));
        sum += c[i];
        ++inside;
      }
      // A saturated cost here would leak a preference for in-image disparities along the paths.
      const auto neutral = static_cast<std::uint16_t>(inside ? (sum + inside / 2) / inside : kCensusBits);
      for (int i = 0; i < nd; ++i) {
        const int xr = x - (range.min + i);
        if (xr < 0 || xr >= width) c[i] = neutral;
      }
    }
  return v;
}

}  // namespace lfd
