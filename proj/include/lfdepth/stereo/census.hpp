#pragma once

#include <cstdint>
#include <vector>

#include "lfdepth/image.hpp"

namespace lfd {

inline constexpr int kCensusRadius = 2;
inline constexpr int kCensusBits = (2 * kCensusRadius + 1) * (2 * kCensusRadius + 1) - 1;

/// 5x5 census: bit k is set when neighbour k (row-major, centre skipped) is darker than the centre.
/// Neighbours outside the image are clamped to the border.
std::vector<std::uint32_t> census_transform(const GrayImage& img);
std::vector<std::uint32_t> census_transform_serial(const GrayImage& img);

/// Number of 5x5 neighbours whose intensity differs from the centre by more than `tolerance`.
std::vector<std::uint8_t> texture_population(const GrayImage& img, float tolerance);

struct DisparityRange {
  int min = 0;
  int max = 64;  // inclusive
  int count() const { return max - min + 1; }
  void validate() const;  // throws InvalidRange when min >= max
};

/// Hamming matching cost C(p, d) between left census at (x, y) and right census at (x - d, y).
/// Pairs whose right pixel falls outside the image get the rounded mean of that pixel's in-image
/// costs, or the maximum when no disparity lands inside.
struct CostVolume {
  int width = 0;
  int height = 0;
  DisparityRange range;
  std::vector<std::uint16_t> cost;  // [(y * width + x) * range.count() + (d - range.min)]

  std::size_t index(int x, int y, int d) const {
    return (static_cast<std::size_t>(y) * width + x) * range.count() + (d - range.min);
  }
  std::uint16_t at(int x, int y, int d) const { return cost[index(x, y, d)]; }
};

CostVolume census_cost_volume(const std::vector<std::uint32_t>& left, const std::vector<std::uint32_t>& right, int width,
                              int height, DisparityRange range);

}  // namespace lfd
