#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lfdepth/image.hpp"
#include "lfdepth/stereo/census.hpp"

namespace lfd {

/// Scanline directions (dx, dy) in the fixed summation order.
inline constexpr std::array<std::array<int, 2>, 8> kSgmPaths{{
    {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1}}};

struct SgmParams {
  DisparityRange range;
  int p1 = 8;   // census units, |delta d| = 1
  int p2 = 32;  // census units, |delta d| > 1
  int paths = 8;
  double uniqueness = 0.05;  // best must beat the runner-up (|delta d| > 1) by this fraction
  bool subpixel = true;
  double lr_threshold = 1.0;
  void validate() const;  // InvalidRange, InvalidArgument
};

/// L_r for one path over the whole volume, straight from the recursion.
std::vector<std::uint16_t> sgm_path_cost(const CostVolume& cost, int path, int p1, int p2);

/// Sum of L_r over the first `paths` directions.
std::vector<std::uint32_t> sgm_aggregate(const CostVolume& cost, const SgmParams& params);
std::vector<std::uint32_t> sgm_aggregate_serial(const CostVolume& cost, const SgmParams& params);

struct SgmResult {
  DisparityMap left;   // after the left-right check
  DisparityMap right;
  DisparityMap left_raw;  // winner-take-all with uniqueness, before the left-right check
};

/// Winner-take-all over aggregated costs for both views, subpixel refinement, left-right check.
SgmResult select_disparities(const std::vector<std::uint32_t>& aggregated, const CostVolume& cost, const SgmParams& params);

/// Census, cost volume, aggregation and disparity selection. Throws ShapeMismatch for unequal sizes.
SgmResult sgm(const GrayImage& left, const GrayImage& right, const SgmParams& params);

struct RegularizeParams {
  int speckle_size = 50;          // components smaller than this are removed
  double speckle_max_diff = 1.0;  // neighbours within this disparity step are connected
  float texture_tolerance = 0.01f;
  int min_texture = 4;  // neighbours out of 24 that must differ from the centre
};

/// Speckle removal followed by the low-texture filter; `image` is the left rectified view.
DisparityMap remove_speckles(const DisparityMap& disp, int max_size, double max_diff);
DisparityMap regularize(const DisparityMap& disp, const GrayImage& image, const RegularizeParams& params = {});

}  // namespace lfd
