#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lfdepth/hexgrid.hpp"
#include "lfdepth/image.hpp"
#include "lfdepth/io.hpp"
#include "lfdepth/sparse.hpp"

namespace lfd {

enum class BayerPattern { RGGB, BGGR, GRBG, GBRG };

BayerPattern parse_bayer_pattern(const std::string& name);
std::string to_string(BayerPattern p);
/// Colour index (0 R, 1 G, 2 B) sampled at (x, y).
int bayer_color(BayerPattern p, int x, int y);

struct RawBayerImage {
  int width = 0;
  int height = 0;
  BayerPattern pattern = BayerPattern::RGGB;
  std::vector<std::uint16_t> samples;
};

RawBayerImage to_raw(const Gray16& img, BayerPattern pattern);
Gray16 to_gray16(const RawBayerImage& raw);

/// Bilinear demosaic, normalized by 65535. Borders mirror without repeating the edge
/// sample, which keeps the CFA phase intact. Throws OddDimensions.
RgbImage debayer(const RawBayerImage& raw);

/// Inverse of debayer for synthetic data: samples the CFA colour of each pixel.
RawBayerImage mosaic(const RgbImage& rgb, BayerPattern pattern);

/// Channel mean.
GrayImage to_gray(const RgbImage& rgb);

inline constexpr int kFlowerCropSize = 23;
inline constexpr int kFlowerLenses = 7;
inline constexpr int kFlowerChannels = 3 * kFlowerLenses;

/// 3 x size x size window centered at the rounded centroid. Throws OutOfBounds.
std::vector<float> crop_microlens(const RgbImage& img, Pixel centroid, int size = kFlowerCropSize);

/// Central lens plus its ring-1 neighbours, 21 x 23 x 23, planar.
struct FlowerStack {
  AxialCoord center;
  Pixel centroid;
  std::vector<float> channels;
};

/// Returns nullopt (discard) if a neighbour is missing or any crop leaves the image.
/// Throws UnknownLens if `a` is not in the grid.
std::optional<FlowerStack> build_flower_stack(const RgbImage& img, const MicrolensGrid& grid, AxialCoord a);

/// Stacks for every lens in grid order, skipping discarded ones. OpenMP over lenses.
std::vector<FlowerStack> build_all_flower_stacks(const RgbImage& img, const MicrolensGrid& grid);

/// Mean Sobel magnitude over the interior of the grayscale central crop.
double texture_score(const FlowerStack& stack);

inline constexpr double kDefaultTextureThreshold = 0.01;

/// Keeps the samples whose stack scores >= threshold. Throws MismatchedKeys.
SparseDepthMap filter_sparse_depth(const SparseDepthMap& depths, const std::vector<FlowerStack>& stacks,
                                   double threshold);

/// N x 21 x 23 x 23 values plus per-item keys.
struct FlowerStackBatch {
  int n = 0;
  int channels = kFlowerChannels;
  int height = kFlowerCropSize;
  int width = kFlowerCropSize;
  std::vector<float> values;
  std::vector<AxialCoord> coords;
  std::vector<Pixel> centroids;

  std::size_t item_size() const { return static_cast<std::size_t>(channels) * height * width; }
};

FlowerStackBatch make_batch(const std::vector<FlowerStack>& stacks);
std::vector<FlowerStack> split_batch(const FlowerStackBatch& batch);

/// "LFST" archive: header {magic, version, N, C, H, W} (u32 LE), N*C*H*W f32 LE values,
/// then N records of (q i32, r i32, cx f32, cy f32).
void save_stack_archive(const std::string& path, const FlowerStackBatch& batch);
FlowerStackBatch load_stack_archive(const std::string& path);

}  // namespace lfd
