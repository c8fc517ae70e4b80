#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lfd {

struct Pixel {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Pixel&) const = default;
};

/// Planar multi-channel image; channel c of pixel (x, y) lives at (c * height + y) * width + x.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int x, int y, int c = 0) { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
  const T& at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<T> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const T> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using GrayImage = Image<float>;
/// Three planar channels of normalized floats in [0, 1].
using RgbImage = Image<float>;

/// Scalar field with a per-pixel validity mask.
struct ScalarMap {
  ScalarMap() = default;
  ScalarMap(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0),
                            valid(static_cast<std::size_t>(w) * h, 0) {}

  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  double value(int x, int y) const { return values[index(x, y)]; }
  void set(int x, int y, double v) {
    values[index(x, y)] = v;
    valid[index(x, y)] = 1;
  }
  void invalidate(int x, int y) {
    values[index(x, y)] = 0.0;
    valid[index(x, y)] = 0;
  }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v != 0;
    return n;
  }

  bool operator==(const ScalarMap&) const = default;
};

/// Per-pixel metric depth in meters.
struct DepthMap : ScalarMap {
  using ScalarMap::ScalarMap;
};

enum class DisparityFrame { Relative, Metric };

/// Per-pixel disparity in pixels. Relative-frame maps live in an arbitrary affine frame.
struct DisparityMap : ScalarMap {
  DisparityMap() = default;
  DisparityMap(int w, int h, DisparityFrame f = DisparityFrame::Metric) : ScalarMap(w, h), frame(f) {}
  DisparityFrame frame = DisparityFrame::Metric;
};

inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace lfd
