#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lfdepth/image.hpp"

namespace lfd {

/// Axial hex coordinate. Row r is one interlaced row of the lattice.
struct AxialCoord {
  int q = 0;
  int r = 0;
  auto operator<=>(const AxialCoord&) const = default;
  AxialCoord operator+(const AxialCoord& o) const { return {q + o.q, r + o.r}; }
};

struct AxialHash {
  std::size_t operator()(const AxialCoord& a) const noexcept {
    return std::hash<std::int64_t>{}((static_cast<std::int64_t>(a.q) << 32) ^ static_cast<std::uint32_t>(a.r));
  }
};

int hex_distance(AxialCoord a, AxialCoord b);

enum class LatticeOrientation { PointyTop, FlatTop };

struct GridCalibration {
  Pixel origin;
  double pitch = 23.0;
  double rotation = 0.0;
  int rows = 1;
  int cols = 1;
  int sensor_width = 1;
  int sensor_height = 1;
  LatticeOrientation orientation = LatticeOrientation::PointyTop;

  /// Throws InvalidArgument unless pitch > 0, rows/cols >= 1 and the sensor is non-empty.
  void validate() const;
};

GridCalibration load_grid_calibration(const std::string& path);
void save_grid_calibration(const std::string& path, const GridCalibration& calib);

/// Centroid of lens `a`: origin + R(rotation) * pitch * lattice_offset(a).
Pixel centroid(const GridCalibration& calib, AxialCoord a);

/// Axial coordinate of the lattice site at (row, col) of the rows x cols enumeration.
AxialCoord lattice_site(const GridCalibration& calib, int row, int col);

/// Ring-1 directions, counter-clockwise starting east.
inline constexpr std::array<AxialCoord, 6> kHexDirections{
    AxialCoord{+1, 0}, AxialCoord{+1, -1}, AxialCoord{0, -1},
    AxialCoord{-1, 0}, AxialCoord{-1, +1}, AxialCoord{0, +1}};

struct Lens {
  AxialCoord coord;
  Pixel center;
  bool operator==(const Lens&) const = default;
};

/// Immutable microlens lattice restricted to the sensor.
class MicrolensGrid {
 public:
  MicrolensGrid(GridCalibration calib, std::vector<Lens> lenses);

  const GridCalibration& calibration() const noexcept { return calib_; }
  const std::vector<Lens>& lenses() const noexcept { return lenses_; }
  std::size_t size() const noexcept { return lenses_.size(); }

  bool contains(AxialCoord a) const { return index_.contains(a); }
  /// Index of `a` in lenses(); throws UnknownLens.
  std::size_t index_of(AxialCoord a) const;
  std::optional<std::size_t> find(AxialCoord a) const;
  const Lens& lens(AxialCoord a) const { return lenses_[index_of(a)]; }

  /// Lens whose centroid is nearest to `p`, if any lens exists within one pitch.
  std::optional<std::size_t> nearest(Pixel p) const;

 private:
  GridCalibration calib_;
  std::vector<Lens> lenses_;
  std::unordered_map<AxialCoord, std::size_t, AxialHash> index_;
};

/// Enumerates the lattice row-major. With `crop_size` set, a lens survives only if the
/// crop_size x crop_size window around its rounded centroid fits the sensor; otherwise
/// its centroid must lie inside the sensor. Throws EmptyGrid when nothing survives.
MicrolensGrid build_grid(const GridCalibration& calib, std::optional<int> crop_size = std::nullopt);

/// Coordinates at hex distance `ring` from `a` that exist in the grid, walking
/// counter-clockwise from the east corner.
std::vector<AxialCoord> ring_neighbors(const MicrolensGrid& grid, AxialCoord a, int ring);

/// The full 6*ring hex ring around `a`, without grid filtering.
std::vector<AxialCoord> hex_ring(AxialCoord a, int ring);

}  // namespace lfd
