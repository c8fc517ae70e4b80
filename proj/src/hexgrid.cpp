#include "lfdepth/hexgrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "lfdepth/error.hpp"
#include "lfdepth/keyvalue.hpp"

namespace lfd {

namespace {

constexpr double kSqrt3Half = 0.86602540378443864676;

int floor_div2(int v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

// Lattice offset of `a` in units of pitch, before rotation.
Pixel lattice_offset(LatticeOrientation o, AxialCoord a) {
  if (o == LatticeOrientation::PointyTop) return {a.q + 0.5 * a.r, kSqrt3Half * a.r};
  return {kSqrt3Half * a.q, a.r + 0.5 * a.q};
}

AxialCoord cube_round(double qf, double rf) {
  const double sf = -qf - rf;
  double q = std::round(qf), r = std::round(rf), s = std::round(sf);
  const double dq = std::abs(q - qf), dr = std::abs(r - rf), ds = std::abs(s - sf);
  if (dq > dr && dq > ds) {
    q = -r - s;
  } else if (dr > ds) {
    r = -q - s;
  }
  return {static_cast<int>(q), static_cast<int>(r)};
}

}  // namespace

int hex_distance(AxialCoord a, AxialCoord b) {
  const int dq = a.q - b.q, dr = a.r - b.r;
  return std::max({std::abs(dq), std::abs(dr), std::abs(dq + dr)});
}

void GridCalibration::validate() const {
  if (!(pitch > 0.0) || !std::isfinite(pitch)) throw Error(ErrorKind::InvalidArgument, "pitch must be > 0");
  if (rows < 1 || cols < 1) throw Error(ErrorKind::InvalidArgument, "rows and cols must be >= 1");
  if (sensor_width < 1 || sensor_height < 1) throw Error(ErrorKind::InvalidArgument, "sensor must be non-empty");
  if (!std::isfinite(rotation) || !std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw Error(ErrorKind::InvalidArgument, "non-finite calibration value");
  }
}

GridCalibration load_grid_calibration(const std::string& path) {
  const auto kv = KeyValues::load(path);
  GridCalibration c;
  c.origin = {kv.get_double("origin_x"), kv.get_double("origin_y")};
  c.pitch = kv.get_double("pitch_px");
  c.rotation = kv.get_double("rotation_rad");
  c.rows = kv.get_int("rows");
  c.cols = kv.get_int("cols");
  c.sensor_width = kv.get_int("sensor_w");
  c.sensor_height = kv.get_int("sensor_h");
  const auto orient = kv.get_string("orientation", "pointy");
  if (orient == "pointy") {
    c.orientation = LatticeOrientation::PointyTop;
  } else if (orient == "flat") {
    c.orientation = LatticeOrientation::FlatTop;
  } else {
    throw Error(ErrorKind::FormatError, path + ": orientation must be 'pointy' or 'flat'");
  }
  c.validate();
  return c;
}

void save_grid_calibration(const std::string& path, const GridCalibration& c) {
  KeyValues kv;
  kv.set("origin_x", c.origin.x);
  kv.set("origin_y", c.origin.y);
  kv.set("pitch_px", c.pitch);
  kv.set("rotation_rad", c.rotation);
  kv.set("rows", c.rows);
  kv.set("cols", c.cols);
  kv.set("sensor_w", c.sensor_width);
  kv.set("sensor_h", c.sensor_height);
  kv.set("orientation", c.orientation == LatticeOrientation::PointyTop ? "pointy" : "flat");
  kv.save(path);
}

Pixel centroid(const GridCalibration& calib, AxialCoord a) {
  const Pixel off = lattice_offset(calib.orientation, a);
  const double c = std::cos(calib.rotation), s = std::sin(calib.rotation);
  return {calib.origin.x + calib.pitch * (c * off.x - s * off.y),
          calib.origin.y + calib.pitch * (s * off.x + c * off.y)};
}

AxialCoord lattice_site(const GridCalibration& calib, int row, int col) {
  if (calib.orientation == LatticeOrientation::PointyTop) return {col - floor_div2(row), row};
  return {col, row - floor_div2(col)};
}

MicrolensGrid::MicrolensGrid(GridCalibration calib, std::vector<Lens> lenses)
    : calib_(calib), lenses_(std::move(lenses)) {
  index_.reserve(lenses_.size());
  for (std::size_t i = 0; i < lenses_.size(); ++i) {
    if (!index_.emplace(lenses_[i].coord, i).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate axial coordinate in grid");
    }
  }
}

std::optional<std::size_t> MicrolensGrid::find(AxialCoord a) const {
  auto it = index_.find(a);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t MicrolensGrid::index_of(AxialCoord a) const {
  auto i = find(a);
  if (!i) throw Error(ErrorKind::UnknownLens, "(" + std::to_string(a.q) + "," + std::to_string(a.r) + ")");
  return *i;
}

std::optional<std::size_t> MicrolensGrid::nearest(Pixel p) const {
  const double c = std::cos(calib_.rotation), s = std::sin(calib_.rotation);
  const double dx = (p.x - calib_.origin.x) / calib_.pitch, dy = (p.y - calib_.origin.y) / calib_.pitch;
  const double lx = c * dx + s * dy, ly = -s * dx + c * dy;
  double qf = 0, rf = 0;
  if (calib_.orientation == LatticeOrientation::PointyTop) {
    rf = ly / kSqrt3Half;
    qf = lx - 0.5 * rf;
  } else {
    qf = lx / kSqrt3Half;
    rf = ly - 0.5 * qf;
  }
  const AxialCoord guess = cube_round(qf, rf);
  std::optional<std::size_t> best;
  double best_d2 = calib_.pitch * calib_.pitch;
  auto consider = [&](AxialCoord a) {
    auto idx = find(a);
    if (!idx) return;
    const Pixel ctr = lenses_[*idx].center;
    const double d2 = (ctr.x - p.x) * (ctr.x - p.x) + (ctr.y - p.y) * (ctr.y - p.y);
    if (d2 < best_d2 || (d2 == best_d2 && best && *idx < *best)) {
      best_d2 = d2;
      best = idx;
    }
  };
  consider(guess);
  for (const auto& d : kHexDirections) consider(guess + d);
  return best;
}

MicrolensGrid build_grid(const GridCalibration& calib, std::optional<int> crop_size) {
  calib.validate();
  std::vector<Lens> lenses;
  for (int row = 0; row < calib.rows; ++row) {
    for (int col = 0; col < calib.cols; ++col) {
      const AxialCoord a = lattice_site(calib, row, col);
      const Pixel p = centroid(calib, a);
      bool keep = false;
      if (crop_size) {
        const int x0 = round_half_up(p.x) - *crop_size / 2;
        const int y0 = round_half_up(p.y) - *crop_size / 2;
        keep = x0 >= 0 && y0 >= 0 && x0 + *crop_size <= calib.sensor_width &&
               y0 + *crop_size <= calib.sensor_height;
      } else {
        keep = p.x >= 0.0 && p.y >= 0.0 && p.x < calib.sensor_width && p.y < calib.sensor_height;
      }
      if (keep) lenses.push_back({a, p});
    }
  }
  if (lenses.empty()) throw Error(ErrorKind::EmptyGrid, "no microlens inside the sensor");
  return MicrolensGrid(calib, std::move(lenses));
}

std::vector<AxialCoord> hex_ring(AxialCoord a, int ring) {
  if (ring < 1) throw Error(ErrorKind::InvalidArgument, "ring must be >= 1");
  std::vector<AxialCoord> out;
  out.reserve(6 * static_cast<std::size_t>(ring));
  AxialCoord cur{a.q + kHexDirections[0].q * ring, a.r + kHexDirections[0].r * ring};
  for (int side = 0; side < 6; ++side) {
    const AxialCoord step = kHexDirections[(side + 2) % 6];
    for (int k = 0; k < ring; ++k) {
      out.push_back(cur);
      cur = cur + step;
    }
  }
  return out;
}

std::vector<AxialCoord> ring_neighbors(const MicrolensGrid& grid, AxialCoord a, int ring) {
  if (!grid.contains(a)) grid.index_of(a);
  std::vector<AxialCoord> out;
  for (const auto& c : hex_ring(a, ring)) {
    if (grid.contains(c)) out.push_back(c);
  }
  return out;
}

}  // namespace lfd
