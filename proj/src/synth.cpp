#include "lfdepth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lfdepth/error.hpp"
#include "lfdepth/random.hpp"

namespace lfd {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double lattice_value(std::uint64_t seed, std::int64_t i, std::int64_t j, int channel) {
  std::uint64_t h = splitmix(seed ^ 0x5851F42D4C957F2Dull * static_cast<std::uint64_t>(channel + 1));
  h = splitmix(h ^ static_cast<std::uint64_t>(i));
  h = splitmix(h ^ static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t seed, double x, double y, int channel) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto i = static_cast<std::int64_t>(fx), j = static_cast<std::int64_t>(fy);
  const double tx = x - fx, ty = y - fy;
  const double sx = tx * tx * (3.0 - 2.0 * tx), sy = ty * ty * (3.0 - 2.0 * ty);
  const double a = lattice_value(seed, i, j, channel), b = lattice_value(seed, i + 1, j, channel);
  const double c = lattice_value(seed, i, j + 1, channel), d = lattice_value(seed, i + 1, j + 1, channel);
  return (a + (b - a) * sx) * (1.0 - sy) + (c + (d - c) * sx) * sy;
}

Eigen::Vector3d camera_ray(const CameraIntrinsics& k, double u, double v) {
  Eigen::Vector2d n((u - k.cx) / k.fx, (v - k.cy) / k.fy);
  if (!k.distortion.is_zero()) n = k.distortion.remove(n);
  return {n.x(), n.y(), 1.0};
}

}  // namespace

std::array<float, 3> TexturedPlane::color(double x, double y) const {
  if (!textured) return {0.5f, 0.5f, 0.5f};
  x += shift_x;
  y += shift_y;
  // Luminance noise over two octaves plus a faint, slowly varying tint per channel.
  const double lum = 0.65 * value_noise(seed, x / cell, y / cell, 0) + 0.35 * value_noise(seed + 1, 2.0 * x / cell, 2.0 * y / cell, 0);
  std::array<float, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double tint = 0.9 + 0.2 * value_noise(seed + 2, x / (4.0 * cell), y / (4.0 * cell), c);
    out[c] = static_cast<float>(0.1 + 0.8 * lum * tint);
  }
  return out;
}

void SyntheticScene::validate() const {
  if (planes.empty()) throw Error(ErrorKind::InvalidArgument, "scene has no planes");
  for (const auto& p : planes) {
    if (!(p.depth > 0.0) || !std::isfinite(p.depth)) throw Error(ErrorKind::InvalidArgument, "plane depths must be positive");
    if (!(p.cell > 0.0)) throw Error(ErrorKind::InvalidArgument, "texture cell must be positive");
    if (!(p.x0 < p.x1) || !(p.y0 < p.y1)) throw Error(ErrorKind::InvalidArgument, "plane extent is empty");
  }
  if (!(optics.focal_px > 0.0) || !(optics.baseline > 0.0))
    throw Error(ErrorKind::InvalidArgument, "microlens focal length and baseline must be positive");
}

std::optional<RayHit> trace(const SyntheticScene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction) {
  std::optional<RayHit> best;
  if (direction.z() == 0.0) return best;
  for (std::size_t i = 0; i < scene.planes.size(); ++i) {
    const auto& p = scene.planes[i];
    const double s = (p.depth - origin.z()) / direction.z();
    if (!(s > 0.0) || (best && !(s < best->distance))) continue;
    const Eigen::Vector3d x = origin + s * direction;
    if (x.x() < p.x0 || x.x() > p.x1 || x.y() < p.y0 || x.y() > p.y1) continue;
    best = RayHit{s, x, i};
  }
  return best;
}

RenderedView render_view(const SyntheticScene& scene, const CameraIntrinsics& camera, const RigidTransform& camera_from_world) {
  scene.validate();
  camera.validate();
  const int w = camera.width, h = camera.height;
  const RigidTransform world_from_camera = camera_from_world.inverse();
  RenderedView out{RgbImage(w, h, 3), DepthMap(w, h)};
#pragma omp parallel for schedule(static)
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const auto hit = trace(scene, world_from_camera.translation, world_from_camera.rotation * camera_ray(camera, u, v));
      if (!hit) continue;
      const auto c = scene.planes[hit->plane].color(hit->point.x(), hit->point.y());
      for (int k = 0; k < 3; ++k) out.rgb.at(u, v, k) = c[k];
      out.depth.set(u, v, camera_from_world.apply(hit->point).z());
    }
  return out;
}

StereoRender render_stereo(const SyntheticScene& scene) {
  const auto left = render_view(scene, scene.rig.left, RigidTransform{});
  const auto right = render_view(scene, scene.rig.right, scene.rig.right_from_left);
  return {left.rgb, right.rgb, mosaic(left.rgb, scene.pattern), mosaic(right.rgb, scene.pattern), left.depth};
}

PlenopticRender render_plenoptic(const SyntheticScene& scene, const MicrolensGrid& grid) {
  scene.validate();
  const auto& calib = grid.calibration();
  const int w = calib.sensor_width, h = calib.sensor_height;
  const double radius = calib.pitch / 2.0;
  const double mid_x = (w - 1) / 2.0, mid_y = (h - 1) / 2.0;
  const RigidTransform world_from_plenoptic = scene.rig.plenoptic_from_left.inverse();
  const double f = scene.optics.focal_px, scale = scene.optics.baseline / calib.pitch;
  const auto& lenses = grid.lenses();

  PlenopticRender out{RgbImage(w, h, 3), {}, {}};
  out.depth.source = DepthSource::Synthetic;
  std::vector<double> centre_depth(lenses.size(), 0.0);
  // Discs of radius pitch/2 around centroids a pitch apart never share a pixel, so lenses write disjointly.
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < lenses.size(); ++i) {
    const Pixel c = lenses[i].center;
    const Eigen::Vector3d pinhole((c.x - mid_x) * scale, (c.y - mid_y) * scale, 0.0);
    const Eigen::Vector3d origin = world_from_plenoptic.apply(pinhole);
    if (const auto hit = trace(scene, origin, world_from_plenoptic.rotation * Eigen::Vector3d::UnitZ()))
      centre_depth[i] = scene.rig.plenoptic_from_left.apply(hit->point).z();
    const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - radius))), x1 = std::min(w - 1, static_cast<int>(c.x + radius));
    const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - radius))), y1 = std::min(h - 1, static_cast<int>(c.y + radius));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - c.x, dy = y - c.y;
        if (dx * dx + dy * dy >= radius * radius) continue;
        const Eigen::Vector3d dir(dx / f, dy / f, 1.0);
        const auto hit = trace(scene, origin, world_from_plenoptic.rotation * dir);
        if (!hit) continue;
        const auto col = scene.planes[hit->plane].color(hit->point.x(), hit->point.y());
        for (int k = 0; k < 3; ++k) out.rgb.at(x, y, k) = col[k];
      }
  }
  for (std::size_t i = 0; i < lenses.size(); ++i)
    if (centre_depth[i] > 0.0) out.depth.entries.push_back({lenses[i].coord, lenses[i].center, centre_depth[i]});
  out.raw = mosaic(out.rgb, scene.pattern);
  return out;
}

DisparityMap render_relative_disparity(const SyntheticScene& scene, double m, double b, int width, int height) {
  if (m == 0.0 || !std::isfinite(m) || !std::isfinite(b)) throw Error(ErrorKind::InvalidArgument, "relative scale m must be non-zero");
  if (!scene.rig.is_rectified()) throw Error(ErrorKind::DegenerateGeometry, "scene rig has no rectified focal length");
  CameraIntrinsics cam = scene.rig.plenoptic;
  cam.width = width;
  cam.height = height;
  const auto view = render_view(scene, cam, scene.rig.plenoptic_from_left);
  const double fb = scene.rig.rectified_focal * scene.rig.baseline;
  DisparityMap out(width, height, DisparityFrame::Relative);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (view.depth.valid[i]) {
      out.values[i] = (fb / view.depth.values[i] - b) / m;
      out.valid[i] = 1;
    }
  return out;
}

SparseDepthMap centroid_depths(const SyntheticScene& scene, const MicrolensGrid& grid) {
  scene.validate();
  const RigidTransform world_from_plenoptic = scene.rig.plenoptic_from_left.inverse();
  SparseDepthMap out;
  out.source = DepthSource::Synthetic;
  for (const Lens& lens : grid.lenses()) {
    const Eigen::Vector3d dir = world_from_plenoptic.rotation * camera_ray(scene.rig.plenoptic, lens.center.x, lens.center.y);
    if (const auto hit = trace(scene, world_from_plenoptic.translation, dir))
      out.entries.push_back({lens.coord, lens.center, scene.rig.plenoptic_from_left.apply(hit->point).z()});
  }
  return out;
}

SyntheticScene single_plane_scene(double depth, std::uint64_t seed, const StereoRig& rig) {
  SyntheticScene s;
  s.planes.push_back({depth, seed});
  s.rig = rig;
  return s;
}

}  // namespace lfd

namespace lfd {

void TrainingScenes::validate() const {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "need at least one training scene");
  if (!(min_depth > 0.0) || !(max_depth >= min_depth) || !std::isfinite(max_depth))
    throw Error(ErrorKind::InvalidArgument, "training depth range must satisfy 0 < min <= max");
  if (!(texture_cell > 0.0)) throw Error(ErrorKind::InvalidArgument, "texture cell must be positive");
  if (!(pitch > 0.0)) throw Error(ErrorKind::InvalidArgument, "pitch must be positive");
}

std::vector<TrainingCapture> training_captures(const TrainingScenes& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::vector<TrainingCapture> out;
  out.reserve(cfg.count);
  const double inv_near = 1.0 / cfg.min_depth, inv_far = 1.0 / cfg.max_depth;
  for (int i = 0; i < cfg.count; ++i) {
    const double z = 1.0 / (inv_near + uniform01(rng) * (inv_far - inv_near));
    const double px = uniform01(rng), py = uniform01(rng);
    TrainingCapture c{{}, single_flower_grid(cfg.pitch, {px, py})};
    c.scene = single_plane_scene(z, rng(), make_rectified_rig(300.0, 0.1, c.grid.sensor_width, c.grid.sensor_height));
    auto& plane = c.scene.planes[0];
    plane.cell = cfg.texture_cell;
    plane.shift_x = 64.0 * cfg.texture_cell * uniform01(rng);
    plane.shift_y = 64.0 * cfg.texture_cell * uniform01(rng);
    c.scene.optics = cfg.optics;
    out.push_back(std::move(c));
  }
  return out;
}

GridCalibration single_flower_grid(double pitch, Pixel phase) {
  GridCalibration c;
  c.pitch = pitch;
  c.origin = {pitch + phase.x, pitch + phase.y};
  c.rows = 5;
  c.cols = 5;
  double max_x = 0.0, max_y = 0.0;
  for (int r = 0; r < c.rows; ++r)
    for (int q = 0; q < c.cols; ++q) {
      const Pixel p = centroid(c, lattice_site(c, r, q));
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
    }
  // Room for a crop around every lens, rounded up to even sizes for the Bayer mosaic.
  const int half = kFlowerCropSize / 2 + 1;
  c.sensor_width = (static_cast<int>(std::ceil(max_x)) + half + 1) / 2 * 2;
  c.sensor_height = (static_cast<int>(std::ceil(max_y)) + half + 1) / 2 * 2;
  return c;
}

AxialCoord single_flower_lens(const GridCalibration& calib) { return lattice_site(calib, calib.rows / 2, calib.cols / 2); }

SparseDepthMap single_flower_truth(const SparseDepthMap& depths, const GridCalibration& calib) {
  const AxialCoord lens = single_flower_lens(calib);
  SparseDepthMap out;
  out.source = depths.source;
  for (const auto& e : depths.entries)
    if (e.coord == lens) out.entries.push_back(e);
  return out;
}

}  // namespace lfd
