#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "lfdepth/camera.hpp"
#include "lfdepth/hexgrid.hpp"
#include "lfdepth/image.hpp"
#include "lfdepth/plenoptic.hpp"
#include "lfdepth/sparse.hpp"

namespace lfd {

/// Fronto-parallel plane Z = depth in the left camera frame, bounded by [x0, x1] x [y0, y1] metres.
struct TexturedPlane {
  double depth = 1.0;
  std::uint64_t seed = 0;
  double x0 = -std::numeric_limits<double>::infinity();
  double x1 = std::numeric_limits<double>::infinity();
  double y0 = -std::numeric_limits<double>::infinity();
  double y1 = std::numeric_limits<double>::infinity();
  double cell = 0.02;  // value-noise lattice spacing, metres
  double shift_x = 0.0;  // texture translation in plane coordinates, metres
  double shift_y = 0.0;
  bool textured = true;

  /// RGB value-noise at plane coordinates (x, y); constant grey when untextured.
  std::array<float, 3> color(double x, double y) const;
};

/// Each microlens is a pinhole at its centroid; neighbouring pinholes sit `baseline` metres apart.
struct MicrolensOptics {
  double focal_px = 30.0;
  double baseline = 0.1;
};

struct SyntheticScene {
  std::vector<TexturedPlane> planes;
  MicrolensOptics optics;
  StereoRig rig;  // world frame = left camera frame; plenoptic pose in rig.plenoptic_from_left
  BayerPattern pattern = BayerPattern::RGGB;

  void validate() const;  // throws InvalidArgument
};

struct RayHit {
  double distance = 0.0;  // along the ray direction
  Eigen::Vector3d point;
  std::size_t plane = 0;
};

/// Nearest plane hit in front of `origin`, if any.
std::optional<RayHit> trace(const SyntheticScene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction);

struct RenderedView {
  RgbImage rgb;
  DepthMap depth;  // camera-frame z
};

/// Pinhole render through `camera` (distortion included) posed at camera_from_world.
RenderedView render_view(const SyntheticScene& scene, const CameraIntrinsics& camera, const RigidTransform& camera_from_world);

struct StereoRender {
  RgbImage left_rgb, right_rgb;
  RawBayerImage left, right;
  DepthMap depth;  // left frame
};

StereoRender render_stereo(const SyntheticScene& scene);

struct PlenopticRender {
  RgbImage rgb;
  RawBayerImage raw;
  SparseDepthMap depth;  // exact depth along each centroid ray, plenoptic frame
};

/// Renders every lens disc of radius pitch / 2 through its own pinhole; pixels between discs stay black.
PlenopticRender render_plenoptic(const SyntheticScene& scene, const MicrolensGrid& grid);

/// Dense x = (f B / z - b) / m on the plenoptic camera (resized to width x height), so the
/// correct alignment is exactly (m, b). Pixels that see nothing are invalid. Throws InvalidArgument for m = 0.
DisparityMap render_relative_disparity(const SyntheticScene& scene, double m, double b, int width, int height);

/// Exact plenoptic-frame depth at every lens centroid, seen through the plenoptic camera.
SparseDepthMap centroid_depths(const SyntheticScene& scene, const MicrolensGrid& grid);

/// Single textured plane filling the view.
SyntheticScene single_plane_scene(double depth, std::uint64_t seed, const StereoRig& rig);

/// Random single-plane captures for network training.
struct TrainingScenes {
  int count = 512;
  double min_depth = 0.6;
  double max_depth = 3.0;  // inverse depth is drawn uniformly between the bounds
  std::uint64_t seed = 0;
  MicrolensOptics optics;
  double texture_cell = 0.3;
  double pitch = 24.0;
  void validate() const;  // throws InvalidArgument
};

/// One scene and the lattice it is rendered with.
struct TrainingCapture {
  SyntheticScene scene;
  GridCalibration grid;
};

/// Every capture gets its own sub-pixel lattice phase, so that the rounding of crop windows around
/// centroids varies as it does across a real sensor, and its own texture translation, so that the
/// value-noise lattice under a lens carries no depth information.
std::vector<TrainingCapture> training_captures(const TrainingScenes& cfg);

/// 5 x 5 lattice around one training lens, origin at (pitch, pitch) + phase. The outer ring fills the
/// corners of the flower crops with lens images, as inside a full sensor, so only the middle lens
/// is a faithful sample.
GridCalibration single_flower_grid(double pitch = 24.0, Pixel phase = {0.0, 0.0});
/// The middle lens of single_flower_grid.
AxialCoord single_flower_lens(const GridCalibration& calib);
/// `depths` reduced to the middle lens.
SparseDepthMap single_flower_truth(const SparseDepthMap& depths, const GridCalibration& calib);

}  // namespace lfd
