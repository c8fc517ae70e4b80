#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "lfdepth/camera.hpp"
#include "lfdepth/hexgrid.hpp"
#include "lfdepth/image.hpp"
#include "lfdepth/sparse.hpp"

namespace lfd {

/// Resampled image plus the pixels whose source location fell inside the source image.
struct WarpedImage {
  Image<float> image;
  std::vector<std::uint8_t> valid;
};

/// Bilinear sample of channel c; coordinates within 1e-9 of an integer snap to it. False outside the image.
bool sample_bilinear(const Image<float>& img, double x, double y, int c, float& out);

/// For every pixel of an ideal pinhole camera `target`, follow its ray through `source_from_target`
/// into `source` (distortion included) and sample bilinearly.
WarpedImage remap(const Image<float>& src, const CameraIntrinsics& source, const Eigen::Matrix3d& source_from_target,
                  const CameraIntrinsics& target);

/// Inverse Brown warp onto the same pinhole intrinsics without distortion.
WarpedImage undistort(const Image<float>& img, const CameraIntrinsics& intrinsics);

struct Rectification {
  Eigen::Matrix3d left_homography = Eigen::Matrix3d::Identity();   // undistorted left px -> rectified px
  Eigen::Matrix3d right_homography = Eigen::Matrix3d::Identity();  // undistorted right px -> rectified px
  StereoRig rig;  // input rig with the rectified_* fields and rect_from_left filled in
};

/// Rotates both cameras so the baseline lies on the rectified x axis, right camera at +x.
/// Shared intrinsics: mean focal length and principal point of the two cameras. Throws DegenerateGeometry.
Rectification rectify(const StereoRig& rig);

struct RectifiedPair {
  WarpedImage left, right;
};
RectifiedPair rectify_images(const Image<float>& left, const Image<float>& right, const StereoRig& rectified_rig);

Pixel apply_homography(const Eigen::Matrix3d& h, Pixel p);

/// Points in the rectified left frame with one colour sample per point.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<float> colors;  // channels values per point
  int channels = 0;
  std::size_t size() const { return points.size(); }
};

struct Triangulation {
  DepthMap depth;
  PointCloud cloud;
};

/// z = f B / d and X = z K^-1 (u, v, 1) on the rectified left camera; d <= d_min is skipped.
Triangulation triangulate(const DisparityMap& disp, const StereoRig& rectified_rig, const Image<float>& color,
                          double d_min = 1e-6);

struct Reprojection {
  Image<float> color;
  DepthMap depth;
  std::size_t in_front = 0;  // points with positive depth in the target frame
};

/// Z-buffered splatting: each point lands on its nearest pixel and the smallest depth wins
/// (the first point on ties). `distort` applies the target's forward distortion.
Reprojection reproject(const PointCloud& cloud, const RigidTransform& target_from_cloud, const CameraIntrinsics& target,
                       int width, int height, bool distort);

/// Nearest-pixel depth per lens centroid; invalid pixels give no entry.
SparseDepthMap sample_at_centroids(const DepthMap& depth, const MicrolensGrid& grid);

}  // namespace lfd
