#pragma once

#include <Eigen/Core>
#include <array>
#include <string>

#include "lfdepth/image.hpp"

namespace lfd {

/// Brown radial-tangential coefficients on normalized coordinates.
struct Distortion {
  double k1 = 0.0;
  double k2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double k3 = 0.0;

  bool is_zero() const { return k1 == 0 && k2 == 0 && p1 == 0 && p2 == 0 && k3 == 0; }
  Eigen::Vector2d apply(const Eigen::Vector2d& xy) const;
  /// Fixed-point inversion of apply().
  Eigen::Vector2d remove(const Eigen::Vector2d& xy, int iterations = 50) const;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Distortion distortion;
  int width = 0;
  int height = 0;

  void validate(const std::string& name = "camera") const;  // throws FormatError
  Eigen::Matrix3d matrix() const;
  /// Pixel of a camera-frame point, optionally through the distortion model.
  Pixel project(const Eigen::Vector3d& p, bool distort = false) const;
  /// Camera-frame point at depth z along the undistorted ray through `px`.
  Eigen::Vector3d backproject(Pixel px, double z) const;
};

/// x_target = R * x_source + t.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform from_row_major(const std::array<double, 16>& m);
  std::array<double, 16> to_row_major() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  /// (this ∘ other)(p) = this(other(p)).
  RigidTransform compose(const RigidTransform& other) const;
  double orthonormality_error() const;  // ||RᵀR - I||
};

/// Two calibrated cameras plus the plenoptic camera pose. The rectified_* fields describe
/// the common rectified pinhole (equal intrinsics for both views, shared rotation).
struct StereoRig {
  CameraIntrinsics left, right;
  RigidTransform right_from_left;
  RigidTransform plenoptic_from_left;
  CameraIntrinsics plenoptic;

  double rectified_focal = 0.0;  // px
  double baseline = 0.0;         // m
  double rectified_cx = 0.0;
  double rectified_cy = 0.0;
  int rectified_width = 0;
  int rectified_height = 0;
  /// Rotation from the original left camera frame to the rectified frame.
  Eigen::Matrix3d rect_from_left = Eigen::Matrix3d::Identity();

  bool is_rectified() const { return rectified_focal > 0.0 && baseline > 0.0; }
  void validate() const;  // throws FormatError / DegenerateGeometry
  CameraIntrinsics rectified_intrinsics() const;
  /// Transform from the rectified left frame to the plenoptic camera frame.
  RigidTransform plenoptic_from_rectified() const;
};

/// An already-rectified pinhole pair: right camera at +baseline along x, no distortion,
/// plenoptic camera coincident with the left camera.
StereoRig make_rectified_rig(double focal, double baseline, int width, int height);

/// Structured key-value calibration file. Keys: {left,right,plenoptic}.{fx,fy,cx,cy,k1,k2,p1,p2,k3,width,height},
/// right_from_left and plenoptic_from_left (16 row-major values), optional rectified.{f,baseline,cx,cy,width,height}.
StereoRig load_rig(const std::string& path);
void save_rig(const std::string& path, const StereoRig& rig);

}  // namespace lfd
