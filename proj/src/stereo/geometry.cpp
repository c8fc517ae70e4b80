#include "lfdepth/stereo/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "lfdepth/error.hpp"

namespace lfd {

namespace {

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

Eigen::Vector3d pixel_ray(const CameraIntrinsics& k, double u, double v) {
  return {(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
}

}  // namespace

bool sample_bilinear(const Image<float>& img, double x, double y, int c, float& out) {
  x = snap(x);
  y = snap(y);
  if (!(x >= 0.0 && y >= 0.0 && x <= img.width() - 1 && y <= img.height() - 1)) return false;
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const double fx = x - x0, fy = y - y0;
  const int x1 = fx > 0.0 ? x0 + 1 : x0, y1 = fy > 0.0 ? y0 + 1 : y0;
  const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
  const double bottom = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
  out = static_cast<float>((1.0 - fy) * top + fy * bottom);
  return true;
}

WarpedImage remap(const Image<float>& src, const CameraIntrinsics& source, const Eigen::Matrix3d& source_from_target,
                  const CameraIntrinsics& target) {
  source.validate("source camera");
  target.validate("target camera");
  const int w = target.width, h = target.height, nc = src.channels();
  WarpedImage out{Image<float>(w, h, nc), std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
#pragma omp parallel for schedule(static)
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const Eigen::Vector3d s = source_from_target * pixel_ray(target, u, v);
      if (!(s.z() > 0.0)) continue;
      const Pixel p = source.project(s, !source.distortion.is_zero());
      bool ok = true;
      for (int c = 0; c < nc && ok; ++c) ok = sample_bilinear(src, p.x, p.y, c, out.image.at(u, v, c));
      if (ok) {
        out.valid[static_cast<std::size_t>(v) * w + u] = 1;
      } else {
        for (int c = 0; c < nc; ++c) out.image.at(u, v, c) = 0.0f;
      }
    }
  return out;
}

WarpedImage undistort(const Image<float>& img, const CameraIntrinsics& intrinsics) {
  CameraIntrinsics source = intrinsics, target = intrinsics;
  source.width = target.width = img.width();
  source.height = target.height = img.height();
  target.distortion = {};
  return remap(img, source, Eigen::Matrix3d::Identity(), target);
}

Rectification rectify(const StereoRig& rig) {
  rig.validate();
  const Eigen::Matrix3d& r = rig.right_from_left.rotation;
  const Eigen::Vector3d c2 = -(r.transpose() * rig.right_from_left.translation);
  if (c2.norm() < 1e-9) throw Error(ErrorKind::DegenerateGeometry, "stereo baseline is zero");
  const Eigen::Vector3d v1 = c2.normalized();
  const Eigen::Vector3d v2 = Eigen::Vector3d::UnitZ().cross(v1);
  if (v2.norm() < 1e-6) throw Error(ErrorKind::DegenerateGeometry, "baseline is parallel to the optical axis");
  const Eigen::Vector3d v2n = v2.normalized();
  Eigen::Matrix3d rect;
  rect.row(0) = v1;
  rect.row(1) = v2n;
  rect.row(2) = v1.cross(v2n);

  Rectification out;
  out.rig = rig;
  StereoRig& rr = out.rig;
  rr.rectified_focal = (rig.left.fx + rig.left.fy + rig.right.fx + rig.right.fy) / 4.0;
  rr.rectified_cx = (rig.left.cx + rig.right.cx) / 2.0;
  rr.rectified_cy = (rig.left.cy + rig.right.cy) / 2.0;
  rr.rectified_width = rig.left.width;
  rr.rectified_height = rig.left.height;
  rr.baseline = c2.norm();
  rr.rect_from_left = rect;
  const Eigen::Matrix3d kn = rr.rectified_intrinsics().matrix();
  out.left_homography = kn * rect * rig.left.matrix().inverse();
  out.right_homography = kn * rect * r.transpose() * rig.right.matrix().inverse();
  return out;
}

RectifiedPair rectify_images(const Image<float>& left, const Image<float>& right, const StereoRig& rr) {
  if (!rr.is_rectified()) throw Error(ErrorKind::DegenerateGeometry, "rig has no rectification");
  const CameraIntrinsics kn = rr.rectified_intrinsics();
  CameraIntrinsics kl = rr.left, kr = rr.right;
  kl.width = left.width();
  kl.height = left.height();
  kr.width = right.width();
  kr.height = right.height();
  const Eigen::Matrix3d left_from_rect = rr.rect_from_left.transpose();
  return {remap(left, kl, left_from_rect, kn), remap(right, kr, rr.right_from_left.rotation * left_from_rect, kn)};
}

Pixel apply_homography(const Eigen::Matrix3d& h, Pixel p) {
  const Eigen::Vector3d q = h * Eigen::Vector3d(p.x, p.y, 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

Triangulation triangulate(const DisparityMap& disp, const StereoRig& rr, const Image<float>& color, double d_min) {
  if (!rr.is_rectified()) throw Error(ErrorKind::DegenerateGeometry, "triangulation needs a rectified rig");
  const bool colored = !color.empty();
  if (colored && (color.width() != disp.width || color.height() != disp.height))
    throw Error(ErrorKind::ShapeMismatch, "colour image does not match the disparity map");
  Triangulation t{DepthMap(disp.width, disp.height), {}};
  t.cloud.channels = colored ? color.channels() : 0;
  const CameraIntrinsics k = rr.rectified_intrinsics();
  for (int v = 0; v < disp.height; ++v)
    for (int u = 0; u < disp.width; ++u) {
      if (!disp.is_valid(u, v)) continue;
      const double d = disp.value(u, v);
      if (!(d > d_min) || !std::isfinite(d)) continue;
      const double z = k.fx * rr.baseline / d;
      t.depth.set(u, v, z);
      t.cloud.points.push_back(pixel_ray(k, u, v) * z);
      for (int c = 0; c < t.cloud.channels; ++c) t.cloud.colors.push_back(color.at(u, v, c));
    }
  return t;
}

Reprojection reproject(const PointCloud& cloud, const RigidTransform& target_from_cloud, const CameraIntrinsics& target,
                       int width, int height, bool distort) {
  target.validate("target camera");
  if (target_from_cloud.orthonormality_error() > 1e-9) throw Error(ErrorKind::FormatError, "target pose is not a rotation");
  const int nc = cloud.channels;
  Reprojection r{Image<float>(width, height, nc), DepthMap(width, height), 0};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d q = target_from_cloud.apply(cloud.points[i]);
    if (!(q.z() > 0.0)) continue;
    ++r.in_front;
    const Pixel p = target.project(q, distort);
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || std::abs(p.x) > 1e9 || std::abs(p.y) > 1e9) continue;
    const int u = round_half_up(p.x), v = round_half_up(p.y);
    if (!r.depth.contains(u, v)) continue;
    const double z = q.z();
    if (r.depth.is_valid(u, v) && !(z < r.depth.value(u, v))) continue;
    r.depth.set(u, v, z);
    for (int c = 0; c < nc; ++c) r.color.at(u, v, c) = cloud.colors[i * nc + c];
  }
  return r;
}

SparseDepthMap sample_at_centroids(const DepthMap& depth, const MicrolensGrid& grid) {
  SparseDepthMap out;
  out.source = DepthSource::StereoGroundTruth;
  for (const Lens& lens : grid.lenses()) {
    const int u = round_half_up(lens.center.x), v = round_half_up(lens.center.y);
    if (!depth.contains(u, v) || !depth.is_valid(u, v)) continue;
    out.entries.push_back({lens.coord, lens.center, depth.value(u, v)});
  }
  return out;
}

}  // namespace lfd
