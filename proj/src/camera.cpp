#include "lfdepth/camera.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "lfdepth/error.hpp"
#include "lfdepth/keyvalue.hpp"

namespace lfd {

Eigen::Vector2d Distortion::apply(const Eigen::Vector2d& xy) const {
  const double x = xy.x(), y = xy.y(), r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
  return {x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
          y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

Eigen::Vector2d Distortion::remove(const Eigen::Vector2d& xy, int iterations) const {
  if (is_zero()) return xy;
  Eigen::Vector2d u = xy;
  for (int i = 0; i < iterations; ++i) {
    const Eigen::Vector2d next = u - (apply(u) - xy);
    if ((next - u).squaredNorm() < 1e-30) return next;
    u = next;
  }
  return u;
}

void CameraIntrinsics::validate(const std::string& name) const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorKind::FormatError, name + ": focal lengths must be positive");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw Error(ErrorKind::FormatError, name + ": principal point must be finite");
  if (width < 0 || height < 0) throw Error(ErrorKind::FormatError, name + ": negative image size");
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Pixel CameraIntrinsics::project(const Eigen::Vector3d& p, bool distort) const {
  Eigen::Vector2d n(p.x() / p.z(), p.y() / p.z());
  if (distort) n = distortion.apply(n);
  return {fx * n.x() + cx, fy * n.y() + cy};
}

Eigen::Vector3d CameraIntrinsics::backproject(Pixel px, double z) const {
  return {(px.x - cx) / fx * z, (px.y - cy) / fy * z, z};
}

RigidTransform RigidTransform::from_row_major(const std::array<double, 16>& m) {
  RigidTransform t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = m[r * 4 + c];
    t.translation(r) = m[r * 4 + 3];
  }
  return t;
}

std::array<double, 16> RigidTransform::to_row_major() const {
  std::array<double, 16> m{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m[r * 4 + c] = rotation(r, c);
    m[r * 4 + 3] = translation(r);
  }
  m[15] = 1.0;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform t;
  t.rotation = rotation.transpose();
  t.translation = -(t.rotation * translation);
  return t;
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform t;
  t.rotation = rotation * other.rotation;
  t.translation = rotation * other.translation + translation;
  return t;
}

double RigidTransform::orthonormality_error() const {
  return (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).norm();
}

void StereoRig::validate() const {
  left.validate("left");
  right.validate("right");
  plenoptic.validate("plenoptic");
  if (right_from_left.orthonormality_error() > 1e-9 || plenoptic_from_left.orthonormality_error() > 1e-9) {
    throw Error(ErrorKind::FormatError, "rig rotations must be orthonormal");
  }
  if (right_from_left.translation.norm() < 1e-12) throw Error(ErrorKind::DegenerateGeometry, "stereo baseline is zero");
  if (is_rectified() && (rect_from_left.transpose() * rect_from_left - Eigen::Matrix3d::Identity()).norm() > 1e-9) {
    throw Error(ErrorKind::FormatError, "rectifying rotation must be orthonormal");
  }
}

CameraIntrinsics StereoRig::rectified_intrinsics() const {
  CameraIntrinsics k;
  k.fx = k.fy = rectified_focal;
  k.cx = rectified_cx;
  k.cy = rectified_cy;
  k.width = rectified_width;
  k.height = rectified_height;
  return k;
}

RigidTransform StereoRig::plenoptic_from_rectified() const {
  RigidTransform left_from_rect;
  left_from_rect.rotation = rect_from_left.transpose();
  return plenoptic_from_left.compose(left_from_rect);
}

StereoRig make_rectified_rig(double focal, double baseline, int width, int height) {
  StereoRig rig;
  CameraIntrinsics k;
  k.fx = k.fy = focal;
  k.cx = (width - 1) / 2.0;
  k.cy = (height - 1) / 2.0;
  k.width = width;
  k.height = height;
  rig.left = rig.right = rig.plenoptic = k;
  rig.right_from_left.translation = {-baseline, 0.0, 0.0};
  rig.rectified_focal = focal;
  rig.baseline = baseline;
  rig.rectified_cx = k.cx;
  rig.rectified_cy = k.cy;
  rig.rectified_width = width;
  rig.rectified_height = height;
  return rig;
}

namespace {

CameraIntrinsics read_camera(const KeyValues& kv, const std::string& p) {
  CameraIntrinsics k;
  k.fx = kv.get_double(p + ".fx");
  k.fy = kv.get_double(p + ".fy");
  k.cx = kv.get_double(p + ".cx");
  k.cy = kv.get_double(p + ".cy");
  k.distortion = {kv.get_double(p + ".k1", 0.0), kv.get_double(p + ".k2", 0.0), kv.get_double(p + ".p1", 0.0),
                  kv.get_double(p + ".p2", 0.0), kv.get_double(p + ".k3", 0.0)};
  k.width = kv.get_int(p + ".width", 0);
  k.height = kv.get_int(p + ".height", 0);
  k.validate(p);
  return k;
}

void write_camera(KeyValues& kv, const std::string& p, const CameraIntrinsics& k) {
  kv.set(p + ".fx", k.fx);
  kv.set(p + ".fy", k.fy);
  kv.set(p + ".cx", k.cx);
  kv.set(p + ".cy", k.cy);
  kv.set(p + ".k1", k.distortion.k1);
  kv.set(p + ".k2", k.distortion.k2);
  kv.set(p + ".p1", k.distortion.p1);
  kv.set(p + ".p2", k.distortion.p2);
  kv.set(p + ".k3", k.distortion.k3);
  kv.set(p + ".width", k.width);
  kv.set(p + ".height", k.height);
}

RigidTransform read_transform(const KeyValues& kv, const std::string& key, const std::string& path) {
  const auto v = kv.get_doubles(key);
  if (v.size() != 16) throw Error(ErrorKind::FormatError, path + ": '" + key + "' needs 16 row-major values");
  std::array<double, 16> m{};
  std::copy(v.begin(), v.end(), m.begin());
  if (m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0) {
    throw Error(ErrorKind::FormatError, path + ": '" + key + "' last row must be 0 0 0 1");
  }
  return RigidTransform::from_row_major(m);
}

std::string join(const std::array<double, 16>& m) {
  std::string s;
  for (std::size_t i = 0; i < m.size(); ++i) s += (i ? " " : "") + format_double(m[i]);
  return s;
}

}  // namespace

StereoRig load_rig(const std::string& path) {
  const auto kv = KeyValues::load(path);
  StereoRig rig;
  rig.left = read_camera(kv, "left");
  rig.right = read_camera(kv, "right");
  rig.plenoptic = kv.has("plenoptic.fx") ? read_camera(kv, "plenoptic") : rig.left;
  rig.right_from_left = read_transform(kv, "right_from_left", path);
  rig.plenoptic_from_left = kv.has("plenoptic_from_left") ? read_transform(kv, "plenoptic_from_left", path) : RigidTransform{};
  if (kv.has("rectified.f")) {
    rig.rectified_focal = kv.get_double("rectified.f");
    rig.baseline = kv.get_double("rectified.baseline");
    rig.rectified_cx = kv.get_double("rectified.cx");
    rig.rectified_cy = kv.get_double("rectified.cy");
    rig.rectified_width = kv.get_int("rectified.width", rig.left.width);
    rig.rectified_height = kv.get_int("rectified.height", rig.left.height);
    if (kv.has("rectified.rotation")) {
      const auto r = kv.get_doubles("rectified.rotation");
      if (r.size() != 9) throw Error(ErrorKind::FormatError, path + ": 'rectified.rotation' needs 9 row-major values");
      for (int i = 0; i < 9; ++i) rig.rect_from_left(i / 3, i % 3) = r[i];
    }
    if (!(rig.rectified_focal > 0.0) || !(rig.baseline > 0.0)) {
      throw Error(ErrorKind::FormatError, path + ": rectified focal and baseline must be positive");
    }
  }
  rig.validate();
  return rig;
}

void save_rig(const std::string& path, const StereoRig& rig) {
  KeyValues kv;
  write_camera(kv, "left", rig.left);
  write_camera(kv, "right", rig.right);
  write_camera(kv, "plenoptic", rig.plenoptic);
  kv.set("right_from_left", join(rig.right_from_left.to_row_major()));
  kv.set("plenoptic_from_left", join(rig.plenoptic_from_left.to_row_major()));
  if (rig.is_rectified()) {
    kv.set("rectified.f", rig.rectified_focal);
    kv.set("rectified.baseline", rig.baseline);
    kv.set("rectified.cx", rig.rectified_cx);
    kv.set("rectified.cy", rig.rectified_cy);
    kv.set("rectified.width", rig.rectified_width);
    kv.set("rectified.height", rig.rectified_height);
    std::string r;
    for (int i = 0; i < 9; ++i) r += (i ? " " : "") + format_double(rig.rect_from_left(i / 3, i % 3));
    kv.set("rectified.rotation", r);
  }
  kv.save(path);
}

}  // namespace lfd
