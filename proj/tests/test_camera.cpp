#include <Eigen/Geometry>
#include <filesystem>
#include <fstream>
#include <functional>

#include "doctest.h"
#include "lfdepth/camera.hpp"
#include "lfdepth/error.hpp"

using namespace lfd;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an lfd::Error");
  return ErrorKind::Usage;
}

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

StereoRig skewed_rig() {
  StereoRig rig;
  rig.left = {800, 810, 320.5, 240.25, {-0.12, 0.03, 1e-4, -2e-4, 0.001}, 640, 480};
  rig.right = {805, 803, 318.0, 239.0, {-0.1, 0.02, 0, 0, 0}, 640, 480};
  rig.plenoptic = {2000, 2000, 1024, 1024, {}, 2048, 2048};
  rig.right_from_left.rotation = Eigen::AngleAxisd(0.02, Eigen::Vector3d(0.1, 1, 0.05).normalized()).toRotationMatrix();
  rig.right_from_left.translation = {-0.12, 0.003, -0.001};
  rig.plenoptic_from_left.rotation = Eigen::AngleAxisd(-0.01, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  rig.plenoptic_from_left.translation = {-0.06, 0.05, 0.0};
  return rig;
}

}  // namespace

TEST_CASE("distortion removal inverts application") {
  const Distortion d{-0.2, 0.05, 1e-3, -5e-4, 0.002};
  for (double x = -0.4; x <= 0.4; x += 0.1)
    for (double y = -0.3; y <= 0.3; y += 0.1) {
      const Eigen::Vector2d p(x, y);
      CHECK((d.remove(d.apply(p)) - p).norm() < 1e-10);
    }
  CHECK(Distortion{}.apply({0.3, -0.2}) == Eigen::Vector2d(0.3, -0.2));
}

TEST_CASE("projection and backprojection are inverse") {
  const CameraIntrinsics k{900, 950, 311, 255, {}, 640, 480};
  const Eigen::Vector3d p(0.3, -0.2, 2.5);
  const auto px = k.project(p);
  CHECK(px.x == doctest::Approx(311 + 900 * 0.3 / 2.5));
  CHECK(px.y == doctest::Approx(255 - 950 * 0.2 / 2.5));
  CHECK((k.backproject(px, 2.5) - p).norm() < 1e-12);
  CameraIntrinsics bad = k;
  bad.fx = 0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::FormatError);
}

TEST_CASE("rigid transforms compose and invert") {
  const auto rig = skewed_rig();
  const auto& t = rig.right_from_left;
  const Eigen::Vector3d p(0.4, -1.0, 3.0);
  CHECK((t.inverse().apply(t.apply(p)) - p).norm() < 1e-12);
  CHECK((t.compose(rig.plenoptic_from_left).apply(p) - t.apply(rig.plenoptic_from_left.apply(p))).norm() < 1e-12);
  CHECK(t.orthonormality_error() < 1e-12);
  const auto rt = RigidTransform::from_row_major(t.to_row_major());
  CHECK(rt.rotation == t.rotation);
  CHECK(rt.translation == t.translation);
}

TEST_CASE("made rectified rigs validate with the expected geometry") {
  const auto rig = make_rectified_rig(1000, 0.1, 64, 48);
  CHECK(rig.is_rectified());
  rig.validate();
  // The right camera centre sits at +B along x in the left frame.
  CHECK((rig.right_from_left.inverse().translation - Eigen::Vector3d(0.1, 0, 0)).norm() < 1e-15);
  auto zero = rig;
  zero.right_from_left.translation.setZero();
  zero.baseline = 0;
  CHECK(kind_of([&] { zero.validate(); }) == ErrorKind::DegenerateGeometry);
}

TEST_CASE("rig files round-trip") {
  auto rig = skewed_rig();
  rig.rectified_focal = 790;
  rig.baseline = 0.12;
  rig.rectified_cx = 330;
  rig.rectified_cy = 241;
  rig.rectified_width = 640;
  rig.rectified_height = 480;
  rig.rect_from_left = Eigen::AngleAxisd(0.01, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const auto path = temp_path("lfd_rig.txt");
  save_rig(path, rig);
  const auto back = load_rig(path);
  CHECK(back.left.fx == rig.left.fx);
  CHECK(back.left.distortion.k3 == rig.left.distortion.k3);
  CHECK(back.right.cy == rig.right.cy);
  CHECK(back.plenoptic.width == 2048);
  CHECK((back.right_from_left.rotation - rig.right_from_left.rotation).norm() == 0.0);
  CHECK(back.plenoptic_from_left.translation == rig.plenoptic_from_left.translation);
  CHECK(back.rectified_focal == 790);
  CHECK(back.baseline == 0.12);
  CHECK((back.rect_from_left - rig.rect_from_left).norm() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("malformed rig files are rejected") {
  const auto path = temp_path("lfd_bad_rig.txt");
  std::ofstream(path) << "left.fx = 800\n";
  CHECK(kind_of([&] { load_rig(path); }) == ErrorKind::FormatError);
  std::filesystem::remove(path);
  CHECK(kind_of([&] { load_rig(temp_path("no_such_rig.txt")); }) == ErrorKind::MissingAsset);
}
