#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "semgraph/error.hpp"
#include "semgraph/geometry.hpp"

using namespace semgraph;

namespace {

const Eigen::Quaterniond kYaw90(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()));

bool near_identity(const Pose& p, double tol = 1e-9) {
  return p.translation().norm() < tol && rotation_angle(p, Pose::identity()) < tol;
}

Intrinsics k640() { return {500.0, 500.0, 320.0, 240.0, 640, 480}; }

}  // namespace

TEST_CASE("compose applies the right operand first") {
  CHECK(near_identity(compose(Pose::identity(), Pose::identity())));

  const Pose ab = compose(Pose::from_translation({1, 0, 0}), Pose::from_translation({0, 2, 0}));
  CHECK((ab.translation() - Eigen::Vector3d(1, 2, 0)).norm() < 1e-12);
  CHECK(rotation_angle(ab, Pose::identity()) < 1e-12);

  const Pose yaw({0, 0, 0}, kYaw90);
  const Pose r = compose(yaw, Pose::from_translation({1, 0, 0}));
  CHECK((r.translation() - Eigen::Vector3d(0, 1, 0)).norm() < 1e-12);
  CHECK(rotation_angle(r, yaw) < 1e-12);
  CHECK(oracle::max_abs_diff(oracle::to_matrix(r),
                             oracle::mul(oracle::to_matrix(yaw),
                                         oracle::to_matrix(Pose::from_translation({1, 0, 0})))) <
        1e-12);
}

TEST_CASE("invert") {
  CHECK(near_identity(invert(Pose::identity())));
  const Pose inv = invert(Pose::from_translation({1, 2, 3}));
  CHECK((inv.translation() - Eigen::Vector3d(-1, -2, -3)).norm() < 1e-12);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Pose p = oracle::random_pose(rng);
    CHECK(near_identity(compose(p, invert(p))));
    CHECK(oracle::max_abs_diff(oracle::to_matrix(invert(p)),
                               oracle::inverse(oracle::to_matrix(p))) < 1e-9);
  }
}

TEST_CASE("relative_transform") {
  std::mt19937_64 rng(11);
  const Pose a = oracle::random_pose(rng);
  CHECK(near_identity(relative_transform(a, a)));
  const Pose d = relative_transform(Pose::identity(), Pose::from_translation({1, 0, 0}));
  CHECK((d.translation() - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);

  for (int i = 0; i < 1000; ++i) {
    const Pose prev = oracle::random_pose(rng);
    const Pose cur = oracle::random_pose(rng);
    const Pose rel = relative_transform(prev, cur);
    const auto expect =
        oracle::mul(oracle::to_matrix(cur), oracle::inverse(oracle::to_matrix(prev)));
    REQUIRE(oracle::max_abs_diff(oracle::to_matrix(rel), expect) < 1e-9);
    const Pose back = compose(rel, prev);
    REQUIRE(translation_distance(back, cur) < 1e-9);
    REQUIRE(rotation_angle(back, cur) < 1e-9);
  }
}

TEST_CASE("camera_motion maps previous-camera points into the current camera") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Pose prev = oracle::random_pose(rng);
    const Pose cur = oracle::random_pose(rng);
    const Eigen::Vector3d world(1.0, -2.0, 0.5);
    const Eigen::Vector3d in_prev = invert(prev).apply(world);
    const Eigen::Vector3d in_cur = invert(cur).apply(world);
    CHECK((camera_motion(prev, cur).apply(in_prev) - in_cur).norm() < 1e-9);
  }
}

TEST_CASE("quaternions stay normalized with non-negative w") {
  std::mt19937_64 rng(5);
  Pose acc = Pose::identity();
  for (int i = 0; i < 1000; ++i) {
    acc = compose(acc, oracle::random_pose(rng, 0.1));
    CHECK(std::abs(acc.rotation().norm() - 1.0) < 1e-9);
    CHECK(acc.rotation().w() >= 0.0);
  }
  CHECK_THROWS_AS(Pose({0, 0, 0}, Eigen::Quaterniond(0, 0, 0, 0)), Error);
  CHECK_THROWS_AS(Pose({NAN, 0, 0}, Eigen::Quaterniond::Identity()), Error);
}

TEST_CASE("compose is associative") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 300; ++i) {
    const Pose a = oracle::random_pose(rng), b = oracle::random_pose(rng),
               c = oracle::random_pose(rng);
    const Pose l = compose(compose(a, b), c);
    const Pose r = compose(a, compose(b, c));
    CHECK(translation_distance(l, r) < 1e-9);
    CHECK(rotation_angle(l, r) < 1e-9);
  }
}

TEST_CASE("intrinsics validation") {
  CHECK_NOTHROW(k640().validate());
  Intrinsics bad = k640();
  bad.fx = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = k640();
  bad.cx = 640;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = k640();
  bad.height = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("unproject and project") {
  const Intrinsics k = k640();
  const Point3 c = unproject(k.cx, k.cy, 2.0, k);
  CHECK(c.frame == Frame::Camera);
  CHECK((c.p - Eigen::Vector3d(0, 0, 2)).norm() < 1e-12);
  const Intrinsics wide{100.0, 100.0, 319.5, 239.5, 640, 480};
  CHECK((unproject(wide.cx + wide.fx, wide.cy, 1.0, wide).p - Eigen::Vector3d(1, 0, 1)).norm() <
        1e-12);

  const PixelCoord uv = project({{0, 0, 1}, Frame::Camera}, k);
  CHECK(uv.u == doctest::Approx(k.cx));
  CHECK(uv.v == doctest::Approx(k.cy));
  const PixelCoord uv2 = project({{1, 0, 1}, Frame::Camera}, k);
  CHECK(uv2.u == doctest::Approx(820.0));

  try {
    unproject(10, 10, 0.0, k);
    FAIL("expected NonPositiveDepth");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveDepth);
  }
  try {
    unproject(700, 10, 1.0, k);
    FAIL("expected PixelOutOfBounds");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PixelOutOfBounds);
  }
  try {
    project({{0, 0, -1}, Frame::Camera}, k);
    FAIL("expected BehindCamera");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BehindCamera);
  }
  CHECK_THROWS_AS(project({{0, 0, 1}, Frame::Map}, k), Error);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uu(-0.5, 639.49), vv(-0.5, 479.49), dd(0.1, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double u = uu(rng), v = vv(rng);
    const PixelCoord back = project(unproject(u, v, dd(rng), k), k);
    worst = std::max({worst, std::abs(back.u - u), std::abs(back.v - v)});
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("camera_to_map") {
  const Point3 p{{1, 2, 3}, Frame::Camera};
  CHECK((camera_to_map(p, Pose::identity()).p - Eigen::Vector3d(1, 2, 3)).norm() < 1e-12);
  CHECK((camera_to_map(p, Pose::from_translation({10, 0, 0})).p - Eigen::Vector3d(11, 2, 3))
            .norm() < 1e-12);

  const Pose yaw({0.5, 0, 0}, kYaw90);
  const auto m = oracle::to_matrix(yaw);
  const Eigen::Vector3d got = camera_to_map(p, yaw).p;
  for (int i = 0; i < 3; ++i) {
    CHECK(got[i] == doctest::Approx(m[i][0] * 1 + m[i][1] * 2 + m[i][2] * 3 + m[i][3]));
  }
  CHECK(camera_to_map(p, yaw).frame == Frame::Map);
  CHECK_THROWS_AS(camera_to_map({{0, 0, 1}, Frame::Map}, yaw), Error);
  CHECK((map_to_camera(camera_to_map(p, yaw), yaw).p - p.p).norm() < 1e-12);

  std::mt19937_64 rng(19);
  std::normal_distribution<double> g(0, 3);
  for (int i = 0; i < 500; ++i) {
    const Pose pose = oracle::random_pose(rng);
    const Point3 a{{g(rng), g(rng), g(rng)}, Frame::Camera};
    const Point3 b{{g(rng), g(rng), g(rng)}, Frame::Camera};
    const double before = (a.p - b.p).norm();
    const double after = (camera_to_map(a, pose).p - camera_to_map(b, pose).p).norm();
    CHECK(std::abs(before - after) < 1e-9);
  }
}
