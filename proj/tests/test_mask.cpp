#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "semgraph/error.hpp"
#include "semgraph/mask.hpp"

using namespace semgraph;

namespace {

Mask block(int w, int h, int x0, int y0, int bw, int bh) {
  Bitmap b(w, h);
  for (int y = y0; y < y0 + bh; ++y)
    for (int x = x0; x < x0 + bw; ++x) b.at(x, y) = 1;
  return encode_rle(b);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("rle encoding") {
  Bitmap zeros(2, 2);
  CHECK(encode_rle(zeros).counts() == std::vector<std::uint32_t>{4});
  Bitmap ones(2, 2);
  std::fill(ones.data.begin(), ones.data.end(), 1);
  CHECK(encode_rle(ones).counts() == std::vector<std::uint32_t>{0, 4});
  CHECK(encode_rle(ones).area() == 4);

  CHECK(code_of([] { Mask::from_counts(2, 2, {3}); }) == ErrorCode::MalformedRle);
  CHECK(code_of([] { Mask::from_counts(2, 2, {1, 0, 3}); }) == ErrorCode::MalformedRle);
  CHECK(code_of([] { Mask::from_counts(2, 2, {2, 2, 0}); }) == ErrorCode::MalformedRle);
  CHECK_NOTHROW(Mask::from_counts(2, 2, {0, 1, 3}));

  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    const Bitmap b = oracle::random_bitmap(rng, 64, 64);
    const Mask m = encode_rle(b);
    REQUIRE(decode_rle(m) == b);
    REQUIRE(encode_rle(decode_rle(m)) == m);
    REQUIRE(Mask::from_counts(64, 64, m.counts()) == m);
    std::size_t set = 0;
    for (auto v : b.data) set += v;
    REQUIRE(m.area() == set);
  }
}

TEST_CASE("from_sorted_indices matches encode_rle") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 50; ++i) {
    const Bitmap b = oracle::random_bitmap(rng, 40, 30);
    std::vector<std::uint32_t> idx;
    for (std::size_t p = 0; p < b.data.size(); ++p)
      if (b.data[p]) idx.push_back(static_cast<std::uint32_t>(p));
    CHECK(Mask::from_sorted_indices(40, 30, idx) == encode_rle(b));
  }
  const std::vector<std::uint32_t> bad{3, 2};
  CHECK_THROWS_AS(Mask::from_sorted_indices(4, 4, bad), Error);
}

TEST_CASE("iou") {
  const Mask a = block(4, 4, 0, 0, 2, 2);
  const Mask b = block(4, 4, 1, 0, 2, 2);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, block(4, 4, 2, 2, 2, 2)) == 0.0);
  CHECK(iou(a, b) == doctest::Approx(2.0 / 6.0));
  CHECK(iou(Mask::empty(4, 4), Mask::empty(4, 4)) == 0.0);
  CHECK(code_of([&] { iou(a, Mask::empty(5, 4)); }) == ErrorCode::DimensionMismatch);

  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    const Mask x = encode_rle(oracle::random_bitmap(rng, 32, 24));
    const Mask y = encode_rle(oracle::random_bitmap(rng, 32, 24));
    const double v = iou(x, y);
    REQUIRE(v == oracle::brute_iou(x, y));
    REQUIRE(v == iou(y, x));
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    if (!x.is_empty()) REQUIRE(iou(x, x) == 1.0);
  }
}

TEST_CASE("reproject_mask") {
  const Intrinsics k{500.0, 500.0, 319.5, 239.5, 640, 480};
  const Mask m = block(640, 480, 300, 200, 40, 30);
  DepthImage depth(640, 480);
  std::fill(depth.mm.begin(), depth.mm.end(), 2000);

  CHECK(reproject_mask(m, depth, k, Pose::identity()) == m);

  DepthImage none(640, 480);
  CHECK(reproject_mask(m, none, k, Pose::identity()).is_empty());

  // Camera moves +0.1 m along x, so points move -0.1 m in camera coordinates.
  const Pose motion = camera_motion(Pose::identity(), Pose::from_translation({0.1, 0, 0}));
  const Mask moved = reproject_mask(m, depth, k, motion);
  const int shift = -25;  // fx * -0.1 / 2
  CHECK(moved == block(640, 480, 300 + shift, 200, 40, 30));

  // Per-pixel oracle under a rotation plus translation.
  const Pose twist(Eigen::Vector3d(0.05, -0.02, 0.1),
                   Eigen::Quaterniond(Eigen::AngleAxisd(0.05, Eigen::Vector3d(0.3, 1, 0.2).normalized())));
  std::mt19937_64 rng(37);
  std::uniform_int_distribution<int> dmm(800, 4000);
  for (auto& d : depth.mm) d = static_cast<std::uint16_t>(dmm(rng));
  std::set<std::uint32_t> expect;
  m.for_each_pixel([&](int x, int y) {
    const double z = depth.at(x, y) * 1e-3;
    const Eigen::Vector3d p((x - k.cx) * z / k.fx, (y - k.cy) * z / k.fy, z);
    const Eigen::Vector3d q = twist.rotation() * p + twist.translation();
    if (q.z() <= 0) return;
    const double u = std::round(k.fx * q.x() / q.z() + k.cx);
    const double v = std::round(k.fy * q.y() / q.z() + k.cy);
    if (u < 0 || v < 0 || u >= 640 || v >= 480) return;
    expect.insert(static_cast<std::uint32_t>(v * 640 + u));
  });
  const std::vector<std::uint32_t> idx(expect.begin(), expect.end());
  CHECK(reproject_mask(m, depth, k, twist) == Mask::from_sorted_indices(640, 480, idx));
  CHECK(reproject_mask(m, sample_depth(m, depth), k, twist) ==
        reproject_mask(m, depth, k, twist));

  CHECK(code_of([&] { reproject_mask(block(10, 10, 0, 0, 2, 2), depth, k, twist); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("centroid3d") {
  const Intrinsics k{500.0, 500.0, 320.0, 240.0, 640, 480};
  DepthImage depth(640, 480);
  depth.at(320, 240) = 2000;
  const Mask one = Mask::from_sorted_indices(640, 480, std::vector<std::uint32_t>{240 * 640 + 320});
  const Point3 c = centroid3d(one, depth, k, Pose::identity());
  CHECK(c.frame == Frame::Map);
  CHECK((c.p - Eigen::Vector3d(0, 0, 2)).norm() < 1e-12);

  depth.at(310, 240) = 1500;
  depth.at(330, 240) = 1500;
  const Mask pair = Mask::from_sorted_indices(
      640, 480, std::vector<std::uint32_t>{240 * 640 + 310, 240 * 640 + 330});
  CHECK((centroid3d(pair, depth, k, Pose::identity()).p - Eigen::Vector3d(0, 0, 1.5)).norm() <
        1e-12);

  CHECK(code_of([&] { centroid3d(Mask::empty(640, 480), depth, k, Pose::identity()); }) ==
        ErrorCode::EmptyMask);
  const Mask dark = block(640, 480, 0, 0, 3, 3);
  CHECK(code_of([&] { centroid3d(dark, depth, k, Pose::identity()); }) == ErrorCode::NoValidDepth);

  // Brute-force oracle over a random blob on a tilted plane.
  std::mt19937_64 rng(41);
  const Mask blob = encode_rle(oracle::random_bitmap(rng, 640, 480));
  DepthImage plane(640, 480);
  for (int y = 0; y < 480; ++y)
    for (int x = 0; x < 640; ++x) plane.at(x, y) = static_cast<std::uint16_t>(1000 + x + 2 * y);
  plane.at(5, 5) = 0;
  const Pose pose = oracle::random_pose(rng);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  std::size_t n = 0;
  const auto px = oracle::expand(blob);
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!px[i]) continue;
    const int x = static_cast<int>(i % 640), y = static_cast<int>(i / 640);
    const double z = plane.at(x, y) * 1e-3;
    if (z == 0) continue;
    sum += Eigen::Vector3d((x - k.cx) * z / k.fx, (y - k.cy) * z / k.fy, z);
    ++n;
  }
  const Eigen::Vector3d cam_mean = sum / static_cast<double>(n);
  const Eigen::Vector3d expect = pose.rotation() * cam_mean + pose.translation();
  CHECK((centroid3d(blob, plane, k, pose).p - expect).norm() < 1e-9);

  // Translating the camera translates the centroid.
  const Eigen::Vector3d v(0.3, -1.2, 2.0);
  const Pose shifted(pose.translation() + v, pose.rotation());
  CHECK((centroid3d(blob, plane, k, shifted).p - centroid3d(blob, plane, k, pose).p - v).norm() <
        1e-9);

  // Median mode ignores a far outlier pixel.
  DepthImage tri(640, 480);
  tri.at(100, 100) = 1000;
  tri.at(101, 100) = 1000;
  tri.at(102, 100) = 9000;
  const Mask row = block(640, 480, 100, 100, 3, 1);
  CHECK(centroid3d(row, tri, k, Pose::identity(), CentroidMode::Median).z() ==
        doctest::Approx(1.0));
  CHECK(centroid3d(row, tri, k, Pose::identity()).z() == doctest::Approx(11.0 / 3.0));
}
