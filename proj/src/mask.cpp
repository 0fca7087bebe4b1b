#include "semgraph/mask.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace semgraph {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "mask dimensions must be positive, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

void require_same_dims(int w0, int h0, int w1, int h1, const char* what) {
  if (w0 != w1 || h0 != h1) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(w0) + "x" + std::to_string(h0) +
                    " vs " + std::to_string(w1) + "x" + std::to_string(h1));
  }
}

using Interval = std::pair<std::size_t, std::size_t>;

std::vector<Interval> foreground_runs(const Mask& m) {
  std::vector<Interval> out;
  out.reserve(m.counts().size() / 2);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < m.counts().size(); ++i) {
    const std::size_t end = pos + m.counts()[i];
    if (i % 2 == 1) out.emplace_back(pos, end);
    pos = end;
  }
  return out;
}

}  // namespace

Mask Mask::from_counts(int width, int height, std::vector<std::uint32_t> counts) {
  check_dims(width, height);
  if (counts.empty()) {
    throw Error(ErrorCode::MalformedRle, "empty run list");
  }
  std::size_t total = 0;
  std::size_t area = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i > 0 && counts[i] == 0) {
      throw Error(ErrorCode::MalformedRle, "zero-length run at position " + std::to_string(i));
    }
    total += counts[i];
    if (i % 2 == 1) area += counts[i];
  }
  const std::size_t expected = static_cast<std::size_t>(width) * height;
  if (total != expected) {
    throw Error(ErrorCode::MalformedRle,
                "runs sum to " + std::to_string(total) + ", expected " + std::to_string(expected));
  }
  return Mask(width, height, std::move(counts), area);
}

Mask Mask::empty(int width, int height) {
  check_dims(width, height);
  return Mask(width, height, {static_cast<std::uint32_t>(width) * height}, 0);
}

Mask Mask::from_sorted_indices(int width, int height, std::span<const std::uint32_t> indices) {
  check_dims(width, height);
  const auto n = static_cast<std::uint32_t>(width) * height;
  std::vector<std::uint32_t> counts;
  std::uint32_t pos = 0;  // end of the last emitted run
  std::size_t i = 0;
  while (i < indices.size()) {
    const std::uint32_t start = indices[i];
    if (start >= n || (i > 0 && start <= indices[i - 1])) {
      throw Error(ErrorCode::MalformedRle, "pixel indices must be increasing and in range");
    }
    std::uint32_t end = start + 1;
    while (i + 1 < indices.size() && indices[i + 1] == end) {
      ++end;
      ++i;
    }
    ++i;
    counts.push_back(start - pos);
    counts.push_back(end - start);
    pos = end;
  }
  if (counts.empty() || pos < n) counts.push_back(n - pos);
  return Mask(width, height, std::move(counts), indices.size());
}

Mask encode_rle(const Bitmap& bitmap) {
  check_dims(bitmap.width, bitmap.height);
  if (bitmap.data.size() != static_cast<std::size_t>(bitmap.width) * bitmap.height) {
    throw Error(ErrorCode::DimensionMismatch, "bitmap buffer size does not match its dimensions");
  }
  std::vector<std::uint32_t> counts;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t px : bitmap.data) {
    const std::uint8_t v = px ? 1 : 0;
    if (v != current) {
      counts.push_back(run);
      run = 0;
      current = v;
    }
    ++run;
  }
  counts.push_back(run);
  return Mask::from_counts(bitmap.width, bitmap.height, std::move(counts));
}

Bitmap decode_rle(const Mask& mask) {
  Bitmap out(mask.width(), mask.height());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < mask.counts().size(); ++i) {
    const std::size_t end = pos + mask.counts()[i];
    if (i % 2 == 1) std::fill(out.data.begin() + pos, out.data.begin() + end, 1);
    pos = end;
  }
  return out;
}

double iou(const Mask& a, const Mask& b) {
  require_same_dims(a.width(), a.height(), b.width(), b.height(), "iou");
  if (a.is_empty() && b.is_empty()) return 0.0;
  const auto ra = foreground_runs(a);
  const auto rb = foreground_runs(b);
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ra.size() && j < rb.size()) {
    const std::size_t lo = std::max(ra[i].first, rb[j].first);
    const std::size_t hi = std::min(ra[i].second, rb[j].second);
    if (hi > lo) inter += hi - lo;
    if (ra[i].second < rb[j].second) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::uint16_t> sample_depth(const Mask& mask, const DepthImage& depth) {
  require_same_dims(mask.width(), mask.height(), depth.width, depth.height, "sample_depth");
  std::vector<std::uint16_t> out;
  out.reserve(mask.area());
  mask.for_each_pixel([&](int x, int y) { out.push_back(depth.at(x, y)); });
  return out;
}

Mask reproject_mask(const Mask& mask, const DepthImage& depth_prev, const Intrinsics& k,
                    const Pose& delta_t) {
  return reproject_mask(mask, sample_depth(mask, depth_prev), k, delta_t);
}

Mask reproject_mask(const Mask& mask, std::span<const std::uint16_t> depth_mm,
                    const Intrinsics& k, const Pose& delta_t) {
  require_same_dims(mask.width(), mask.height(), k.width, k.height, "reproject_mask");
  if (depth_mm.size() != mask.area()) {
    throw Error(ErrorCode::DimensionMismatch, "one depth sample per mask pixel required");
  }
  const Eigen::Matrix3d r = delta_t.rotation_matrix();
  const Eigen::Vector3d& t = delta_t.translation();
  std::vector<std::uint32_t> landed;
  landed.reserve(mask.area());
  std::size_t n = 0;
  mask.for_each_pixel([&](int x, int y) {
    const std::uint16_t d = depth_mm[n++];
    if (d == 0) return;
    const Point3 p = unproject(x, y, d * 1e-3, k);
    const Point3 q{r * p.p + t, Frame::Camera};
    if (!(q.z() > 0)) return;
    const PixelCoord uv = project(q, k);
    const long px = std::lround(uv.u);
    const long py = std::lround(uv.v);
    if (px < 0 || py < 0 || px >= k.width || py >= k.height) return;
    landed.push_back(static_cast<std::uint32_t>(py * k.width + px));
  });
  std::sort(landed.begin(), landed.end());
  landed.erase(std::unique(landed.begin(), landed.end()), landed.end());
  return Mask::from_sorted_indices(k.width, k.height, landed);
}

Point3 centroid3d(const Mask& mask, const DepthImage& depth, const Intrinsics& k,
                  const Pose& camera_pose, CentroidMode mode) {
  require_same_dims(mask.width(), mask.height(), depth.width, depth.height, "centroid3d");
  require_same_dims(mask.width(), mask.height(), k.width, k.height, "centroid3d");
  if (mask.is_empty()) throw Error(ErrorCode::EmptyMask, "centroid of an empty mask");

  std::vector<Eigen::Vector3d> points;
  points.reserve(mask.area());
  mask.for_each_pixel([&](int x, int y) {
    const std::uint16_t d = depth.at(x, y);
    if (d == 0) return;
    points.push_back(camera_to_map(unproject(x, y, d * 1e-3, k), camera_pose).p);
  });
  if (points.empty()) {
    throw Error(ErrorCode::NoValidDepth, "no foreground pixel has a depth reading");
  }

  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  if (mode == CentroidMode::Mean) {
    for (const auto& p : points) c += p;
    c /= static_cast<double>(points.size());
  } else {
    std::vector<double> axis(points.size());
    for (int a = 0; a < 3; ++a) {
      for (std::size_t i = 0; i < points.size(); ++i) axis[i] = points[i][a];
      auto mid = axis.begin() + static_cast<std::ptrdiff_t>(axis.size() / 2);
      std::nth_element(axis.begin(), mid, axis.end());
      double m = *mid;
      if (axis.size() % 2 == 0) m = 0.5 * (m + *std::max_element(axis.begin(), mid));
      c[a] = m;
    }
  }
  return {c, Frame::Map};
}

}  // namespace semgraph
