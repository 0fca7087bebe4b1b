#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "semgraph/geometry.hpp"

namespace semgraph {

/// Dense row-major binary image, one byte per pixel (0 or 1).
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Bitmap() = default;
  Bitmap(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Bitmap&) const = default;
};

/// Run-length encoded binary mask. Runs are row-major and alternate between
/// background and foreground, starting with a (possibly empty) background run.
/// The encoding is canonical: only the first run may be zero and the last run
/// is never zero, so every bitmap has exactly one representation.
class Mask {
 public:
  Mask() = default;

  /// Validates the run list; throws MalformedRle on a bad sum or interior
  /// zero-length run.
  static Mask from_counts(int width, int height, std::vector<std::uint32_t> counts);
  static Mask empty(int width, int height);
  /// `indices` are row-major pixel indices, strictly increasing.
  static Mask from_sorted_indices(int width, int height, std::span<const std::uint32_t> indices);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }

  /// Number of foreground pixels.
  std::size_t area() const { return area_; }
  bool is_empty() const { return area_ == 0; }

  /// Calls f(x, y) for every foreground pixel in row-major order.
  template <class F>
  void for_each_pixel(F&& f) const {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      const std::size_t end = pos + counts_[i];
      if (i % 2 == 1) {
        for (std::size_t idx = pos; idx < end; ++idx) {
          f(static_cast<int>(idx % width_), static_cast<int>(idx / width_));
        }
      }
      pos = end;
    }
  }

  bool operator==(const Mask&) const = default;

 private:
  Mask(int w, int h, std::vector<std::uint32_t> counts, std::size_t area)
      : width_(w), height_(h), counts_(std::move(counts)), area_(area) {}

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> counts_;
  std::size_t area_ = 0;
};

Mask encode_rle(const Bitmap& bitmap);
Bitmap decode_rle(const Mask& mask);

/// |A∩B| / |A∪B|; two empty masks score 0 so that empty detections never
/// associate. Throws DimensionMismatch.
double iou(const Mask& a, const Mask& b);

/// 16-bit depth image in millimetres, 0 marks an invalid reading.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> mm;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), mm(static_cast<std::size_t>(w) * h, 0) {}

  std::uint16_t& at(int x, int y) { return mm[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t at(int x, int y) const { return mm[static_cast<std::size_t>(y) * width + x]; }
  double meters(int x, int y) const { return at(x, y) * 1e-3; }
  bool operator==(const DepthImage&) const = default;
};

/// Depth readings under the foreground pixels of `mask`, in the mask's pixel
/// order. Lets a caller keep what reprojection needs without the full image.
std::vector<std::uint16_t> sample_depth(const Mask& mask, const DepthImage& depth);

/// Moves a mask through a camera motion: every foreground pixel with valid
/// depth is unprojected, transformed by `delta_t` (previous-camera to
/// current-camera coordinates), projected and rounded to the nearest pixel.
/// Pixels that land behind the camera or outside the image are dropped.
Mask reproject_mask(const Mask& mask, const DepthImage& depth_prev, const Intrinsics& k,
                    const Pose& delta_t);

/// Same as reproject_mask, with depths given per foreground pixel (see
/// sample_depth).
Mask reproject_mask(const Mask& mask, std::span<const std::uint16_t> depth_mm,
                    const Intrinsics& k, const Pose& delta_t);

enum class CentroidMode { Mean, Median };

/// Centroid of the mask's unprojected pixels, in the map frame. Pixels with
/// depth 0 are skipped. Throws EmptyMask or NoValidDepth.
Point3 centroid3d(const Mask& mask, const DepthImage& depth, const Intrinsics& k,
                  const Pose& camera_pose, CentroidMode mode = CentroidMode::Mean);

}  // namespace semgraph
