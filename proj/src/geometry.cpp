#include "semgraph/geometry.hpp"

#include <cmath>
#include <string>

namespace semgraph {

Pose::Pose(const Eigen::Vector3d& translation, const Eigen::Quaterniond& rotation)
    : t_(translation), q_(rotation) {
  const double n = q_.norm();
  if (!t_.allFinite() || !std::isfinite(n) || n == 0.0) {
    throw Error(ErrorCode::InvalidPose, "non-finite translation or zero quaternion");
  }
  q_.coeffs() /= n;
  // Keep w >= 0 so that equal rotations have equal coefficients.
  if (q_.w() < 0) q_.coeffs() = -q_.coeffs();
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation() * b.translation() + a.translation(), a.rotation() * b.rotation()};
}

Pose invert(const Pose& p) {
  const Eigen::Quaterniond qi = p.rotation().conjugate();
  return {-(qi * p.translation()), qi};
}

Pose relative_transform(const Pose& t_prev, const Pose& t_curr) {
  return compose(t_curr, invert(t_prev));
}

Pose camera_motion(const Pose& cam_prev, const Pose& cam_curr) {
  // World-to-camera extrinsics E = T⁻¹; the point motion is E_t · E_{t-1}⁻¹.
  return relative_transform(invert(cam_prev), invert(cam_curr));
}

double translation_distance(const Pose& a, const Pose& b) {
  return (a.translation() - b.translation()).norm();
}

double rotation_angle(const Pose& a, const Pose& b) {
  return a.rotation().angularDistance(b.rotation());
}

void Intrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0) || width <= 0 || height <= 0 || !(cx >= 0) || !(cx < width) ||
      !(cy >= 0) || !(cy < height)) {
    throw Error(ErrorCode::InvalidIntrinsics,
                "need fx, fy > 0, 0 <= cx < width and 0 <= cy < height");
  }
}

bool Intrinsics::contains_pixel(double u, double v) const {
  // A real-valued coordinate belongs to the image if it rounds to a pixel.
  return u >= -0.5 && u < width - 0.5 && v >= -0.5 && v < height - 0.5;
}

Point3 unproject(double u, double v, double depth, const Intrinsics& k) {
  if (!(depth > 0)) {
    throw Error(ErrorCode::NonPositiveDepth, "depth " + std::to_string(depth));
  }
  if (!k.contains_pixel(u, v)) {
    throw Error(ErrorCode::PixelOutOfBounds,
                "(" + std::to_string(u) + ", " + std::to_string(v) + ")");
  }
  return {{(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth}, Frame::Camera};
}

PixelCoord project(const Point3& p, const Intrinsics& k) {
  if (p.frame != Frame::Camera) {
    throw Error(ErrorCode::FrameMismatch, "project expects a camera-frame point");
  }
  if (!(p.z() > 0)) {
    throw Error(ErrorCode::BehindCamera, "z = " + std::to_string(p.z()));
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

Point3 camera_to_map(const Point3& p, const Pose& camera_pose) {
  if (p.frame != Frame::Camera) {
    throw Error(ErrorCode::FrameMismatch, "camera_to_map expects a camera-frame point");
  }
  return {camera_pose.apply(p.p), Frame::Map};
}

Point3 map_to_camera(const Point3& p, const Pose& camera_pose) {
  if (p.frame != Frame::Map) {
    throw Error(ErrorCode::FrameMismatch, "map_to_camera expects a map-frame point");
  }
  return {invert(camera_pose).apply(p.p), Frame::Camera};
}

}  // namespace semgraph
