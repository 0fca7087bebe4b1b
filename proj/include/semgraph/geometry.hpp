#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "semgraph/error.hpp"

namespace semgraph {

enum class Frame { Camera, Map };

/// Rigid transform in SE(3). Applying a pose to a point rotates it, then
/// translates it. Poses read from frame logs are camera-in-map.
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Vector3d& translation, const Eigen::Quaterniond& rotation);

  static Pose identity() { return {}; }
  static Pose from_translation(const Eigen::Vector3d& t) {
    return {t, Eigen::Quaterniond::Identity()};
  }

  const Eigen::Vector3d& translation() const { return t_; }
  const Eigen::Quaterniond& rotation() const { return q_; }
  Eigen::Matrix3d rotation_matrix() const { return q_.toRotationMatrix(); }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return q_ * p + t_; }

 private:
  Eigen::Vector3d t_ = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

/// a∘b: the transform that applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

/// ΔT = t_curr · t_prev⁻¹, so that compose(ΔT, t_prev) == t_curr.
Pose relative_transform(const Pose& t_prev, const Pose& t_curr);

/// Motion taking points expressed in the previous camera frame into the
/// current camera frame, given camera-in-map poses.
Pose camera_motion(const Pose& cam_prev, const Pose& cam_curr);

/// Translation distance and rotation angle (radians) between two poses.
double translation_distance(const Pose& a, const Pose& b);
double rotation_angle(const Pose& a, const Pose& b);

struct Intrinsics {
  double fx = 0;
  double fy = 0;
  double cx = 0;
  double cy = 0;
  int width = 0;
  int height = 0;

  /// Throws InvalidIntrinsics if the pinhole parameters are inconsistent.
  void validate() const;
  bool contains_pixel(double u, double v) const;

  bool operator==(const Intrinsics&) const = default;
};

struct Point3 {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Frame frame = Frame::Map;

  double x() const { return p.x(); }
  double y() const { return p.y(); }
  double z() const { return p.z(); }
  bool finite() const { return p.allFinite(); }
};

struct PixelCoord {
  double u = 0;
  double v = 0;
};

Point3 unproject(double u, double v, double depth, const Intrinsics& k);
PixelCoord project(const Point3& p, const Intrinsics& k);
Point3 camera_to_map(const Point3& p, const Pose& camera_pose);
Point3 map_to_camera(const Point3& p, const Pose& camera_pose);

}  // namespace semgraph
