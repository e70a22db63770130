#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "bboxforge/classes.hpp"
#include "bboxforge/error.hpp"

namespace bboxforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Near plane used when clipping 3D boxes against the camera, in meters.
inline constexpr double kNearPlane = 0.05;

// Rotation about +z by theta (radians).
inline Mat3 yaw_rotation(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat3 r;
  r << c, -s, 0.0,
       s,  c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  if (!r.allFinite()) return false;
  const Mat3 gram = r.transpose() * r;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

// Proper rigid motion p -> R p + T. Frame conventions are carried by the
// variable name: `sensor_from_world` maps world points into the sensor frame.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  // (this * other).apply(p) == this->apply(other.apply(p))
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
};

inline Vec3 apply_transform(const RigidTransform& t, const Vec3& p) { return t.apply(p); }

inline RigidTransform invert(const RigidTransform& t) { return t.inverse(); }

// Pinhole camera with square pixels and the principal point at the image centre.
//
// Sensor frame: +x forward along the optical axis, +y right, +z up.
// Image frame: origin at the upper-left corner, u rightward, v downward;
// pixel i spans [i, i+1).
class CameraModel {
 public:
  CameraModel(int width_px, int height_px, double fov_deg)
      : width_(width_px), height_(height_px), fov_deg_(fov_deg) {
    if (width_px <= 0 || height_px <= 0) {
      throw Error(ErrorKind::OutOfRange, "camera dimensions must be positive");
    }
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
      throw Error(ErrorKind::OutOfRange, "camera fov_deg must lie in (0, 180)");
    }
    focal_ = width_px / (2.0 * std::tan(fov_deg * M_PI / 360.0));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double fov_deg() const { return fov_deg_; }
  double focal() const { return focal_; }
  double cx() const { return width_ / 2.0; }
  double cy() const { return height_ / 2.0; }

  bool operator==(const CameraModel& o) const {
    return width_ == o.width_ && height_ == o.height_ && fov_deg_ == o.fov_deg_;
  }

 private:
  int width_;
  int height_;
  double fov_deg_;
  double focal_;
};

struct PixelProjection {
  double u;
  double v;
  double depth;
};

// Throws DepthNonPositive for points at or behind the image plane; u and v are
// not clipped to the image.
inline PixelProjection project_point(const CameraModel& cam, const Vec3& p_sensor) {
  if (!(p_sensor.x() > 0.0)) {
    throw Error(ErrorKind::DepthNonPositive, "point depth " + std::to_string(p_sensor.x()));
  }
  const double f = cam.focal();
  return {cam.cx() + f * p_sensor.y() / p_sensor.x(),
          cam.cy() - f * p_sensor.z() / p_sensor.x(), p_sensor.x()};
}

// Oriented 3D box. `extent` holds half-lengths along the box's local axes.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 extent = Vec3::Ones();
  Mat3 orientation = Mat3::Identity();
  ObjectClass class_id = ObjectClass::Car;
  std::string object_id;
};

// Corner i = center + orientation * (sx*ex, sy*ey, sz*ez) where sx is +1 when
// bit 0 of i is set and -1 otherwise, sy follows bit 1 and sz bit 2.
inline std::array<Vec3, 8> box3d_vertices(const Box3D& b) {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local((i & 1) ? b.extent.x() : -b.extent.x(),
                     (i & 2) ? b.extent.y() : -b.extent.y(),
                     (i & 4) ? b.extent.z() : -b.extent.z());
    out[i] = b.center + b.orientation * local;
  }
  return out;
}

// The 12 edges as vertex index pairs differing in exactly one bit.
inline constexpr std::array<std::pair<int, int>, 12> kBoxEdges = {{
    {0, 1}, {2, 3}, {4, 5}, {6, 7},
    {0, 2}, {1, 3}, {4, 6}, {5, 7},
    {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

// Pixel-space corner box; may extend beyond the image.
struct PixelBox {
  double x_min;
  double y_min;
  double x_max;
  double y_max;
};

// Axis-aligned hull of the box's projection after clipping against the near
// plane. Returns nullopt (culled) when nothing of the box lies at depth >=
// kNearPlane. The hull is deliberately not clipped to the image.
inline std::optional<PixelBox> project_box3d(const CameraModel& cam,
                                             const RigidTransform& sensor_from_world,
                                             const Box3D& b) {
  std::array<Vec3, 8> v = box3d_vertices(b);
  for (auto& p : v) p = sensor_from_world.apply(p);

  constexpr double inf = std::numeric_limits<double>::infinity();
  PixelBox hull{inf, inf, -inf, -inf};
  bool any = false;
  const double f = cam.focal();
  auto add = [&](const Vec3& p) {
    const double u = cam.cx() + f * p.y() / p.x();
    const double w = cam.cy() - f * p.z() / p.x();
    hull.x_min = std::min(hull.x_min, u);
    hull.x_max = std::max(hull.x_max, u);
    hull.y_min = std::min(hull.y_min, w);
    hull.y_max = std::max(hull.y_max, w);
    any = true;
  };

  for (const auto& p : v) {
    if (p.x() >= kNearPlane) add(p);
  }
  if (!any) return std::nullopt;

  for (const auto& [i, j] : kBoxEdges) {
    const double da = v[i].x() - kNearPlane;
    const double db = v[j].x() - kNearPlane;
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double t = da / (da - db);
      Vec3 p = v[i] + t * (v[j] - v[i]);
      p.x() = kNearPlane;
      add(p);
    }
  }
  return hull;
}

}  // namespace bboxforge
