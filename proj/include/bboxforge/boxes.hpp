#pragma once

#include <algorithm>
#include <optional>

#include "bboxforge/geometry.hpp"

namespace bboxforge {

// Corner-form box in normalized image coordinates (origin upper-left, y down).
// Raw boxes straight out of normalize() may leave [0,1]; boxes returned by
// correct() satisfy 0 <= min < max <= 1 on both axes.
struct Box2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  bool operator==(const Box2D&) const = default;
};

struct CenterBox2D {
  double x_center = 0.0;
  double y_center = 0.0;
  double width = 0.0;
  double height = 0.0;

  bool operator==(const CenterBox2D&) const = default;
};

inline Box2D normalize(const PixelBox& px, const CameraModel& cam) {
  const double w = cam.width();
  const double h = cam.height();
  return {px.x_min / w, px.y_min / h, px.x_max / w, px.y_max / h};
}

// Coordinate correction for partially visible objects. Deletion guards are
// strict, so boxes touching the border survive. nullopt means deleted.
inline std::optional<Box2D> correct(Box2D b) {
  if (b.x_min > 1.0) return std::nullopt;
  b.x_min = std::max(0.0, b.x_min);
  if (b.x_max < 0.0) return std::nullopt;
  b.x_max = std::min(b.x_max, 1.0);

  if (b.y_min > 1.0) return std::nullopt;
  b.y_min = std::max(0.0, b.y_min);
  if (b.y_max < 0.0) return std::nullopt;
  b.y_max = std::min(b.y_max, 1.0);

  // Inverted boxes cannot come out of a projection hull; they are treated as
  // degenerate rather than passed on with negative area.
  if (b.width() <= 0.0 || b.height() <= 0.0) return std::nullopt;
  return b;
}

inline CenterBox2D to_center(const Box2D& b) {
  return {(b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0, b.width(), b.height()};
}

inline Box2D to_corner(const CenterBox2D& c) {
  return {c.x_center - c.width / 2.0, c.y_center - c.height / 2.0,
          c.x_center + c.width / 2.0, c.y_center + c.height / 2.0};
}

}  // namespace bboxforge
