#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bboxforge/boxes.hpp"
#include "bboxforge/geometry.hpp"
#include "bboxforge/semantics.hpp"

namespace bboxforge {

struct FilterConfig {
  // Minimum fraction of a normal box's pixels that must carry the class colour.
  double threshold_small_box = 0.10;
  // Boxes whose normalized area exceeds this are large.
  double large_box_area_ratio = 0.70;
  // Minimum matching fraction for large boxes.
  double threshold_large_box = 0.50;
  // Objects whose centre is farther from the sensor are dropped; nullopt means unlimited.
  std::optional<double> max_distance_m = 100.0;
  // Rounded rectangles with a side shorter than this are dropped.
  int min_side_px = 0;

  void validate() const {
    const auto fraction = [](double v, const char* key) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorKind::OutOfRange, std::string(key) + " must lie in [0, 1]");
      }
    };
    fraction(threshold_small_box, "threshold_small_box");
    fraction(large_box_area_ratio, "large_box_area_ratio");
    fraction(threshold_large_box, "threshold_large_box");
    if (max_distance_m && !(*max_distance_m > 0.0)) {
      throw Error(ErrorKind::OutOfRange, "max_distance must be positive");
    }
    if (min_side_px < 0) throw Error(ErrorKind::OutOfRange, "min_side_px must be >= 0");
  }
};

enum class Decision {
  Kept,
  DeletedGhost,
  DeletedLargeGhost,
  DeletedOutOfFrame,
  DeletedBeyondRange,
  DeletedDegenerate,
};

inline constexpr std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::Kept: return "Kept";
    case Decision::DeletedGhost: return "DeletedGhost";
    case Decision::DeletedLargeGhost: return "DeletedLargeGhost";
    case Decision::DeletedOutOfFrame: return "DeletedOutOfFrame";
    case Decision::DeletedBeyondRange: return "DeletedBeyondRange";
    case Decision::DeletedDegenerate: return "DeletedDegenerate";
  }
  return "?";
}

inline std::optional<Decision> parse_decision(std::string_view s) {
  for (Decision d : {Decision::Kept, Decision::DeletedGhost, Decision::DeletedLargeGhost,
                     Decision::DeletedOutOfFrame, Decision::DeletedBeyondRange,
                     Decision::DeletedDegenerate}) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

enum class SizeClass { Normal, Large };

struct FilterVerdict {
  Decision decision = Decision::DeletedOutOfFrame;
  std::int64_t matched_pixels = 0;
  std::int64_t box_pixels = 0;
  double match_ratio = 0.0;
  // Pixel rectangle the counts were taken over; empty when no rectangle exists.
  PixelRect rect;
  SizeClass size = SizeClass::Normal;

  bool kept() const { return decision == Decision::Kept; }
  bool operator==(const FilterVerdict&) const = default;
};

inline SizeClass classify_size(const Box2D& b, const FilterConfig& cfg) {
  return b.area() > cfg.large_box_area_ratio ? SizeClass::Large : SizeClass::Normal;
}

// Outward rounding of a corrected box onto the pixel grid, clamped to the image.
inline PixelRect to_pixel_rect(const Box2D& b, int width, int height) {
  constexpr double snap = 1e-9;
  const auto lo = [](double v, int n) {
    return std::clamp(static_cast<int>(std::floor(v * n + snap)), 0, n);
  };
  const auto hi = [](double v, int n) {
    return std::clamp(static_cast<int>(std::ceil(v * n - snap)), 0, n);
  };
  return {lo(b.x_min, width), lo(b.y_min, height), hi(b.x_max, width), hi(b.y_max, height)};
}

template <typename T>
concept PixelCounter = requires(const T& t, std::uint8_t c, const PixelRect& r) {
  { t.count(c, r) } -> std::convertible_to<std::int64_t>;
  { t.width() } -> std::convertible_to<int>;
  { t.height() } -> std::convertible_to<int>;
};

// Ghost-box test on a corrected box: count pixels of the class colour inside
// the box and compare the fraction against the threshold for its size class.
// A box needs at least one matching pixel to survive, so zero thresholds keep
// exactly the boxes with any evidence.
template <PixelCounter Counter>
FilterVerdict filter_box(const Box2D& b, std::uint8_t palette_index, const Counter& counter,
                         const FilterConfig& cfg) {
  FilterVerdict v;
  v.rect = to_pixel_rect(b, counter.width(), counter.height());
  v.size = classify_size(b, cfg);
  if (v.rect.empty()) {
    v.decision = Decision::DeletedDegenerate;
    return v;
  }
  v.box_pixels = v.rect.area();
  v.matched_pixels = counter.count(palette_index, v.rect);
  v.match_ratio = static_cast<double>(v.matched_pixels) / static_cast<double>(v.box_pixels);

  const double threshold =
      v.size == SizeClass::Large ? cfg.threshold_large_box : cfg.threshold_small_box;
  if (v.matched_pixels > 0 && v.match_ratio >= threshold) {
    v.decision = Decision::Kept;
  } else {
    v.decision = v.size == SizeClass::Large ? Decision::DeletedLargeGhost : Decision::DeletedGhost;
  }
  return v;
}

struct BoxResult {
  // Corrected box; absent when the object never reached the pixel test.
  std::optional<Box2D> box;
  FilterVerdict verdict;
};

// Everything before the pixel test: range cap, projection, normalization,
// correction and the minimum side check. Returns a finished verdict when the
// box is dropped on the way, otherwise the corrected box.
inline std::variant<FilterVerdict, Box2D> prepare_box(const Box3D& b,
                                                      const RigidTransform& sensor_from_world,
                                                      const CameraModel& cam,
                                                      const FilterConfig& cfg) {
  FilterVerdict dropped;
  if (cfg.max_distance_m) {
    const double dist = sensor_from_world.apply(b.center).norm();
    if (dist > *cfg.max_distance_m) {
      dropped.decision = Decision::DeletedBeyondRange;
      return dropped;
    }
  }
  const auto raw = project_box3d(cam, sensor_from_world, b);
  if (!raw) return dropped;
  const auto corrected = correct(normalize(*raw, cam));
  if (!corrected) return dropped;
  if (cfg.min_side_px > 0) {
    const PixelRect r = to_pixel_rect(*corrected, cam.width(), cam.height());
    if (r.width() < cfg.min_side_px || r.height() < cfg.min_side_px) {
      dropped.decision = Decision::DeletedDegenerate;
      dropped.rect = r;
      return dropped;
    }
  }
  return *corrected;
}

template <PixelCounter Counter>
BoxResult evaluate_box(const Box3D& b, const RigidTransform& sensor_from_world,
                       const CameraModel& cam, const ClassPalette& palette,
                       const Counter& counter, const FilterConfig& cfg) {
  auto prepared = prepare_box(b, sensor_from_world, cam, cfg);
  if (auto* v = std::get_if<FilterVerdict>(&prepared)) return {std::nullopt, *v};
  const Box2D& box = std::get<Box2D>(prepared);
  return {box, filter_box(box, palette.index_of(b.class_id), counter, cfg)};
}

enum class CountingPath { Integral, Naive };

inline void check_dimensions(const CameraModel& cam, const SemanticMask& mask) {
  if (mask.width() != cam.width() || mask.height() != cam.height()) {
    throw Error(ErrorKind::DimensionMismatch,
                "mask " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                    " vs camera " + std::to_string(cam.width()) + "x" +
                    std::to_string(cam.height()));
  }
}

// Runs the full per-box pipeline over a frame. `sensor_pose` is the sensor's
// pose in the world (world_from_sensor). One result per input box, in input
// order. Integral tables are built only for the colours the boxes need.
inline std::vector<BoxResult> filter_frame(std::span<const Box3D> boxes,
                                           const RigidTransform& sensor_pose,
                                           const CameraModel& cam, const SemanticMask& mask,
                                           const ClassPalette& palette, const FilterConfig& cfg,
                                           CountingPath path = CountingPath::Integral) {
  check_dimensions(cam, mask);
  cfg.validate();
  const RigidTransform sensor_from_world = invert(sensor_pose);

  std::vector<std::variant<FilterVerdict, Box2D>> prepared;
  prepared.reserve(boxes.size());
  std::vector<std::uint8_t> needed;
  for (const Box3D& b : boxes) {
    prepared.push_back(prepare_box(b, sensor_from_world, cam, cfg));
    if (std::holds_alternative<Box2D>(prepared.back())) {
      needed.push_back(palette.index_of(b.class_id));
    }
  }

  std::vector<BoxResult> out;
  out.reserve(boxes.size());
  const auto finish = [&](const auto& counter) {
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (const auto* v = std::get_if<FilterVerdict>(&prepared[i])) {
        out.push_back({std::nullopt, *v});
      } else {
        const Box2D& box = std::get<Box2D>(prepared[i]);
        out.push_back({box, filter_box(box, palette.index_of(boxes[i].class_id), counter, cfg)});
      }
    }
  };
  if (path == CountingPath::Integral) {
    finish(ClassIntegralImage(mask, needed));
  } else {
    finish(NaiveCounter(mask));
  }
  return out;
}

// A 3D box is kept exactly when its 2D reduction is kept.
inline BoxResult filter_box3d(const Box3D& b, const RigidTransform& sensor_pose,
                              const CameraModel& cam, const SemanticMask& mask,
                              const ClassPalette& palette, const FilterConfig& cfg) {
  check_dimensions(cam, mask);
  cfg.validate();
  return evaluate_box(b, invert(sensor_pose), cam, palette, NaiveCounter(mask), cfg);
}

}  // namespace bboxforge
