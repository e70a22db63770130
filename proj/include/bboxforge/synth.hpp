#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bboxforge/boxes.hpp"
#include "bboxforge/filter.hpp"
#include "bboxforge/geometry.hpp"
#include "bboxforge/semantics.hpp"

namespace bboxforge::synth {

// What the generator intended an object to be; the renderer decides what it
// actually is.
enum class Category {
  Visible,
  PartiallyOccluded,
  FullyOccluded,
  BehindCamera,
  BeyondRange,
  NearPlane,
  OutOfFrame,
};

inline constexpr std::string_view to_string(Category c) {
  switch (c) {
    case Category::Visible: return "visible";
    case Category::PartiallyOccluded: return "partially_occluded";
    case Category::FullyOccluded: return "fully_occluded";
    case Category::BehindCamera: return "behind_camera";
    case Category::BeyondRange: return "beyond_range";
    case Category::NearPlane: return "near_plane";
    case Category::OutOfFrame: return "out_of_frame";
  }
  return "?";
}

inline std::optional<Category> parse_category(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Category::OutOfFrame); ++i) {
    if (to_string(static_cast<Category>(i)) == s) return static_cast<Category>(i);
  }
  return std::nullopt;
}

struct SceneObject {
  Box3D box;
  Category category = Category::Visible;
};

// Opaque scenery box (a wall or building front) painted with a palette entry.
struct Occluder {
  Vec3 center = Vec3::Zero();
  Vec3 extent = Vec3::Ones();
  Mat3 orientation = Mat3::Identity();
  std::string palette_entry = "building";
};

struct SceneSpec {
  CameraModel camera{640, 360, 90.0};
  RigidTransform sensor_pose;  // world_from_sensor
  std::vector<SceneObject> objects;
  std::vector<Occluder> occluders;
  std::uint64_t seed = 0;
  double max_distance_m = 100.0;
};

struct ObjectVisibility {
  std::string object_id;
  std::int64_t visible_pixel_count = 0;
  // Pixels of the corrected, rounded rectangle; 0 when the box never reaches the image.
  std::int64_t projected_box_pixel_count = 0;
  bool ground_truth_visible = false;
  // Distance from the sensor to the box centre.
  double distance_m = 0.0;
};

struct VisibilityReport {
  std::vector<ObjectVisibility> objects;
};

struct RenderedScene {
  SemanticMask mask;
  RgbImage rgb;
  std::vector<Box3D> boxes;
  VisibilityReport report;
};

// The rectangle filter_box would count over, or nullopt when the box is culled
// or deleted before the pixel test.
inline std::optional<PixelRect> filter_rect(const CameraModel& cam,
                                            const RigidTransform& sensor_from_world,
                                            const Box3D& b) {
  const auto raw = project_box3d(cam, sensor_from_world, b);
  if (!raw) return std::nullopt;
  const auto corrected = correct(normalize(*raw, cam));
  if (!corrected) return std::nullopt;
  return to_pixel_rect(*corrected, cam.width(), cam.height());
}

namespace detail {

struct Drawable {
  Vec3 center_s;  // sensor frame
  Mat3 rot_s;
  Vec3 extent;
  std::uint8_t palette_index;
  std::string key;  // tie-break on equal depth, independent of draw order
  int object = -1;  // index into spec.objects, -1 for occluders
  std::optional<PixelBox> hull;
  Mat3 local_from_sensor = Mat3::Identity();
  Vec3 origin_local = Vec3::Zero();

  void prepare() {
    local_from_sensor = rot_s.transpose();
    origin_local = -(local_from_sensor * center_s);
  }
};

// Depth where the camera ray (1, dy, dz) enters the box, clipped to the near
// plane; nullopt on a miss.
inline std::optional<double> ray_entry(const Drawable& d, double dy, double dz) {
  const Vec3 dir_l = d.local_from_sensor * Vec3(1.0, dy, dz);
  const Vec3& org_l = d.origin_local;
  double t0 = kNearPlane;
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double e = d.extent[k];
    if (std::abs(dir_l[k]) < 1e-15) {
      if (std::abs(org_l[k]) > e) return std::nullopt;
      continue;
    }
    double a = (-e - org_l[k]) / dir_l[k];
    double b = (e - org_l[k]) / dir_l[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

}  // namespace detail

// Depth-buffered rasterization of objects and occluders. A pixel belongs to the
// nearest box its centre ray enters at depth >= kNearPlane. Pixels no box
// covers show sky above the horizon and road below it.
inline RenderedScene render(const SceneSpec& spec,
                            const ClassPalette& palette = ClassPalette::carla()) {
  const CameraModel& cam = spec.camera;
  const int w = cam.width();
  const int h = cam.height();
  const RigidTransform sensor_from_world = invert(spec.sensor_pose);

  const auto entry_index = [&](std::string_view name) {
    const int i = palette.find(name);
    if (i < 0) throw Error(ErrorKind::MalformedPalette, "palette lacks '" + std::string(name) + "'");
    return static_cast<std::uint8_t>(i);
  };

  std::vector<detail::Drawable> drawables;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const Box3D& b = spec.objects[i].box;
    drawables.push_back({sensor_from_world.apply(b.center),
                         sensor_from_world.rotation * b.orientation, b.extent,
                         palette.index_of(b.class_id), "o:" + b.object_id, static_cast<int>(i),
                         project_box3d(cam, sensor_from_world, b)});
  }
  for (std::size_t i = 0; i < spec.occluders.size(); ++i) {
    const Occluder& o = spec.occluders[i];
    Box3D as_box{o.center, o.extent, o.orientation, ObjectClass::Car, {}};
    drawables.push_back({sensor_from_world.apply(o.center),
                         sensor_from_world.rotation * o.orientation, o.extent,
                         entry_index(o.palette_entry), "w:" + std::to_string(i), -1,
                         project_box3d(cam, sensor_from_world, as_box)});
  }

  for (auto& d : drawables) d.prepare();

  SemanticMask mask(w, h);
  const std::uint8_t sky = entry_index("sky");
  const std::uint8_t road = entry_index("road");
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) mask.set(x, y, y + 0.5 < cam.cy() ? sky : road);
  }

  std::vector<double> depth(static_cast<std::size_t>(w) * h,
                            std::numeric_limits<double>::infinity());
  std::vector<int> owner(depth.size(), -1);
  const double f = cam.focal();

  for (std::size_t di = 0; di < drawables.size(); ++di) {
    const auto& d = drawables[di];
    if (!d.hull) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(d.hull->x_min)));
    const int x1 = std::min(w, static_cast<int>(std::ceil(d.hull->x_max)));
    const int y0 = std::max(0, static_cast<int>(std::floor(d.hull->y_min)));
    const int y1 = std::min(h, static_cast<int>(std::ceil(d.hull->y_max)));
    for (int y = y0; y < y1; ++y) {
      const double dz = -(y + 0.5 - cam.cy()) / f;
      for (int x = x0; x < x1; ++x) {
        const double dy = (x + 0.5 - cam.cx()) / f;
        const auto t = detail::ray_entry(d, dy, dz);
        if (!t) continue;
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const int cur = owner[p];
        if (*t < depth[p] || (*t == depth[p] && cur >= 0 && d.key < drawables[cur].key)) {
          depth[p] = *t;
          owner[p] = static_cast<int>(di);
          mask.set(x, y, d.palette_index);
        }
      }
    }
  }

  RenderedScene out{std::move(mask), RgbImage(w, h), {}, {}};
  std::vector<std::int64_t> visible(spec.objects.size(), 0);
  for (std::size_t p = 0; p < owner.size(); ++p) {
    const int x = static_cast<int>(p % w);
    const int y = static_cast<int>(p / w);
    Rgb c = palette.entry(out.mask.at(x, y)).color;
    if (owner[p] >= 0) {
      const int obj = drawables[owner[p]].object;
      if (obj >= 0) ++visible[obj];
      // Flat shading by depth, for viewing only.
      const double shade = 1.0 - 0.5 * std::min(depth[p] / 100.0, 1.0);
      c = {static_cast<std::uint8_t>(c.r * shade), static_cast<std::uint8_t>(c.g * shade),
           static_cast<std::uint8_t>(c.b * shade)};
    }
    out.rgb.set(x, y, c);
  }

  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const Box3D& b = spec.objects[i].box;
    out.boxes.push_back(b);
    ObjectVisibility v;
    v.object_id = b.object_id;
    v.visible_pixel_count = visible[i];
    if (const auto r = filter_rect(cam, sensor_from_world, b)) v.projected_box_pixel_count = r->area();
    v.ground_truth_visible = visible[i] > 0;
    v.distance_m = sensor_from_world.apply(b.center).norm();
    out.report.objects.push_back(std::move(v));
  }
  return out;
}

struct SceneKnobs {
  int width = 640;
  int height = 360;
  double fov_deg = 90.0;
  int visible = 3;
  int partially_occluded = 2;
  int fully_occluded = 2;
  int behind_camera = 1;
  int beyond_range = 1;
  int out_of_frame = 1;
  double near_plane_probability = 0.3;
  double max_distance_m = 100.0;
  int max_attempts = 40;
};

// Deterministic across platforms: splitmix64 with hand-rolled uniform draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

inline Vec3 nominal_extent(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car: return {2.3, 1.0, 0.75};
    case ObjectClass::Bus: return {6.0, 1.4, 1.6};
    case ObjectClass::Truck: return {3.6, 1.3, 1.6};
    case ObjectClass::Van: return {2.6, 1.05, 1.0};
    case ObjectClass::Walker: return {0.3, 0.3, 0.9};
    case ObjectClass::TrafficLight: return {0.3, 0.3, 0.6};
  }
  return {1.0, 1.0, 1.0};
}

namespace detail {

constexpr double kSensorHeight = 1.7;

struct Placed {
  PixelRect rect;
  std::uint8_t palette_index;
};

class SceneBuilder {
 public:
  SceneBuilder(std::uint64_t seed, const SceneKnobs& knobs, const ClassPalette& palette)
      : rng_(seed), knobs_(knobs), palette_(palette) {
    spec_.camera = CameraModel(knobs.width, knobs.height, knobs.fov_deg);
    spec_.seed = seed;
    spec_.max_distance_m = knobs.max_distance_m;
    const double yaw = rng_.uniform(-M_PI, M_PI);
    spec_.sensor_pose = {yaw_rotation(yaw),
                         Vec3(rng_.uniform(-200, 200), rng_.uniform(-200, 200), kSensorHeight)};
    half_fov_ = spec_.camera.fov_deg() * M_PI / 360.0;
  }

  void add(Category cat) {
    for (int attempt = 0; attempt < knobs_.max_attempts; ++attempt) {
      if (try_add(cat)) return;
    }
  }

  SceneSpec finish() && { return std::move(spec_); }

 private:
  // Candidate box in the sensor frame for the given category.
  Box3D sample(Category cat) {
    Box3D b;
    b.class_id = kAllClasses[rng_.index(static_cast<int>(kNumClasses))];
    b.extent = nominal_extent(b.class_id) * rng_.uniform(0.85, 1.15);
    b.orientation = yaw_rotation(rng_.uniform(-M_PI, M_PI));
    const double ground = -kSensorHeight + b.extent.z();
    const double z = b.class_id == ObjectClass::TrafficLight ? rng_.uniform(1.0, 3.5) : ground;

    const auto in_view = [&](double depth, double spread) {
      const double a = rng_.uniform(-spread, spread) * half_fov_;
      return Vec3(depth, depth * std::tan(a), z);
    };
    switch (cat) {
      case Category::Visible:
      case Category::PartiallyOccluded:
      case Category::FullyOccluded:
        b.center = in_view(rng_.uniform(6.0, 60.0), 0.8);
        break;
      case Category::BeyondRange:
        b.center = in_view(rng_.uniform(knobs_.max_distance_m + 10.0, knobs_.max_distance_m + 60.0),
                           0.8);
        break;
      case Category::BehindCamera:
        b.center = Vec3(rng_.uniform(-60.0, -8.0), rng_.uniform(-20.0, 20.0), z);
        break;
      case Category::OutOfFrame: {
        const double a = rng_.uniform(half_fov_ * 1.3, std::min(half_fov_ * 2.5, M_PI * 0.45));
        const double depth = rng_.uniform(5.0, 40.0);
        b.center = Vec3(depth, (rng_.chance(0.5) ? 1.0 : -1.0) * depth * std::tan(a), z);
        break;
      }
      case Category::NearPlane:
        b.center = Vec3(rng_.uniform(-0.5, 0.5) * b.extent.x(), rng_.uniform(-4.0, 4.0), z);
        break;
    }
    return b;
  }

  Box3D to_world(Box3D b) const {
    b.center = spec_.sensor_pose.apply(b.center);
    b.orientation = spec_.sensor_pose.rotation * b.orientation;
    return b;
  }

  // Wall whose front face at depth `depth` covers the pixel columns [u0, u1)
  // and rows [v0, v1).
  Occluder wall(double depth, double u0, double u1, double v0, double v1) {
    const CameraModel& cam = spec_.camera;
    const double f = cam.focal();
    const double y0 = (u0 - cam.cx()) / f * depth;
    const double y1 = (u1 - cam.cx()) / f * depth;
    const double z_top = -(v0 - cam.cy()) / f * depth;
    const double z_bot = -(v1 - cam.cy()) / f * depth;
    constexpr double half_thickness = 0.05;
    Occluder o;
    o.center = spec_.sensor_pose.apply(
        Vec3(depth + half_thickness, (y0 + y1) / 2.0, (z_top + z_bot) / 2.0));
    o.extent = Vec3(half_thickness, (y1 - y0) / 2.0, (z_top - z_bot) / 2.0);
    o.orientation = spec_.sensor_pose.rotation;
    o.palette_entry = rng_.chance(0.5) ? "building" : "wall";
    return o;
  }

  bool try_add(Category cat) {
    Box3D local = sample(cat);
    local.object_id = "obj-" + std::to_string(next_id_);
    const Box3D world = to_world(local);
    const RigidTransform sensor_from_world = invert(spec_.sensor_pose);

    double min_depth = std::numeric_limits<double>::infinity();
    double max_depth = -min_depth;
    for (const Vec3& v : box3d_vertices(local)) {
      min_depth = std::min(min_depth, v.x());
      max_depth = std::max(max_depth, v.x());
    }
    if (cat == Category::NearPlane && !(min_depth < kNearPlane && max_depth > kNearPlane)) {
      return false;
    }
    if (cat == Category::BehindCamera && max_depth >= 0.0) return false;

    const auto rect = filter_rect(spec_.camera, sensor_from_world, world);
    const std::uint8_t color = palette_.index_of(world.class_id);
    if (rect) {
      for (const Placed& p : placed_) {
        if (p.palette_index == color && p.rect.intersects(*rect)) return false;
      }
    }

    if (cat == Category::PartiallyOccluded || cat == Category::FullyOccluded) {
      if (!rect || min_depth < 3.0) return false;
      const double depth = std::max(1.0, min_depth * rng_.uniform(0.4, 0.8));
      const double margin = 2.0;
      double u0 = rect->x0 - margin, u1 = rect->x1 + margin;
      if (cat == Category::PartiallyOccluded) {
        const double mid = (rect->x0 + rect->x1) / 2.0;
        if (rng_.chance(0.5)) u1 = mid; else u0 = mid;
      }
      spec_.occluders.push_back(wall(depth, u0, u1, rect->y0 - margin, rect->y1 + margin));
    }

    if (rect) placed_.push_back({*rect, color});
    spec_.objects.push_back({world, cat});
    ++next_id_;
    return true;
  }

  Rng rng_;
  SceneKnobs knobs_;
  const ClassPalette& palette_;
  SceneSpec spec_;
  double half_fov_ = 0.0;
  int next_id_ = 0;
  std::vector<Placed> placed_;
};

}  // namespace detail

// Deterministic for a fixed seed. Objects sharing a palette colour never share
// image area, so per-object visibility is observable from colour alone.
inline SceneSpec random_scene(std::uint64_t seed, const SceneKnobs& knobs = {},
                              const ClassPalette& palette = ClassPalette::carla()) {
  detail::SceneBuilder builder(seed, knobs, palette);
  using C = Category;
  const auto repeat = [&](int n, C c) {
    for (int i = 0; i < n; ++i) builder.add(c);
  };
  repeat(knobs.fully_occluded, C::FullyOccluded);
  repeat(knobs.partially_occluded, C::PartiallyOccluded);
  repeat(knobs.visible, C::Visible);
  repeat(knobs.behind_camera, C::BehindCamera);
  repeat(knobs.beyond_range, C::BeyondRange);
  repeat(knobs.out_of_frame, C::OutOfFrame);
  Rng coin(seed ^ 0xA5A5A5A5DEADBEEFull);
  if (coin.chance(knobs.near_plane_probability)) builder.add(C::NearPlane);
  return std::move(builder).finish();
}

}  // namespace bboxforge::synth
