#include <algorithm>
#include <map>

#include <gtest/gtest.h>

#include "bboxforge/io/scene.hpp"
#include "bboxforge/synth.hpp"
#include "scene_oracle.hpp"
#include "test_support.hpp"

using namespace bboxforge;
using namespace bboxforge::synth;
using bboxforge::testing::naive_count;
using bboxforge::testing::oracle_verdicts;

namespace {

const ClassPalette& pal() { return ClassPalette::carla(); }
const std::uint8_t kCar = ClassPalette::carla().index_of(ObjectClass::Car);

SceneSpec single_car(const CameraModel& cam) {
  SceneSpec s;
  s.camera = cam;
  Box3D car;
  car.center = Vec3(10, 0, 0);
  car.object_id = "car";
  s.objects.push_back({car, Category::Visible});
  return s;
}

std::int64_t count_color(const SemanticMask& m, std::uint8_t c) {
  return std::count(m.pixels().begin(), m.pixels().end(), c);
}

}  // namespace

TEST(Render, LoneCarFillsItsFootprint) {
  const auto spec = single_car(CameraModel(1280, 720, 90));
  const auto scene = render(spec);
  const auto& v = scene.report.objects.at(0);
  EXPECT_TRUE(v.ground_truth_visible);
  // The front face spans 640 +- 640/9 on both axes; the sides are hidden.
  const PixelRect inner{570, 290, 710, 430};
  EXPECT_EQ(naive_count(scene.mask, kCar, inner), inner.area());
  EXPECT_EQ(count_color(scene.mask, kCar), v.visible_pixel_count);
  EXPECT_EQ(v.visible_pixel_count, 142 * 142);
  EXPECT_EQ(v.projected_box_pixel_count, 144 * 144);
  EXPECT_NEAR(v.distance_m, 10.0, 1e-12);
}

TEST(Render, BackgroundIsSkyOverRoad) {
  SceneSpec s;
  s.camera = CameraModel(8, 6, 90);
  const auto scene = render(s);
  EXPECT_EQ(scene.mask.at(0, 0), pal().find("sky"));
  EXPECT_EQ(scene.mask.at(7, 5), pal().find("road"));
  EXPECT_EQ(decode_mask(scene.rgb, pal()).mask, scene.mask);
}

TEST(Render, WiderNearerWallHidesCar) {
  auto spec = single_car(CameraModel(640, 360, 90));
  spec.occluders.push_back({Vec3(5, 0, 0), Vec3(0.1, 3, 3), Mat3::Identity(), "wall"});
  const auto scene = render(spec);
  EXPECT_EQ(scene.report.objects[0].visible_pixel_count, 0);
  EXPECT_FALSE(scene.report.objects[0].ground_truth_visible);
  EXPECT_GT(scene.report.objects[0].projected_box_pixel_count, 0);
}

TEST(Render, HalfCoveringWallHalvesVisibility) {
  const CameraModel cam(1280, 720, 90);
  const auto full = render(single_car(cam)).report.objects[0].visible_pixel_count;
  auto spec = single_car(cam);
  // Front face at depth 4.9 covering y in [0, 10]: the right half of the image.
  spec.occluders.push_back({Vec3(5, 5, 0), Vec3(0.1, 5, 5), Mat3::Identity(), "building"});
  const auto half = render(spec).report.objects[0].visible_pixel_count;
  const std::int64_t rows = 142;
  EXPECT_LE(std::abs(2 * half - full), 2 * 2 * rows);
}

TEST(Render, RayStartsAtNearPlane) {
  // A box straddling the near plane still paints what lies beyond it.
  SceneSpec s;
  s.camera = CameraModel(64, 48, 90);
  Box3D b;
  b.center = Vec3(0.5, 0, 0);
  b.object_id = "near";
  s.objects.push_back({b, Category::NearPlane});
  const auto scene = render(s);
  EXPECT_EQ(count_color(scene.mask, kCar), 64 * 48);
  EXPECT_EQ(scene.report.objects[0].projected_box_pixel_count, 64 * 48);
}

TEST(Render, VisibleNeverExceedsBoxPixels) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto scene = render(random_scene(seed));
    for (const auto& o : scene.report.objects) {
      ASSERT_LE(o.visible_pixel_count, o.projected_box_pixel_count) << seed << " " << o.object_id;
    }
  }
}

TEST(Render, DrawOrderDoesNotMatter) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const SceneSpec spec = random_scene(seed);
    SceneSpec swapped = spec;
    std::reverse(swapped.objects.begin(), swapped.objects.end());
    const auto a = render(spec);
    const auto b = render(swapped);
    ASSERT_EQ(a.mask, b.mask) << seed;
  }
}

TEST(Render, OracleConsistencyAtZeroThreshold) {
  FilterConfig cfg;
  cfg.threshold_small_box = 0.0;
  cfg.threshold_large_box = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const SceneSpec spec = random_scene(seed);
    const auto scene = render(spec);
    const auto got =
        filter_frame(scene.boxes, spec.sensor_pose, spec.camera, scene.mask, pal(), cfg);
    const auto want = oracle_verdicts(spec, scene, cfg);
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_FALSE(want[i].count_mismatch) << seed << " " << i;
      ASSERT_EQ(got[i].verdict.kept(), want[i].keep) << seed << " " << i;
    }
  }
}

TEST(RandomScene, Deterministic) {
  for (std::uint64_t seed : {0ull, 1ull, 77ull, 0xFFFFFFFFFFFFFFFFull}) {
    EXPECT_EQ(io::to_json(random_scene(seed)).dump(), io::to_json(random_scene(seed)).dump());
  }
  EXPECT_NE(io::to_json(random_scene(1)).dump(), io::to_json(random_scene(2)).dump());
}

TEST(RandomScene, CoversEveryCategory) {
  std::map<Category, int> seen;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (const auto& o : random_scene(seed).objects) ++seen[o.category];
  }
  for (int c = 0; c <= static_cast<int>(Category::OutOfFrame); ++c) {
    EXPECT_GT(seen[static_cast<Category>(c)], 0) << to_string(static_cast<Category>(c));
  }
}

TEST(RandomScene, NearPlaneObjectsLeaveTheImage) {
  int near = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const SceneSpec spec = random_scene(seed);
    const RigidTransform sfw = invert(spec.sensor_pose);
    for (const auto& o : spec.objects) {
      if (o.category != Category::NearPlane) continue;
      ++near;
      const auto raw = project_box3d(spec.camera, sfw, o.box);
      ASSERT_TRUE(raw);
      const Box2D n = normalize(*raw, spec.camera);
      ASSERT_TRUE(n.x_min < 0 || n.y_min < 0 || n.x_max > 1 || n.y_max > 1) << seed;
    }
  }
  EXPECT_GT(near, 100);
}

TEST(RandomScene, CategoriesBehaveAsLabelled) {
  int behind = 0, beyond = 0, hidden = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    const SceneSpec spec = random_scene(seed);
    const auto scene = render(spec);
    const RigidTransform sfw = invert(spec.sensor_pose);
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
      const auto& v = scene.report.objects[i];
      switch (spec.objects[i].category) {
        case Category::BehindCamera:
          ++behind;
          EXPECT_FALSE(project_box3d(spec.camera, sfw, spec.objects[i].box));
          break;
        case Category::BeyondRange:
          ++beyond;
          EXPECT_GT(v.distance_m, spec.max_distance_m);
          break;
        case Category::FullyOccluded:
          ++hidden;
          EXPECT_EQ(v.visible_pixel_count, 0) << seed;
          break;
        default:
          break;
      }
    }
  }
  EXPECT_GT(behind, 0);
  EXPECT_GT(beyond, 0);
  EXPECT_GT(hidden, 0);
}

TEST(SceneJson, RoundTrip) {
  const SceneSpec spec = random_scene(12345);
  const SceneSpec back = io::scene_from_json(io::to_json(spec));
  EXPECT_EQ(io::to_json(back).dump(), io::to_json(spec).dump());
  EXPECT_EQ(render(back).mask, render(spec).mask);

  const auto report = render(spec).report;
  EXPECT_EQ(io::to_json(io::report_from_json(io::to_json(report))).dump(),
            io::to_json(report).dump());
}
