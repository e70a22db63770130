#pragma once

#include <string>

#include <json.hpp>

#include "bboxforge/io/dataset.hpp"
#include "bboxforge/synth.hpp"

namespace bboxforge::io {

inline json to_json(const synth::SceneSpec& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    json j = to_json(o.box);
    j["category"] = std::string(synth::to_string(o.category));
    objects.push_back(j);
  }
  json occluders = json::array();
  for (const auto& o : s.occluders) {
    occluders.push_back({{"center", to_json(o.center)},
                         {"extent", to_json(o.extent)},
                         {"rotation", to_json(o.orientation)},
                         {"palette_entry", o.palette_entry}});
  }
  // Seeds are written as strings: JSON numbers lose 64-bit precision in many readers.
  return {{"camera", to_json(s.camera)},
          {"sensor_pose", to_json(s.sensor_pose)},
          {"objects", objects},
          {"occluders", occluders},
          {"seed", std::to_string(s.seed)},
          {"max_distance_m", s.max_distance_m}};
}

inline synth::SceneSpec scene_from_json(const json& j) {
  const detail::MetaReader r(j, "scene");
  synth::SceneSpec s;
  s.camera = parse_camera(r.child("camera"));
  s.sensor_pose = parse_pose(r.child("sensor_pose"));
  const json& objects = r.field("objects");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const detail::MetaReader o(objects[i], r.name("objects[" + std::to_string(i) + "]"));
    synth::SceneObject obj{parse_box(o), synth::Category::Visible};
    if (o.has("category")) {
      const auto c = synth::parse_category(o.string("category"));
      if (!c) o.fail("category", "unknown category");
      obj.category = *c;
    }
    s.objects.push_back(std::move(obj));
  }
  const json& occluders = r.field("occluders");
  for (std::size_t i = 0; i < occluders.size(); ++i) {
    const detail::MetaReader o(occluders[i], r.name("occluders[" + std::to_string(i) + "]"));
    s.occluders.push_back({o.vec3("center"), o.vec3("extent"), o.mat3("rotation"),
                           o.string("palette_entry")});
  }
  s.seed = std::stoull(r.string("seed"));
  s.max_distance_m = r.number("max_distance_m");
  return s;
}

inline json to_json(const synth::VisibilityReport& rep) {
  json arr = json::array();
  for (const auto& o : rep.objects) {
    arr.push_back({{"object_id", o.object_id},
                   {"visible_pixel_count", o.visible_pixel_count},
                   {"projected_box_pixel_count", o.projected_box_pixel_count},
                   {"ground_truth_visible", o.ground_truth_visible},
                   {"distance_m", o.distance_m}});
  }
  return arr;
}

inline synth::VisibilityReport report_from_json(const json& arr) {
  synth::VisibilityReport rep;
  for (const auto& j : arr) {
    rep.objects.push_back({j.at("object_id").get<std::string>(),
                           j.at("visible_pixel_count").get<std::int64_t>(),
                           j.at("projected_box_pixel_count").get<std::int64_t>(),
                           j.at("ground_truth_visible").get<bool>(),
                           j.at("distance_m").get<double>()});
  }
  return rep;
}

}  // namespace bboxforge::io
