#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include <yaml-cpp/yaml.h>
#include <json.hpp>

#include "bboxforge/error.hpp"
#include "bboxforge/filter.hpp"
#include "bboxforge/io/dataset.hpp"
#include "bboxforge/semantics.hpp"

namespace bboxforge::io {

// Palette override: a JSON array of {"name", "r", "g", "b", "classes"?}
// records in palette index order. The first record is the unlabelled colour.
inline ClassPalette parse_palette(const std::string& text, const std::string& source = "palette") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::MalformedPalette, source + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorKind::MalformedPalette, source + ": expected an array");
  std::vector<PaletteEntry> entries;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const detail::MetaReader r(j[i], source + "[" + std::to_string(i) + "]",
                               ErrorKind::MalformedPalette);
    PaletteEntry e;
    e.name = r.string("name");
    const auto channel = [&](const char* key) {
      const int v = r.integer(key);
      if (v < 0 || v > 255) r.fail(key, "must lie in [0, 255]");
      return static_cast<std::uint8_t>(v);
    };
    e.color = {channel("r"), channel("g"), channel("b")};
    if (r.has("classes")) {
      for (const auto& c : r.field("classes")) {
        const auto cls = c.is_string() ? parse_class(c.get<std::string>()) : std::nullopt;
        if (!cls) throw Error(ErrorKind::UnknownClass, r.name("classes") + ": " + c.dump());
        e.classes.push_back(*cls);
      }
    }
    entries.push_back(std::move(e));
  }
  return ClassPalette(std::move(entries));
}

inline ClassPalette load_palette(const std::filesystem::path& path) {
  return parse_palette(read_text(path), path.string());
}

inline std::string palette_to_json(const ClassPalette& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : p.entries()) {
    nlohmann::json rec = {{"name", e.name}, {"r", e.color.r}, {"g", e.color.g}, {"b", e.color.b}};
    if (!e.classes.empty()) {
      rec["classes"] = nlohmann::json::array();
      for (auto c : e.classes) rec["classes"].push_back(std::string(class_name(c)));
    }
    arr.push_back(rec);
  }
  return arr.dump(2) + "\n";
}

struct LoadedConfig {
  FilterConfig filter;
  ClassPalette palette = ClassPalette::carla();
};

// YAML keys, all optional:
//   threshold_small_box   percent, default 10
//   threshold_large_box   percent, default 50
//   large_box_area_ratio  percent, default 70
//   max_distance          meters or "unlimited", default 100
//   min_side_px           pixels, default 0
//   palette               palette override file, relative to the config file
inline LoadedConfig parse_config(const std::string& text,
                                 const std::filesystem::path& base_dir = {},
                                 const std::string& source = "config") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::MalformedConfig, source + ": " + e.what());
  }
  LoadedConfig out;
  if (root.IsNull()) return out;
  if (!root.IsMap()) throw Error(ErrorKind::MalformedConfig, source + ": expected a mapping");

  static const std::set<std::string> known = {"threshold_small_box", "threshold_large_box",
                                              "large_box_area_ratio", "max_distance",
                                              "min_side_px", "palette"};
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (!known.contains(key)) {
      throw Error(ErrorKind::MalformedConfig, source + ": unknown key '" + key + "'");
    }
  }

  const auto number = [&](const std::string& key) -> std::optional<double> {
    const YAML::Node n = root[key];
    if (!n) return std::nullopt;
    try {
      const double v = n.as<double>();
      if (!std::isfinite(v)) throw YAML::Exception({}, "non-finite");
      return v;
    } catch (const YAML::Exception&) {
      throw Error(ErrorKind::MalformedConfig, source + ": key '" + key + "' is not a number");
    }
  };
  const auto percent = [&](const std::string& key, double& dst) {
    if (const auto v = number(key)) {
      if (*v < 0.0 || *v > 100.0) {
        throw Error(ErrorKind::OutOfRange, source + ": key '" + key + "' must lie in [0, 100]");
      }
      dst = *v / 100.0;
    }
  };
  percent("threshold_small_box", out.filter.threshold_small_box);
  percent("threshold_large_box", out.filter.threshold_large_box);
  percent("large_box_area_ratio", out.filter.large_box_area_ratio);

  if (const YAML::Node n = root["max_distance"]) {
    const std::string s = n.IsScalar() ? n.Scalar() : "";
    if (s == "unlimited" || s == "inf") {
      out.filter.max_distance_m.reset();
    } else {
      const double v = *number("max_distance");
      if (!(v > 0.0)) {
        throw Error(ErrorKind::OutOfRange, source + ": key 'max_distance' must be positive");
      }
      out.filter.max_distance_m = v;
    }
  }
  if (const auto v = number("min_side_px")) {
    if (*v < 0.0 || *v != std::floor(*v)) {
      throw Error(ErrorKind::OutOfRange,
                  source + ": key 'min_side_px' must be a non-negative integer");
    }
    out.filter.min_side_px = static_cast<int>(*v);
  }
  if (const YAML::Node n = root["palette"]) {
    const std::filesystem::path p = n.as<std::string>();
    out.palette = load_palette(p.is_absolute() ? p : base_dir / p);
  }
  return out;
}

inline LoadedConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path), path.parent_path(), path.string());
}

}  // namespace bboxforge::io
