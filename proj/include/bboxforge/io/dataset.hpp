#pragma once

// On-disk interchange format.
//
//   <root>/rgb/<id>.png        RGB frame
//   <root>/semantic/<id>.png   semantic segmentation frame, palette colours
//   <root>/meta/<id>.json      camera, sensor pose and 3D boxes
//   <root>/labels/<id>.txt     YOLO labels written by the filter
//   <root>/audit/<id>.json     per-box verdicts written by the filter
//   <root>/classes.txt         class names, one per line, in index order
//
// Frame ids are six-digit zero-padded integers. Other sensor streams (radar,
// lidar, depth) may live in sibling directories; they are never read.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bboxforge/boxes.hpp"
#include "bboxforge/classes.hpp"
#include "bboxforge/error.hpp"
#include "bboxforge/filter.hpp"
#include "bboxforge/geometry.hpp"
#include "bboxforge/io/png.hpp"

namespace bboxforge::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::string frame_id(int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", n);
  return buf;
}

inline bool is_frame_id(const std::string& s) {
  return s.size() == 6 && s.find_first_not_of("0123456789") == std::string::npos;
}

struct FrameRecord {
  std::string frame_id;
  fs::path rgb_path;
  fs::path semantic_path;
  CameraModel camera{1, 1, 90.0};
  RigidTransform sensor_pose;  // world_from_sensor
  std::vector<Box3D> objects;
  std::string simulator_version;
};

struct DatasetLayout {
  fs::path root;

  fs::path rgb(const std::string& id) const { return root / "rgb" / (id + ".png"); }
  fs::path semantic(const std::string& id) const { return root / "semantic" / (id + ".png"); }
  fs::path meta(const std::string& id) const { return root / "meta" / (id + ".json"); }
  fs::path labels(const std::string& id) const { return root / "labels" / (id + ".txt"); }
  fs::path audit(const std::string& id) const { return root / "audit" / (id + ".json"); }
  fs::path oracle(const std::string& id) const { return root / "oracle" / (id + ".json"); }
};

// Frame ids present under meta/, sorted.
inline std::vector<std::string> list_frames(const fs::path& root) {
  std::vector<std::string> ids;
  const fs::path dir = root / "meta";
  if (!fs::is_directory(dir)) return ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json" && is_frame_id(e.path().stem().string())) {
      ids.push_back(e.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, path.string());
  out << text;
  if (!out.flush()) throw Error(ErrorKind::IoFailure, path.string());
}

// ---------------------------------------------------------------------------
// JSON conversion of geometry values.

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json to_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

namespace detail {

// Field access that reports the dotted path of whatever is missing or mistyped.
class MetaReader {
 public:
  MetaReader(const json& j, std::string path, ErrorKind kind = ErrorKind::MalformedMeta)
      : j_(j), path_(std::move(path)), kind_(kind) {}

  const json& field(const std::string& key) const {
    if (!j_.is_object() || !j_.contains(key)) fail(key, "missing");
    return j_.at(key);
  }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  double number(const std::string& key) const {
    const json& v = field(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  int integer(const std::string& key) const {
    const json& v = field(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }
  std::string string(const std::string& key) const {
    const json& v = field(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    fail(key, "expected a string");
  }
  Vec3 vec3(const std::string& key) const {
    const json& v = field(key);
    if (!v.is_array() || v.size() != 3) fail(key, "expected [x, y, z]");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) fail(key, "expected [x, y, z]");
      out[i] = v[i].get<double>();
    }
    if (!out.allFinite()) fail(key, "non-finite component");
    return out;
  }
  Mat3 mat3(const std::string& key) const {
    const json& v = field(key);
    Mat3 out;
    if (!v.is_array() || v.size() != 3) fail(key, "expected a 3x3 row-major matrix");
    for (int r = 0; r < 3; ++r) {
      if (!v[r].is_array() || v[r].size() != 3) fail(key, "expected a 3x3 row-major matrix");
      for (int c = 0; c < 3; ++c) {
        if (!v[r][c].is_number()) fail(key, "expected a 3x3 row-major matrix");
        out(r, c) = v[r][c].get<double>();
      }
    }
    return out;
  }
  MetaReader child(const std::string& key) const { return {field(key), name(key), kind_}; }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw Error(kind_, "field '" + name(key) + "': " + why);
  }

 private:
  const json& j_;
  std::string path_;
  ErrorKind kind_;
};

}  // namespace detail

inline json to_json(const RigidTransform& t) {
  return {{"rotation", to_json(t.rotation)}, {"translation", to_json(t.translation)}};
}

inline json to_json(const Box3D& b) {
  return {{"object_id", b.object_id},
          {"class", std::string(class_name(b.class_id))},
          {"center", to_json(b.center)},
          {"extent", to_json(b.extent)},
          {"rotation", to_json(b.orientation)}};
}

inline json to_json(const CameraModel& c) {
  return {{"width", c.width()}, {"height", c.height()}, {"fov_deg", c.fov_deg()}};
}

inline RigidTransform parse_pose(const detail::MetaReader& r) {
  RigidTransform t{r.mat3("rotation"), r.vec3("translation")};
  if (!is_rotation(t.rotation)) r.fail("rotation", "not orthonormal with det +1");
  return t;
}

inline CameraModel parse_camera(const detail::MetaReader& r) {
  const int w = r.integer("width");
  const int h = r.integer("height");
  const double fov = r.number("fov_deg");
  if (w <= 0) r.fail("width", "must be positive");
  if (h <= 0) r.fail("height", "must be positive");
  if (!(fov > 0.0 && fov < 180.0)) r.fail("fov_deg", "must lie in (0, 180)");
  return CameraModel(w, h, fov);
}

// Objects carry either "yaw" (radians about +z) or a full "rotation" matrix.
inline Box3D parse_box(const detail::MetaReader& r) {
  Box3D b;
  b.object_id = r.string("object_id");
  const std::string cls = r.string("class");
  const auto parsed = parse_class(cls);
  if (!parsed) {
    throw Error(ErrorKind::UnknownClass, "field '" + r.name("class") + "': '" + cls + "'");
  }
  b.class_id = *parsed;
  b.center = r.vec3("center");
  b.extent = r.vec3("extent");
  if (!(b.extent.minCoeff() > 0.0)) r.fail("extent", "components must be positive");
  if (r.has("rotation")) {
    b.orientation = r.mat3("rotation");
    if (!is_rotation(b.orientation)) r.fail("rotation", "not orthonormal with det +1");
  } else if (r.has("yaw")) {
    b.orientation = yaw_rotation(r.number("yaw"));
  } else {
    r.fail("rotation", "missing (expected 'rotation' or 'yaw')");
  }
  return b;
}

inline json frame_to_json(const FrameRecord& f) {
  json objects = json::array();
  for (const auto& b : f.objects) objects.push_back(to_json(b));
  json j = {{"frame_id", f.frame_id},
            {"camera", to_json(f.camera)},
            {"sensor_pose", to_json(f.sensor_pose)},
            {"objects", objects}};
  if (!f.simulator_version.empty()) j["simulator_version"] = f.simulator_version;
  return j;
}

// Parses meta/<id>.json and checks that both images exist with the camera's
// dimensions. Image contents are not decoded.
inline FrameRecord read_frame(const fs::path& root, const std::string& id) {
  const DatasetLayout layout{root};
  const fs::path meta_path = layout.meta(id);
  const std::string text = read_text(meta_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::MalformedMeta, meta_path.string() + ": " + e.what());
  }

  FrameRecord f;
  try {
    const detail::MetaReader r(j, "");
    f.frame_id = id;
    f.camera = parse_camera(r.child("camera"));
    f.sensor_pose = parse_pose(r.child("sensor_pose"));
    const json& objects = r.field("objects");
    if (!objects.is_array()) r.fail("objects", "expected an array");
    for (std::size_t i = 0; i < objects.size(); ++i) {
      f.objects.push_back(parse_box({objects[i], "objects[" + std::to_string(i) + "]"}));
    }
    if (r.has("simulator_version")) f.simulator_version = r.string("simulator_version");
  } catch (const Error& e) {
    throw Error(e.kind(), meta_path.string() + ": " + e.what());
  }

  f.rgb_path = layout.rgb(id);
  f.semantic_path = layout.semantic(id);
  for (const fs::path& p : {f.rgb_path, f.semantic_path}) {
    const ImageSize s = read_png_size(p);
    if (s.width != f.camera.width() || s.height != f.camera.height()) {
      throw Error(ErrorKind::DimensionMismatch,
                  p.string() + " is " + std::to_string(s.width) + "x" + std::to_string(s.height) +
                      ", camera is " + std::to_string(f.camera.width()) + "x" +
                      std::to_string(f.camera.height()));
    }
  }
  return f;
}

inline void write_frame_meta(const fs::path& root, const FrameRecord& f) {
  write_text(DatasetLayout{root}.meta(f.frame_id), frame_to_json(f).dump(2) + "\n");
}

inline void write_classes(const fs::path& root) {
  std::string text;
  for (auto name : kClassNames) text += std::string(name) + "\n";
  write_text(root / "classes.txt", text);
}

// ---------------------------------------------------------------------------
// YOLO labels.

struct YoloLabel {
  ObjectClass cls = ObjectClass::Car;
  CenterBox2D box;
};

// Six decimal places, rounded to nearest from the binary value.
inline std::string format_label_line(const YoloLabel& l) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f\n", class_index(l.cls), l.box.x_center,
                l.box.y_center, l.box.width, l.box.height);
  return buf;
}

inline std::string format_labels(std::span<const YoloLabel> labels) {
  std::string out;
  for (const auto& l : labels) out += format_label_line(l);
  return out;
}

inline fs::path write_labels(const fs::path& root, const std::string& id,
                             std::span<const YoloLabel> labels) {
  const fs::path p = DatasetLayout{root}.labels(id);
  write_text(p, format_labels(labels));
  return p;
}

// Parses a label file, rejecting lines that are not valid normalized boxes.
inline std::vector<YoloLabel> parse_labels(const std::string& text, const std::string& source = "") {
  std::vector<YoloLabel> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int cls = -1;
    YoloLabel l;
    std::string extra;
    if (!(ls >> cls >> l.box.x_center >> l.box.y_center >> l.box.width >> l.box.height) ||
        (ls >> extra)) {
      throw Error(ErrorKind::OutOfRange, source + ":" + std::to_string(lineno) + ": malformed line");
    }
    if (cls < 0 || cls >= static_cast<int>(kNumClasses)) {
      throw Error(ErrorKind::UnknownClass, source + ":" + std::to_string(lineno));
    }
    l.cls = kAllClasses[cls];
    const auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(l.box.x_center) || !in01(l.box.y_center) || !in01(l.box.width) ||
        !in01(l.box.height) || !(l.box.width > 0.0) || !(l.box.height > 0.0)) {
      throw Error(ErrorKind::OutOfRange, source + ":" + std::to_string(lineno) + ": box out of range");
    }
    out.push_back(l);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Audit records.

struct AuditRecord {
  std::string object_id;
  ObjectClass cls = ObjectClass::Car;
  std::optional<Box2D> box;
  FilterVerdict verdict;

  bool operator==(const AuditRecord&) const = default;
};

inline json to_json(const AuditRecord& a) {
  json j = {{"object_id", a.object_id},
            {"class", std::string(class_name(a.cls))},
            {"decision", std::string(to_string(a.verdict.decision))},
            {"matched_pixels", a.verdict.matched_pixels},
            {"box_pixels", a.verdict.box_pixels},
            {"match_ratio", a.verdict.match_ratio},
            {"large", a.verdict.size == SizeClass::Large},
            {"rect", json::array({a.verdict.rect.x0, a.verdict.rect.y0, a.verdict.rect.x1,
                                  a.verdict.rect.y1})}};
  j["box"] = a.box ? json::array({a.box->x_min, a.box->y_min, a.box->x_max, a.box->y_max})
                   : json(nullptr);
  return j;
}

inline AuditRecord audit_from_json(const json& j, const std::string& where) {
  const detail::MetaReader r(j, where, ErrorKind::MalformedMeta);
  AuditRecord a;
  a.object_id = r.string("object_id");
  const auto cls = parse_class(r.string("class"));
  if (!cls) throw Error(ErrorKind::UnknownClass, r.name("class"));
  a.cls = *cls;
  const auto decision = parse_decision(r.string("decision"));
  if (!decision) r.fail("decision", "unknown decision");
  a.verdict.decision = *decision;
  a.verdict.matched_pixels = r.field("matched_pixels").get<std::int64_t>();
  a.verdict.box_pixels = r.field("box_pixels").get<std::int64_t>();
  a.verdict.match_ratio = r.number("match_ratio");
  a.verdict.size = r.field("large").get<bool>() ? SizeClass::Large : SizeClass::Normal;
  const json& rect = r.field("rect");
  if (!rect.is_array() || rect.size() != 4) r.fail("rect", "expected [x0, y0, x1, y1]");
  a.verdict.rect = {rect[0].get<int>(), rect[1].get<int>(), rect[2].get<int>(), rect[3].get<int>()};
  const json& box = r.field("box");
  if (!box.is_null()) {
    if (!box.is_array() || box.size() != 4) r.fail("box", "expected null or 4 numbers");
    a.box = Box2D{box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                  box[3].get<double>()};
  }
  return a;
}

inline std::string format_audit(const std::string& id, std::span<const AuditRecord> records) {
  json arr = json::array();
  for (const auto& a : records) arr.push_back(to_json(a));
  return json{{"frame_id", id}, {"records", arr}}.dump(2) + "\n";
}

inline fs::path write_audit(const fs::path& root, const std::string& id,
                            std::span<const AuditRecord> records) {
  const fs::path p = DatasetLayout{root}.audit(id);
  write_text(p, format_audit(id, records));
  return p;
}

inline std::vector<AuditRecord> parse_audit(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::MalformedMeta, std::string("audit: ") + e.what());
  }
  std::vector<AuditRecord> out;
  const json& records = j.at("records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(audit_from_json(records[i], "records[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace bboxforge::io
