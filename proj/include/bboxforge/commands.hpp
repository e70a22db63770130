#pragma once

// Dataset-level operations behind the command-line tool.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bboxforge/filter.hpp"
#include "bboxforge/io/config.hpp"
#include "bboxforge/io/dataset.hpp"
#include "bboxforge/io/png.hpp"
#include "bboxforge/io/scene.hpp"
#include "bboxforge/synth.hpp"

namespace bboxforge::commands {

namespace fs = std::filesystem;
using nlohmann::json;

struct FrameOutcome {
  std::string frame_id;
  std::vector<io::YoloLabel> labels;
  std::vector<io::AuditRecord> audit;
  bool unknown_color_warning = false;
  double unknown_color_rate = 0.0;
};

// Filters one frame from disk without writing anything.
inline FrameOutcome process_frame(const fs::path& root, const std::string& id,
                                  const io::LoadedConfig& cfg) {
  const io::FrameRecord rec = io::read_frame(root, id);
  const DecodedMask decoded = decode_mask(io::read_png(rec.semantic_path), cfg.palette);
  const auto results = filter_frame(rec.objects, rec.sensor_pose, rec.camera, decoded.mask,
                                    cfg.palette, cfg.filter);
  FrameOutcome out;
  out.frame_id = id;
  out.unknown_color_warning = decoded.unknown_color_warning();
  out.unknown_color_rate = decoded.unknown_rate();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Box3D& b = rec.objects[i];
    out.audit.push_back({b.object_id, b.class_id, results[i].box, results[i].verdict});
    if (results[i].verdict.kept()) out.labels.push_back({b.class_id, to_center(*results[i].box)});
  }
  return out;
}

struct RunSummary {
  std::size_t frames_processed = 0;
  std::size_t frames_failed = 0;
  std::size_t boxes_in = 0;
  std::size_t boxes_kept = 0;
  std::map<std::string, std::size_t> deletions;
  double wall_time_s = 0.0;

  std::size_t deleted_total() const {
    std::size_t n = 0;
    for (const auto& [k, v] : deletions) n += v;
    return n;
  }

  json to_json() const {
    return {{"frames_processed", frames_processed}, {"frames_failed", frames_failed},
            {"boxes_in", boxes_in},                 {"boxes_kept", boxes_kept},
            {"deletions", deletions},               {"wall_time_s", wall_time_s}};
  }
};

struct FrameError {
  std::string frame_id;
  std::string message;
};

struct FilterOptions {
  fs::path dataset;
  io::LoadedConfig config;
  int jobs = 1;
  bool fail_fast = false;
  bool write_outputs = true;
};

struct FilterRun {
  RunSummary summary;
  std::vector<FrameOutcome> frames;  // frame order
  std::vector<FrameError> errors;    // frame order
};

// Frames are independent; workers write only their own frame's files and
// results are merged in frame order, so outputs do not depend on `jobs`.
inline FilterRun run_filter(const FilterOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::string> ids = io::list_frames(opt.dataset);
  if (opt.write_outputs) io::write_classes(opt.dataset);

  std::vector<std::optional<FrameOutcome>> outcomes(ids.size());
  std::vector<std::optional<std::string>> failures(ids.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  const auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= ids.size()) return;
      try {
        FrameOutcome o = process_frame(opt.dataset, ids[i], opt.config);
        if (opt.write_outputs) {
          io::write_labels(opt.dataset, o.frame_id, o.labels);
          io::write_audit(opt.dataset, o.frame_id, o.audit);
        }
        outcomes[i] = std::move(o);
      } catch (const std::exception& e) {
        failures[i] = e.what();
        if (opt.fail_fast) stop.store(true);
      }
    }
  };

  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  FilterRun run;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (failures[i]) {
      run.errors.push_back({ids[i], *failures[i]});
      ++run.summary.frames_failed;
    }
    if (!outcomes[i]) continue;
    ++run.summary.frames_processed;
    for (const auto& a : outcomes[i]->audit) {
      ++run.summary.boxes_in;
      if (a.verdict.kept()) {
        ++run.summary.boxes_kept;
      } else {
        ++run.summary.deletions[std::string(to_string(a.verdict.decision))];
      }
    }
    run.frames.push_back(std::move(*outcomes[i]));
  }
  run.summary.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

// ---------------------------------------------------------------------------

inline std::uint64_t frame_seed(std::uint64_t seed, int index) {
  synth::Rng mix(seed ^ (0xD1B54A32D192ED03ull * static_cast<std::uint64_t>(index + 1)));
  return mix.next();
}

// Renders `count` random scenes into an interchange dataset plus one oracle
// file per frame holding the scene and its visibility report.
inline void write_synth_dataset(std::uint64_t seed, int count, const fs::path& out,
                                const synth::SceneKnobs& knobs = {},
                                const ClassPalette& palette = ClassPalette::carla()) {
  for (const char* sub : {"rgb", "semantic", "meta", "oracle"}) fs::create_directories(out / sub);
  io::write_classes(out);
  const io::DatasetLayout layout{out};
  for (int i = 0; i < count; ++i) {
    const std::string id = io::frame_id(i);
    const synth::SceneSpec spec = synth::random_scene(frame_seed(seed, i), knobs, palette);
    const synth::RenderedScene scene = synth::render(spec, palette);

    io::FrameRecord rec;
    rec.frame_id = id;
    rec.camera = spec.camera;
    rec.sensor_pose = spec.sensor_pose;
    rec.objects = scene.boxes;
    rec.simulator_version = "bboxforge-synth";
    io::write_png(layout.rgb(id), scene.rgb);
    io::write_png(layout.semantic(id), encode_mask(scene.mask, palette));
    io::write_frame_meta(out, rec);
    const json oracle = {{"scene", io::to_json(spec)}, {"visibility", io::to_json(scene.report)}};
    io::write_text(layout.oracle(id), oracle.dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------

struct Violation {
  std::string frame_id;  // empty for dataset-level problems
  std::string message;
};

// Checks every frame: meta schema, classes, pose orthonormality, image
// decodability and dimensions, palette coverage and label parseability.
inline std::vector<Violation> validate_dataset(const fs::path& root,
                                               const ClassPalette& palette = ClassPalette::carla()) {
  std::vector<Violation> out;
  if (!fs::is_directory(root / "meta")) {
    out.push_back({"", "missing meta/ directory under " + root.string()});
    return out;
  }
  if (fs::exists(root / "classes.txt")) {
    std::string expected;
    for (auto n : kClassNames) expected += std::string(n) + "\n";
    try {
      if (io::read_text(root / "classes.txt") != expected) {
        out.push_back({"", "classes.txt does not list the six classes in index order"});
      }
    } catch (const std::exception& e) {
      out.push_back({"", e.what()});
    }
  }
  const io::DatasetLayout layout{root};
  for (const std::string& id : io::list_frames(root)) {
    try {
      const io::FrameRecord rec = io::read_frame(root, id);
      const RgbImage rgb = io::read_png(rec.rgb_path);
      const RgbImage sem = io::read_png(rec.semantic_path);
      (void)rgb;
      const DecodedMask decoded = decode_mask(sem, palette);
      if (decoded.unknown_color_warning()) {
        out.push_back({id, "UnknownColorRate: " + std::to_string(decoded.unknown_rate() * 100.0) +
                               "% of semantic pixels match no palette colour"});
      }
    } catch (const std::exception& e) {
      out.push_back({id, e.what()});
      continue;
    }
    const fs::path labels = layout.labels(id);
    if (fs::exists(labels)) {
      try {
        io::parse_labels(io::read_text(labels), labels.string());
      } catch (const std::exception& e) {
        out.push_back({id, e.what()});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

inline Rgb outline_color(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car: return {0, 255, 0};
    case ObjectClass::Bus: return {255, 255, 0};
    case ObjectClass::Truck: return {0, 255, 255};
    case ObjectClass::Van: return {255, 128, 0};
    case ObjectClass::Walker: return {255, 0, 255};
    case ObjectClass::TrafficLight: return {255, 0, 0};
  }
  return {255, 255, 255};
}

// One-pixel outline on the border pixels of the half-open rectangle.
inline void draw_rect(RgbImage& img, const PixelRect& r, Rgb color) {
  if (r.empty()) return;
  for (int x = r.x0; x < r.x1; ++x) {
    img.set(x, r.y0, color);
    img.set(x, r.y1 - 1, color);
  }
  for (int y = r.y0; y < r.y1; ++y) {
    img.set(r.x0, y, color);
    img.set(r.x1 - 1, y, color);
  }
}

struct DrawnBox {
  std::string object_id;
  ObjectClass cls;
  PixelRect rect;
};

// "before" draws every box that survives coordinate correction, "after" only
// the boxes the filter keeps. Rectangles are the ones the filter counted over.
inline std::vector<DrawnBox> visualize(const fs::path& root, const std::string& id,
                                       const fs::path& out_png, bool after,
                                       const io::LoadedConfig& cfg) {
  if (!fs::exists(io::DatasetLayout{root}.meta(id))) {
    throw Error(ErrorKind::MissingFile, "frame " + id + " not found under " + root.string());
  }
  const io::FrameRecord rec = io::read_frame(root, id);
  RgbImage img = io::read_png(rec.rgb_path);
  const FrameOutcome outcome = process_frame(root, id, cfg);
  std::vector<DrawnBox> drawn;
  for (const auto& a : outcome.audit) {
    if (!a.box || a.verdict.rect.empty()) continue;
    if (after && !a.verdict.kept()) continue;
    draw_rect(img, a.verdict.rect, outline_color(a.cls));
    drawn.push_back({a.object_id, a.cls, a.verdict.rect});
  }
  io::write_png(out_png, img);
  return drawn;
}

}  // namespace bboxforge::commands
