// bboxforge: ghost-box filtering for simulator ground truth.
//
//   bboxforge filter <dataset> [--config FILE] [--jobs N] [--on-error fail|skip] [--json]
//   bboxforge synth --seed S --count N --out DIR
//   bboxforge visualize <dataset> <frame_id> <out.png> (--before | --after)
//   bboxforge validate <dataset>
//
// Logs go to stderr; --json summaries go to stdout.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bboxforge/commands.hpp"

namespace bf = bboxforge;
namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string config_path;
  std::optional<double> threshold_small_box;
  std::optional<double> threshold_large_box;
  std::optional<double> large_box_area_ratio;
  std::optional<std::string> max_distance;
  std::optional<int> min_side_px;
  std::string palette_path;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path,
                    "YAML config file (falls back to $BBOXFORGE_CONFIG)");
    app->add_option("--threshold-small-box", threshold_small_box, "percent");
    app->add_option("--threshold-large-box", threshold_large_box, "percent");
    app->add_option("--large-box-area-ratio", large_box_area_ratio, "percent");
    app->add_option("--max-distance", max_distance, "meters, or 'unlimited'");
    app->add_option("--min-side-px", min_side_px);
    app->add_option("--palette", palette_path, "palette override (JSON)");
  }

  // Flag > config file > default.
  bf::io::LoadedConfig resolve() const {
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("BBOXFORGE_CONFIG")) path = env;
    }
    bf::io::LoadedConfig cfg = path.empty() ? bf::io::LoadedConfig{} : bf::io::load_config(path);

    std::string overlay;
    const auto put = [&](const char* key, const std::string& value) {
      overlay += std::string(key) + ": " + value + "\n";
    };
    if (threshold_small_box) put("threshold_small_box", std::to_string(*threshold_small_box));
    if (threshold_large_box) put("threshold_large_box", std::to_string(*threshold_large_box));
    if (large_box_area_ratio) put("large_box_area_ratio", std::to_string(*large_box_area_ratio));
    if (max_distance) put("max_distance", *max_distance);
    if (min_side_px) put("min_side_px", std::to_string(*min_side_px));
    if (!overlay.empty()) {
      // Reuse the YAML validation for flag values, then copy over only what was set.
      const bf::io::LoadedConfig flags = bf::io::parse_config(overlay, {}, "command line");
      if (threshold_small_box) cfg.filter.threshold_small_box = flags.filter.threshold_small_box;
      if (threshold_large_box) cfg.filter.threshold_large_box = flags.filter.threshold_large_box;
      if (large_box_area_ratio) cfg.filter.large_box_area_ratio = flags.filter.large_box_area_ratio;
      if (max_distance) cfg.filter.max_distance_m = flags.filter.max_distance_m;
      if (min_side_px) cfg.filter.min_side_px = flags.filter.min_side_px;
    }
    if (!palette_path.empty()) cfg.palette = bf::io::load_palette(palette_path);
    return cfg;
  }
};

int run_filter_cmd(const std::string& dataset, const ConfigFlags& flags, int jobs,
                   const std::string& on_error, bool json_out) {
  bf::commands::FilterOptions opt;
  opt.dataset = dataset;
  opt.config = flags.resolve();
  opt.jobs = jobs;
  opt.fail_fast = on_error == "fail";
  if (!fs::is_directory(fs::path(dataset) / "meta")) {
    std::cerr << "error: " << dataset << " has no meta/ directory\n";
    return 2;
  }

  const auto run = bf::commands::run_filter(opt);
  for (const auto& f : run.frames) {
    if (f.unknown_color_warning) {
      std::cerr << "warning: frame " << f.frame_id << ": " << f.unknown_color_rate * 100.0
                << "% of semantic pixels match no palette colour\n";
    }
  }
  for (const auto& e : run.errors) std::cerr << "error: frame " << e.frame_id << ": " << e.message << "\n";

  const auto& s = run.summary;
  if (json_out) {
    std::cout << s.to_json().dump(2) << "\n";
  } else {
    std::cerr << "frames processed: " << s.frames_processed << ", failed: " << s.frames_failed
              << "\nboxes in: " << s.boxes_in << ", kept: " << s.boxes_kept << "\n";
    for (const auto& [k, v] : s.deletions) std::cerr << "  " << k << ": " << v << "\n";
    std::cerr << "wall time: " << s.wall_time_s << " s\n";
  }
  return run.errors.empty() ? 0 : 1;
}

int run_synth_cmd(std::uint64_t seed, int count, const std::string& out, int width, int height) {
  bf::synth::SceneKnobs knobs;
  knobs.width = width;
  knobs.height = height;
  bf::commands::write_synth_dataset(seed, count, out, knobs);
  std::cerr << "wrote " << count << " frames to " << out << "\n";
  return 0;
}

int run_visualize_cmd(const std::string& dataset, const std::string& frame,
                      const std::string& out_png, bool after, const ConfigFlags& flags) {
  const auto drawn = bf::commands::visualize(dataset, frame, out_png, after, flags.resolve());
  std::cerr << "drew " << drawn.size() << " boxes (" << (after ? "after" : "before")
            << " filtering) to " << out_png << "\n";
  return 0;
}

int run_validate_cmd(const std::string& dataset, const std::string& palette_path) {
  const bf::ClassPalette palette =
      palette_path.empty() ? bf::ClassPalette::carla() : bf::io::load_palette(palette_path);
  const auto violations = bf::commands::validate_dataset(dataset, palette);
  for (const auto& v : violations) {
    std::cout << (v.frame_id.empty() ? std::string("dataset") : "frame " + v.frame_id) << ": "
              << v.message << "\n";
  }
  const auto frames = bf::io::list_frames(dataset).size();
  std::cerr << frames << " frames checked, " << violations.size() << " violations\n";
  return violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ghost-box filtering and YOLO label export for simulator ground truth"};
  app.require_subcommand(1);

  auto* filter = app.add_subcommand("filter", "filter every frame and write labels + audits");
  std::string dataset;
  ConfigFlags filter_flags;
  int jobs = 1;
  std::string on_error = "fail";
  bool json_out = false;
  filter->add_option("dataset", dataset)->required();
  filter_flags.attach(filter);
  filter->add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);
  filter->add_option("--on-error", on_error, "fail fast or skip bad frames")
      ->check(CLI::IsMember({"fail", "skip"}));
  filter->add_flag("--json", json_out, "print the run summary as JSON on stdout");

  auto* synth = app.add_subcommand("synth", "render random synthetic scenes as a dataset");
  std::uint64_t seed = 0;
  int count = 0;
  std::string out_dir;
  int width = 640;
  int height = 360;
  synth->add_option("--seed", seed)->required();
  synth->add_option("--count", count)->required()->check(CLI::NonNegativeNumber);
  synth->add_option("--out", out_dir)->required();
  synth->add_option("--width", width)->check(CLI::PositiveNumber);
  synth->add_option("--height", height)->check(CLI::PositiveNumber);

  auto* vis = app.add_subcommand("visualize", "draw boxes onto a frame");
  std::string vis_dataset, vis_frame, vis_out;
  ConfigFlags vis_flags;
  bool before = false;
  bool after = false;
  vis->add_option("dataset", vis_dataset)->required();
  vis->add_option("frame_id", vis_frame)->required();
  vis->add_option("out_png", vis_out)->required();
  auto* before_flag = vis->add_flag("--before", before, "all boxes before filtering");
  vis->add_flag("--after", after, "boxes kept by the filter")->excludes(before_flag);
  vis_flags.attach(vis);

  auto* validate = app.add_subcommand("validate", "check dataset invariants");
  std::string val_dataset, val_palette;
  validate->add_option("dataset", val_dataset)->required();
  validate->add_option("--palette", val_palette, "palette override (JSON)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (filter->parsed()) return run_filter_cmd(dataset, filter_flags, jobs, on_error, json_out);
    if (synth->parsed()) return run_synth_cmd(seed, count, out_dir, width, height);
    if (vis->parsed()) {
      if (!before && !after) {
        std::cerr << "error: pass --before or --after\n";
        return 2;
      }
      return run_visualize_cmd(vis_dataset, vis_frame, vis_out, after, vis_flags);
    }
    if (validate->parsed()) return run_validate_cmd(val_dataset, val_palette);
  } catch (const bf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
