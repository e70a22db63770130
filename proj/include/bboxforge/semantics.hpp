#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bboxforge/classes.hpp"
#include "bboxforge/error.hpp"

namespace bboxforge {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;

  std::uint32_t packed() const { return (std::uint32_t{r} << 16) | (std::uint32_t{g} << 8) | b; }
};

struct PaletteEntry {
  std::string name;
  Rgb color;
  // Label classes whose presence is evidenced by this colour.
  std::vector<ObjectClass> classes;
};

// Ordered colour palette of a semantic segmentation camera. Entry 0 is the
// unlabelled class that non-matching pixels decode to.
//
// Car and truck share one colour, so the mask alone cannot tell them apart:
// the filter only asks whether the box class's colour is present, while the
// label class always comes from the 3D ground truth.
class ClassPalette {
 public:
  explicit ClassPalette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty() || entries_.size() > 255) {
      throw Error(ErrorKind::MalformedPalette, "palette needs between 1 and 255 entries");
    }
    class_slot_.fill(-1);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto [it, fresh] =
          by_color_.emplace(entries_[i].color.packed(), static_cast<std::uint8_t>(i));
      if (!fresh) {
        throw Error(ErrorKind::MalformedPalette,
                    "duplicate colour for entries '" + entries_[it->second].name + "' and '" +
                        entries_[i].name + "'");
      }
      for (ObjectClass c : entries_[i].classes) {
        auto& slot = class_slot_[class_index(c)];
        if (slot != -1) {
          throw Error(ErrorKind::MalformedPalette,
                      "class '" + std::string(class_name(c)) + "' mapped to two entries");
        }
        slot = static_cast<int>(i);
      }
    }
    for (ObjectClass c : kAllClasses) {
      if (class_slot_[class_index(c)] == -1) {
        throw Error(ErrorKind::MalformedPalette,
                    "class '" + std::string(class_name(c)) + "' has no palette colour");
      }
    }
  }

  // Palette of the CARLA 0.9.x semantic segmentation camera.
  static const ClassPalette& carla() {
    static const ClassPalette palette(carla_entries());
    return palette;
  }

  std::size_t size() const { return entries_.size(); }
  const PaletteEntry& entry(std::size_t i) const { return entries_.at(i); }
  const std::vector<PaletteEntry>& entries() const { return entries_; }

  std::uint8_t index_of(ObjectClass c) const {
    return static_cast<std::uint8_t>(class_slot_[class_index(c)]);
  }
  Rgb color_of(ObjectClass c) const { return entries_[index_of(c)].color; }

  // -1 when the colour is not in the palette.
  int lookup(Rgb color) const {
    const auto it = by_color_.find(color.packed());
    return it == by_color_.end() ? -1 : it->second;
  }

  int find(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

  static std::vector<PaletteEntry> carla_entries() {
    using C = ObjectClass;
    return {
        {"unlabelled", {0, 0, 0}, {}},
        {"car_truck", {0, 0, 142}, {C::Car, C::Truck}},
        {"bus", {0, 60, 100}, {C::Bus}},
        {"van", {0, 0, 70}, {C::Van}},
        {"bicycle", {119, 11, 32}, {}},
        {"motorcycle", {0, 0, 230}, {}},
        {"building", {70, 70, 70}, {}},
        {"fence", {100, 40, 40}, {}},
        {"other", {55, 90, 80}, {}},
        {"pedestrian", {220, 20, 60}, {C::Walker}},
        {"pole", {153, 153, 153}, {}},
        {"road_line", {157, 234, 50}, {}},
        {"road", {128, 64, 128}, {}},
        {"sidewalk", {244, 35, 232}, {}},
        {"vegetation", {107, 142, 35}, {}},
        {"wall", {102, 102, 156}, {}},
        {"traffic_sign", {220, 220, 0}, {}},
        {"sky", {70, 130, 180}, {}},
        {"ground", {81, 0, 81}, {}},
        {"bridge", {150, 100, 100}, {}},
        {"rail_track", {230, 150, 140}, {}},
        {"guardrail", {180, 165, 180}, {}},
        {"traffic_light", {250, 170, 30}, {C::TrafficLight}},
        {"static", {110, 190, 160}, {}},
        {"dynamic", {170, 120, 50}, {}},
        {"water", {45, 60, 150}, {}},
        {"terrain", {145, 170, 100}, {}},
    };
  }

 private:
  std::vector<PaletteEntry> entries_;
  std::unordered_map<std::uint32_t, std::uint8_t> by_color_;
  std::array<int, kNumClasses> class_slot_{};
};

// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < data.size(); i += 3) {
      data[i] = fill.r;
      data[i + 1] = fill.g;
      data[i + 2] = fill.b;
    }
  }

  Rgb at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    data[i] = c.r;
    data[i + 1] = c.g;
    data[i + 2] = c.b;
  }

  bool operator==(const RgbImage&) const = default;
};

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return std::max(0, x1 - x0); }
  int height() const { return std::max(0, y1 - y0); }
  std::int64_t area() const { return std::int64_t{width()} * height(); }
  bool empty() const { return width() == 0 || height() == 0; }

  bool intersects(const PixelRect& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1 && !empty() && !o.empty();
  }

  bool operator==(const PixelRect&) const = default;
};

// Per-pixel palette index, row-major.
class SemanticMask {
 public:
  SemanticMask(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorKind::OutOfRange, "mask dimensions must be positive");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, std::uint8_t v) { data_[static_cast<std::size_t>(y) * width_ + x] = v; }
  std::span<const std::uint8_t> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const std::uint8_t> pixels() const { return data_; }
  std::span<std::uint8_t> pixels() { return data_; }

  bool operator==(const SemanticMask&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

struct DecodedMask {
  SemanticMask mask;
  std::size_t unknown_pixels = 0;

  double unknown_rate() const {
    return static_cast<double>(unknown_pixels) /
           (static_cast<double>(mask.width()) * mask.height());
  }
  // More than 1% unmatched pixels usually means the palette does not belong to
  // the simulator version that rendered the image.
  bool unknown_color_warning() const { return unknown_rate() > 0.01; }
};

// Exact colour matching; unmatched pixels become index 0.
inline DecodedMask decode_mask(const RgbImage& image, const ClassPalette& palette) {
  DecodedMask out{SemanticMask(image.width, image.height), 0};
  auto dst = out.mask.pixels();
  std::uint32_t last_color = 0xFFFFFFFFu;
  int last_index = 0;
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const std::uint8_t* p = &image.data[i * 3];
    const std::uint32_t packed = (std::uint32_t{p[0]} << 16) | (std::uint32_t{p[1]} << 8) | p[2];
    if (packed != last_color) {
      last_color = packed;
      last_index = palette.lookup({p[0], p[1], p[2]});
    }
    if (last_index < 0) {
      ++out.unknown_pixels;
      dst[i] = 0;
    } else {
      dst[i] = static_cast<std::uint8_t>(last_index);
    }
  }
  return out;
}

inline RgbImage encode_mask(const SemanticMask& mask, const ClassPalette& palette) {
  RgbImage img(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) img.set(x, y, palette.entry(mask.at(x, y)).color);
  }
  return img;
}

// Summed-area tables for a chosen set of palette indices. For class c,
// S_c(i, j) counts pixels of class c in [0, i) x [0, j), so any rectangle count
// is four lookups.
class ClassIntegralImage {
 public:
  ClassIntegralImage(const SemanticMask& mask, std::span<const std::uint8_t> classes)
      : width_(mask.width()), height_(mask.height()) {
    slot_.fill(-1);
    for (std::uint8_t c : classes) {
      if (slot_[c] != -1) continue;
      slot_[c] = static_cast<int>(tables_.size());
      tables_.push_back(build_table(mask, c));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool has(std::uint8_t c) const { return slot_[c] != -1; }

  // S_c(i, j) for 0 <= i <= width, 0 <= j <= height.
  std::uint32_t at(std::uint8_t c, int i, int j) const {
    return table(c)[static_cast<std::size_t>(j) * (width_ + 1) + i];
  }

  std::int64_t count(std::uint8_t c, const PixelRect& r) const {
    if (r.x0 < 0 || r.y0 < 0 || r.x1 > width_ || r.y1 > height_) {
      throw Error(ErrorKind::RectOutOfBounds, "rectangle exceeds " + std::to_string(width_) +
                                                   "x" + std::to_string(height_) + " mask");
    }
    if (r.empty()) return 0;
    const auto& s = table(c);
    const std::size_t stride = width_ + 1;
    const auto idx = [stride](int i, int j) { return static_cast<std::size_t>(j) * stride + i; };
    return std::int64_t{s[idx(r.x1, r.y1)]} - s[idx(r.x0, r.y1)] - s[idx(r.x1, r.y0)] +
           s[idx(r.x0, r.y0)];
  }

 private:
  const std::vector<std::uint32_t>& table(std::uint8_t c) const {
    if (slot_[c] == -1) {
      throw Error(ErrorKind::OutOfRange, "no integral table for class " + std::to_string(c));
    }
    return tables_[slot_[c]];
  }

  static std::vector<std::uint32_t> build_table(const SemanticMask& mask, std::uint8_t c) {
    const int w = mask.width();
    const int h = mask.height();
    const std::size_t stride = w + 1;
    std::vector<std::uint32_t> s(stride * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* src = mask.row(y).data();
      const std::uint32_t* above = s.data() + static_cast<std::size_t>(y) * stride;
      std::uint32_t* out = s.data() + static_cast<std::size_t>(y + 1) * stride;
      std::uint32_t run = 0;
      for (int x = 0; x < w; ++x) {
        run += src[x] == c;
        out[x + 1] = above[x + 1] + run;
      }
    }
    return s;
  }

  int width_;
  int height_;
  std::array<int, 256> slot_{};
  std::vector<std::vector<std::uint32_t>> tables_;
};

inline ClassIntegralImage build_integral(const SemanticMask& mask,
                                         std::span<const std::uint8_t> classes) {
  return ClassIntegralImage(mask, classes);
}

inline std::int64_t count_in_rect(const ClassIntegralImage& integral, std::uint8_t c,
                                  const PixelRect& rect) {
  return integral.count(c, rect);
}

// Per-pixel scan with the same interface as ClassIntegralImage.
class NaiveCounter {
 public:
  explicit NaiveCounter(const SemanticMask& mask) : mask_(&mask) {}

  int width() const { return mask_->width(); }
  int height() const { return mask_->height(); }

  std::int64_t count(std::uint8_t c, const PixelRect& r) const {
    if (r.x0 < 0 || r.y0 < 0 || r.x1 > mask_->width() || r.y1 > mask_->height()) {
      throw Error(ErrorKind::RectOutOfBounds, "rectangle exceeds mask");
    }
    std::int64_t n = 0;
    for (int y = r.y0; y < r.y1; ++y) {
      const auto row = mask_->row(y);
      for (int x = r.x0; x < r.x1; ++x) n += row[x] == c;
    }
    return n;
  }

 private:
  const SemanticMask* mask_;
};

}  // namespace bboxforge
