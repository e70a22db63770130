#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace bboxforge {

// Label classes. The numeric value is the class index written to label files.
enum class ObjectClass : std::uint8_t {
  Car = 0,
  Bus = 1,
  Truck = 2,
  Van = 3,
  Walker = 4,
  TrafficLight = 5,
};

inline constexpr std::size_t kNumClasses = 6;

inline constexpr std::array<ObjectClass, kNumClasses> kAllClasses = {
    ObjectClass::Car,    ObjectClass::Bus,    ObjectClass::Truck,
    ObjectClass::Van,    ObjectClass::Walker, ObjectClass::TrafficLight,
};

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "car", "bus", "truck", "van", "walker", "traffic_light",
};

constexpr int class_index(ObjectClass c) { return static_cast<int>(c); }

constexpr std::string_view class_name(ObjectClass c) { return kClassNames[class_index(c)]; }

inline std::optional<ObjectClass> parse_class(std::string_view name) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kClassNames[i] == name) return kAllClasses[i];
  }
  return std::nullopt;
}

}  // namespace bboxforge
