#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace posture {

enum class Device : std::uint8_t { wrist, ankle };

// The two classification labels come first so that they double as class
// indices. out_of_view only exists on label tracks.
enum class Posture : std::uint8_t { lying = 0, sitting = 1, out_of_view = 2 };

enum class DeviceSet : std::uint8_t { wrist, ankle, both };

inline constexpr std::size_t kNumClasses = 2;
inline constexpr std::array<Posture, kNumClasses> kClassOrder = {Posture::lying, Posture::sitting};

inline constexpr std::size_t class_index(Posture p) { return static_cast<std::size_t>(p); }

std::string_view to_string(Device d);
std::string_view to_string(Posture p);
std::string_view to_string(DeviceSet s);

// Throw posture::DataError on unknown names.
Device parse_device(std::string_view name);
Posture parse_posture(std::string_view name);
DeviceSet parse_device_set(std::string_view name);

inline constexpr bool includes(DeviceSet set, Device d) {
    return set == DeviceSet::both || (set == DeviceSet::wrist) == (d == Device::wrist);
}

/// One triaxial acceleration sample in g.
struct Accel {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Accel&, const Accel&) = default;
};

}  // namespace posture
