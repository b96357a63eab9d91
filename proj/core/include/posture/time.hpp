#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace posture {

using Millis = std::chrono::milliseconds;

// Wall-clock time of the recording site. No timezone conversion is ever applied;
// the sys_time clock is only used for its calendar arithmetic.
using Timestamp = std::chrono::sys_time<Millis>;

/// Parses `YYYY-MM-DDTHH:MM:SS` with an optional fractional part of up to 3 digits
/// (a space is accepted in place of `T`).
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// ISO-8601 with millisecond precision, e.g. `2024-03-01T07:00:00.010`.
std::string format_timestamp(Timestamp t);

/// Milliseconds elapsed since local midnight.
Millis time_of_day(Timestamp t);

/// Parses `HH:MM[:SS]` into a time-of-day offset.
std::optional<Millis> parse_time_of_day(std::string_view text);

struct Interval {
    Timestamp start;
    Timestamp end;  // exclusive

    Millis duration() const { return end - start; }
    bool intersects(const Interval& other) const { return start < other.end && other.start < end; }
    bool contains(const Interval& other) const { return start <= other.start && other.end <= end; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

}  // namespace posture
