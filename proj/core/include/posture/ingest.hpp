#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "posture/recording.hpp"

namespace posture {

inline constexpr double kRawRateHz = 100.0;
inline constexpr double kAnalysisRateHz = 10.0;

/// Reads the raw CSV format (`timestamp,x_g,y_g,z_g`).
///
/// The file may contain gaps (dropped samples); it is returned as one recording
/// per gap-free run, in time order, and the total sample count equals the row
/// count. Consecutive timestamps further apart than 1.5 periods start a new run.
/// Timestamps that go backwards or repeat raise ParseError::Kind::non_monotonic;
/// spacing below half a period raises irregular_spacing.
std::vector<TriaxialRecording> parse_raw(std::istream& in, const std::string& subject, Device device,
                                         double sample_rate_hz = kRawRateHz);

void write_raw(std::ostream& out, std::span<const TriaxialRecording> runs);

/// Reads the label CSV format (`start,end,posture`).
LabelTrack parse_labels(std::istream& in, const std::string& subject);
void write_labels(std::ostream& out, const LabelTrack& track);

/// 100 Hz to 10 Hz by averaging consecutive blocks of 10 samples. A trailing
/// partial block is dropped. Output sample j is stamped with the start of its block.
TriaxialRecording resample_to_10hz(const TriaxialRecording& rec);

struct DaytimeBounds {
    Millis begin = std::chrono::hours(7);
    Millis end = std::chrono::hours(19);

    /// Half-open [begin, end) on the time of day.
    bool contains(Timestamp t) const;
    /// True if the whole interval [start, end) falls inside one daytime span.
    bool contains(const Interval& iv) const;
};

/// Keeps samples whose time of day lies in the daytime bounds. Each contiguous
/// run of retained samples becomes its own recording; the result may be empty.
std::vector<TriaxialRecording> filter_daytime(const TriaxialRecording& rec, const DaytimeBounds& bounds = {});

struct NonwearParams {
    double zero_epsilon_g = 0.01;
    Millis min_duration = std::chrono::hours(2);
};

/// Intervals of no movement. A run grows while every axis of the next sample
/// stays within zero_epsilon of the run's running mean; runs lasting strictly
/// longer than min_duration are reported.
std::vector<Interval> detect_nonwear(const TriaxialRecording& rec, const NonwearParams& params = {});

struct LabeledWindow {
    std::string subject;
    Interval span;
    Posture label;
    std::vector<Accel> wrist;
    std::vector<Accel> ankle;

    std::span<const Accel> block(Device d) const { return d == Device::wrist ? wrist : ankle; }
};

/// Why a candidate window was not emitted. Checked in this order.
struct DropCounts {
    std::size_t outside_daytime = 0;
    std::size_t unlabeled = 0;
    std::size_t boundary = 0;  // straddles two label intervals
    std::size_t out_of_view = 0;
    std::size_t missing_device = 0;
    std::size_t nonwear = 0;
    std::size_t degenerate = 0;  // filled in by feature extraction

    std::size_t total() const {
        return outside_daytime + unlabeled + boundary + out_of_view + missing_device + nonwear + degenerate;
    }
    DropCounts& operator+=(const DropCounts& o);
};

struct WindowParams {
    Millis length = std::chrono::seconds(2);
    DaytimeBounds daytime{};
};

struct WindowingResult {
    std::vector<LabeledWindow> windows;
    std::size_t candidates = 0;
    DropCounts dropped;
};

/// Tiles non-overlapping windows from the first timestamp covered by both devices
/// to the last one covered by both. A window is emitted only if it lies within
/// daytime bounds, is covered by a single lying/sitting label interval, both
/// devices have every sample of it, and it meets no non-wear interval.
///
/// `wrist` and `ankle` are the gap-free runs of each device (any order).
/// Throws DataError on subject or sample-rate mismatch.
WindowingResult build_windows(std::span<const TriaxialRecording> wrist, std::span<const TriaxialRecording> ankle,
                              const LabelTrack& labels, std::span<const Interval> nonwear,
                              const WindowParams& params = {});

}  // namespace posture
