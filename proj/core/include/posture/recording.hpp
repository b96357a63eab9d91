#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "posture/time.hpp"
#include "posture/types.hpp"

namespace posture {

/// A gap-free, uniformly sampled stretch of one device's acceleration.
/// Sample i was taken at start() + i * period().
class TriaxialRecording {
public:
    /// Throws DataError if `samples` is empty, holds a non-finite component, or the
    /// rate does not map to a whole number of milliseconds per sample.
    TriaxialRecording(std::string subject, Device device, double sample_rate_hz, Timestamp start,
                      std::vector<Accel> samples);

    const std::string& subject() const { return subject_; }
    Device device() const { return device_; }
    double sample_rate() const { return rate_; }
    Millis period() const { return period_; }
    Timestamp start() const { return start_; }
    Timestamp end() const { return start_ + period_ * static_cast<long>(samples_.size()); }
    Interval span() const { return {start(), end()}; }

    std::size_t size() const { return samples_.size(); }
    std::span<const Accel> samples() const { return samples_; }
    const Accel& operator[](std::size_t i) const { return samples_[i]; }
    Timestamp time_at(std::size_t i) const { return start_ + period_ * static_cast<long>(i); }

    /// Copy of samples [first, first + count) as a new recording.
    TriaxialRecording slice(std::size_t first, std::size_t count) const;

private:
    std::string subject_;
    Device device_;
    double rate_;
    Millis period_;
    Timestamp start_;
    std::vector<Accel> samples_;
};

struct LabelInterval {
    Timestamp start;
    Timestamp end;
    Posture label;

    Interval span() const { return {start, end}; }
};

/// Sorted, non-overlapping posture annotations for one subject.
class LabelTrack {
public:
    /// Throws DataError unless every interval has start < end and the list is
    /// sorted and non-overlapping.
    LabelTrack(std::string subject, std::vector<LabelInterval> intervals);

    const std::string& subject() const { return subject_; }
    std::span<const LabelInterval> intervals() const { return intervals_; }

    /// The interval that contains `t`, if any.
    const LabelInterval* find(Timestamp t) const;

private:
    std::string subject_;
    std::vector<LabelInterval> intervals_;
};

}  // namespace posture
