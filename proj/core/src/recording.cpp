#include "posture/recording.hpp"

#include <algorithm>
#include <cmath>

#include "posture/errors.hpp"

namespace posture {

ParseError::ParseError(Kind kind, std::size_t line, const std::string& what)
    : Error(line ? "line " + std::to_string(line) + ": " + what : what), kind_(kind), line_(line) {}

std::string_view to_string(Device d) {
    return d == Device::wrist ? "wrist" : "ankle";
}

std::string_view to_string(Posture p) {
    switch (p) {
        case Posture::lying: return "lying";
        case Posture::sitting: return "sitting";
        case Posture::out_of_view: return "out_of_view";
    }
    return "?";
}

std::string_view to_string(DeviceSet s) {
    switch (s) {
        case DeviceSet::wrist: return "wrist";
        case DeviceSet::ankle: return "ankle";
        case DeviceSet::both: return "both";
    }
    return "?";
}

Device parse_device(std::string_view name) {
    if (name == "wrist") return Device::wrist;
    if (name == "ankle") return Device::ankle;
    throw DataError("unknown device '" + std::string(name) + "'");
}

Posture parse_posture(std::string_view name) {
    if (name == "lying") return Posture::lying;
    if (name == "sitting") return Posture::sitting;
    if (name == "out_of_view") return Posture::out_of_view;
    throw DataError("unknown posture '" + std::string(name) + "'");
}

DeviceSet parse_device_set(std::string_view name) {
    if (name == "wrist") return DeviceSet::wrist;
    if (name == "ankle") return DeviceSet::ankle;
    if (name == "both") return DeviceSet::both;
    throw DataError("unknown device set '" + std::string(name) + "'");
}

TriaxialRecording::TriaxialRecording(std::string subject, Device device, double sample_rate_hz, Timestamp start,
                                     std::vector<Accel> samples)
    : subject_(std::move(subject)), device_(device), rate_(sample_rate_hz), period_(0), start_(start),
      samples_(std::move(samples)) {
    if (!(rate_ > 0.0) || !std::isfinite(rate_)) throw DataError("sample rate must be positive");
    const double period_ms = 1000.0 / rate_;
    if (std::abs(period_ms - std::round(period_ms)) > 1e-9 || period_ms < 1.0) {
        throw DataError("sample rate must give a whole number of milliseconds per sample");
    }
    period_ = Millis(static_cast<long>(std::lround(period_ms)));
    if (samples_.empty()) throw DataError("recording for " + subject_ + " is empty");
    for (const auto& s : samples_) {
        if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z)) {
            throw DataError("recording for " + subject_ + " has a non-finite sample");
        }
    }
}

TriaxialRecording TriaxialRecording::slice(std::size_t first, std::size_t count) const {
    std::vector<Accel> part(samples_.begin() + static_cast<long>(first),
                            samples_.begin() + static_cast<long>(first + count));
    return TriaxialRecording(subject_, device_, rate_, time_at(first), std::move(part));
}

LabelTrack::LabelTrack(std::string subject, std::vector<LabelInterval> intervals)
    : subject_(std::move(subject)), intervals_(std::move(intervals)) {
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        if (!(intervals_[i].start < intervals_[i].end)) {
            throw DataError("label interval " + std::to_string(i + 1) + " of " + subject_ + " has start >= end");
        }
        if (i > 0 && intervals_[i].start < intervals_[i - 1].end) {
            throw DataError("label intervals of " + subject_ + " overlap or are unsorted at " + std::to_string(i + 1));
        }
    }
}

const LabelInterval* LabelTrack::find(Timestamp t) const {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), t,
                               [](Timestamp v, const LabelInterval& iv) { return v < iv.start; });
    if (it == intervals_.begin()) return nullptr;
    --it;
    return t < it->end ? &*it : nullptr;
}

}  // namespace posture
