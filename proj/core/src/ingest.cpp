#include "posture/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "posture/errors.hpp"

namespace posture {
namespace {

using Kind = ParseError::Kind;

constexpr std::string_view kRawHeader = "timestamp,x_g,y_g,z_g";
constexpr std::string_view kLabelHeader = "start,end,posture";

bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

// Splits on ',' into at most N fields; returns the field count found.
template <std::size_t N>
std::size_t split_fields(std::string_view line, std::array<std::string_view, N>& out) {
    std::size_t n = 0;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        if (n == N) return N + 1;
        out[n++] = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (comma == std::string_view::npos) return n;
        pos = comma + 1;
    }
}

double parse_number(std::string_view field, std::size_t line_no, const char* what) {
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    while (first != last && *first == ' ') ++first;
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw ParseError(Kind::non_numeric, line_no, std::string(what) + " is not a number: '" + std::string(field) + "'");
    }
    if (!std::isfinite(v)) {
        throw ParseError(Kind::non_finite, line_no, std::string(what) + " is not finite: '" + std::string(field) + "'");
    }
    return v;
}

Timestamp parse_time_field(std::string_view field, std::size_t line_no) {
    const auto t = parse_timestamp(field);
    if (!t) throw ParseError(Kind::bad_timestamp, line_no, "bad timestamp '" + std::string(field) + "'");
    return *t;
}

// Formats timestamps quickly for long runs by caching the date prefix.
class TimestampWriter {
public:
    std::string_view format(Timestamp t) {
        using namespace std::chrono;
        const auto day = floor<days>(t);
        if (day != cached_day_) {
            const std::string full = format_timestamp(t);
            prefix_ = full.substr(0, 11);
            cached_day_ = day;
        }
        const auto ms = (t - day).count();
        buf_ = prefix_;
        char tail[16];
        const auto put2 = [&](char* p, long long v) {
            p[0] = static_cast<char>('0' + v / 10);
            p[1] = static_cast<char>('0' + v % 10);
        };
        put2(tail, ms / 3600000);
        tail[2] = ':';
        put2(tail + 3, ms / 60000 % 60);
        tail[5] = ':';
        put2(tail + 6, ms / 1000 % 60);
        tail[8] = '.';
        const long long frac = ms % 1000;
        tail[9] = static_cast<char>('0' + frac / 100);
        tail[10] = static_cast<char>('0' + frac / 10 % 10);
        tail[11] = static_cast<char>('0' + frac % 10);
        buf_.append(tail, 12);
        return buf_;
    }

private:
    std::chrono::sys_days cached_day_{std::chrono::days::min()};
    std::string prefix_;
    std::string buf_;
};

void append_fixed(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
    out.append(buf, res.ptr);
}

}  // namespace

std::vector<TriaxialRecording> parse_raw(std::istream& in, const std::string& subject, Device device,
                                         double sample_rate_hz) {
    std::string line;
    if (!next_line(in, line)) throw ParseError(Kind::empty_input, 1, "raw file is empty");
    if (line != kRawHeader) {
        throw ParseError(Kind::bad_header, 1, "expected header '" + std::string(kRawHeader) + "'");
    }
    const double period_ms = 1000.0 / sample_rate_hz;

    std::vector<TriaxialRecording> runs;
    std::vector<Accel> current;
    Timestamp run_start{};
    Timestamp prev{};
    std::size_t line_no = 1;
    std::size_t rows = 0;

    const auto flush = [&] {
        if (!current.empty()) {
            runs.emplace_back(subject, device, sample_rate_hz, run_start, std::move(current));
            current = {};
        }
    };

    std::array<std::string_view, 4> f;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (split_fields(line, f) != 4) {
            throw ParseError(Kind::bad_field_count, line_no, "expected 4 fields");
        }
        const Timestamp t = parse_time_field(f[0], line_no);
        const Accel a{parse_number(f[1], line_no, "x_g"), parse_number(f[2], line_no, "y_g"),
                      parse_number(f[3], line_no, "z_g")};
        if (rows > 0) {
            const double delta = static_cast<double>((t - prev).count());
            if (delta <= 0.0) {
                throw ParseError(Kind::non_monotonic, line_no,
                                 "timestamp " + std::string(f[0]) + " does not advance past the previous row");
            }
            if (2.0 * delta < period_ms) {
                throw ParseError(Kind::irregular_spacing, line_no,
                                 "samples closer than half a period at " + std::string(f[0]));
            }
            if (2.0 * delta >= 3.0 * period_ms) flush();
        }
        if (current.empty()) run_start = t;
        current.push_back(a);
        prev = t;
        ++rows;
    }
    if (rows == 0) throw ParseError(Kind::empty_input, line_no, "raw file has no samples");
    flush();
    return runs;
}

void write_raw(std::ostream& out, std::span<const TriaxialRecording> runs) {
    out << kRawHeader << '\n';
    TimestampWriter tw;
    std::string buf;
    buf.reserve(1 << 20);
    for (const auto& run : runs) {
        for (std::size_t i = 0; i < run.size(); ++i) {
            buf += tw.format(run.time_at(i));
            buf += ',';
            append_fixed(buf, run[i].x);
            buf += ',';
            append_fixed(buf, run[i].y);
            buf += ',';
            append_fixed(buf, run[i].z);
            buf += '\n';
            if (buf.size() > (1 << 20) - 256) {
                out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
                buf.clear();
            }
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

LabelTrack parse_labels(std::istream& in, const std::string& subject) {
    std::string line;
    if (!next_line(in, line)) throw ParseError(Kind::empty_input, 1, "label file is empty");
    if (line != kLabelHeader) {
        throw ParseError(Kind::bad_header, 1, "expected header '" + std::string(kLabelHeader) + "'");
    }
    std::vector<LabelInterval> intervals;
    std::size_t line_no = 1;
    std::array<std::string_view, 3> f;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (split_fields(line, f) != 3) throw ParseError(Kind::bad_field_count, line_no, "expected 3 fields");
        LabelInterval iv{parse_time_field(f[0], line_no), parse_time_field(f[1], line_no), Posture::lying};
        try {
            iv.label = parse_posture(f[2]);
        } catch (const DataError&) {
            throw ParseError(Kind::bad_label, line_no, "unknown posture '" + std::string(f[2]) + "'");
        }
        if (!(iv.start < iv.end)) throw ParseError(Kind::bad_timestamp, line_no, "interval start is not before end");
        if (!intervals.empty() && iv.start < intervals.back().end) {
            throw ParseError(Kind::overlapping_intervals, line_no, "interval overlaps or precedes the previous one");
        }
        intervals.push_back(iv);
    }
    return LabelTrack(subject, std::move(intervals));
}

void write_labels(std::ostream& out, const LabelTrack& track) {
    out << kLabelHeader << '\n';
    for (const auto& iv : track.intervals()) {
        out << format_timestamp(iv.start) << ',' << format_timestamp(iv.end) << ',' << to_string(iv.label) << '\n';
    }
}

TriaxialRecording resample_to_10hz(const TriaxialRecording& rec) {
    if (rec.sample_rate() != kRawRateHz) {
        throw DataError("resample_to_10hz expects 100 Hz input, got " + std::to_string(rec.sample_rate()) + " Hz");
    }
    constexpr std::size_t kBlock = 10;
    if (rec.size() < kBlock) throw DataError("resample_to_10hz needs at least 10 samples");
    const std::size_t n_out = rec.size() / kBlock;
    std::vector<Accel> out(n_out);
    const auto in = rec.samples();
    for (std::size_t j = 0; j < n_out; ++j) {
        double sx = 0.0, sy = 0.0, sz = 0.0;
        for (std::size_t i = j * kBlock; i < (j + 1) * kBlock; ++i) {
            sx += in[i].x;
            sy += in[i].y;
            sz += in[i].z;
        }
        out[j] = {sx / kBlock, sy / kBlock, sz / kBlock};
    }
    return TriaxialRecording(rec.subject(), rec.device(), kAnalysisRateHz, rec.start(), std::move(out));
}

bool DaytimeBounds::contains(Timestamp t) const {
    const Millis tod = time_of_day(t);
    return begin <= tod && tod < end;
}

bool DaytimeBounds::contains(const Interval& iv) const {
    const auto day = std::chrono::floor<std::chrono::days>(iv.start);
    return contains(iv.start) && iv.end <= day + end;
}

std::vector<TriaxialRecording> filter_daytime(const TriaxialRecording& rec, const DaytimeBounds& bounds) {
    std::vector<TriaxialRecording> runs;
    std::size_t i = 0;
    const std::size_t n = rec.size();
    while (i < n) {
        while (i < n && !bounds.contains(rec.time_at(i))) ++i;
        const std::size_t first = i;
        while (i < n && bounds.contains(rec.time_at(i))) ++i;
        if (i > first) runs.push_back(rec.slice(first, i - first));
    }
    return runs;
}

std::vector<Interval> detect_nonwear(const TriaxialRecording& rec, const NonwearParams& params) {
    std::vector<Interval> found;
    const auto s = rec.samples();
    const double eps = params.zero_epsilon_g;

    const auto report = [&](std::size_t first, std::size_t last) {
        const Interval iv{rec.time_at(first), rec.time_at(last)};
        if (iv.duration() > params.min_duration) found.push_back(iv);
    };

    std::size_t first = 0;
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t count = i - first;
        if (count > 0) {
            const double n = static_cast<double>(count);
            const bool still = std::abs(s[i].x - sx / n) <= eps && std::abs(s[i].y - sy / n) <= eps &&
                               std::abs(s[i].z - sz / n) <= eps;
            if (!still) {
                report(first, i);
                first = i;
                sx = sy = sz = 0.0;
            }
        }
        sx += s[i].x;
        sy += s[i].y;
        sz += s[i].z;
    }
    if (!s.empty()) report(first, s.size());
    return found;
}

DropCounts& DropCounts::operator+=(const DropCounts& o) {
    outside_daytime += o.outside_daytime;
    unlabeled += o.unlabeled;
    boundary += o.boundary;
    out_of_view += o.out_of_view;
    missing_device += o.missing_device;
    nonwear += o.nonwear;
    degenerate += o.degenerate;
    return *this;
}

namespace {

std::vector<const TriaxialRecording*> sorted_runs(std::span<const TriaxialRecording> runs) {
    std::vector<const TriaxialRecording*> out;
    out.reserve(runs.size());
    for (const auto& r : runs) out.push_back(&r);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->start() < b->start(); });
    return out;
}

long ceil_div(long a, long b) {
    // b > 0
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

// The samples of `runs` stamped within [ws, we), if one run holds all `expected` of them.
std::optional<std::span<const Accel>> complete_block(const std::vector<const TriaxialRecording*>& runs,
                                                     Timestamp ws, Timestamp we, std::size_t expected) {
    if (runs.empty()) return std::nullopt;
    const Millis period = runs.front()->period();
    // Last run starting before ws + period.
    auto it = std::upper_bound(runs.begin(), runs.end(), ws + period - Millis(1),
                               [](Timestamp t, const TriaxialRecording* r) { return t < r->start(); });
    if (it == runs.begin()) return std::nullopt;
    const TriaxialRecording& run = **(it - 1);
    const long first = std::max(0L, ceil_div((ws - run.start()).count(), period.count()));
    const long last = ceil_div((we - run.start()).count(), period.count());
    if (last - first != static_cast<long>(expected) || last > static_cast<long>(run.size())) return std::nullopt;
    return run.samples().subspan(static_cast<std::size_t>(first), expected);
}

}  // namespace

WindowingResult build_windows(std::span<const TriaxialRecording> wrist, std::span<const TriaxialRecording> ankle,
                              const LabelTrack& labels, std::span<const Interval> nonwear,
                              const WindowParams& params) {
    WindowingResult result;
    std::optional<double> rate;
    for (auto runs : {wrist, ankle}) {
        for (const auto& r : runs) {
            if (r.subject() != labels.subject()) {
                throw DataError("subject mismatch: recording '" + r.subject() + "' vs labels '" + labels.subject() + "'");
            }
            if (rate && *rate != r.sample_rate()) throw DataError("sample rate mismatch between recordings");
            rate = r.sample_rate();
        }
    }
    for (const auto& r : wrist) {
        if (r.device() != Device::wrist) throw DataError("non-wrist recording passed as wrist");
    }
    for (const auto& r : ankle) {
        if (r.device() != Device::ankle) throw DataError("non-ankle recording passed as ankle");
    }
    if (wrist.empty() || ankle.empty()) return result;

    const Millis period = wrist.front().period();
    if (params.length.count() <= 0 || params.length.count() % period.count() != 0) {
        throw DataError("window length must be a positive multiple of the sample period");
    }
    const auto expected = static_cast<std::size_t>(params.length / period);

    const auto w_runs = sorted_runs(wrist);
    const auto a_runs = sorted_runs(ankle);
    const auto last_end = [](const std::vector<const TriaxialRecording*>& runs) {
        Timestamp e = runs.front()->end();
        for (auto* r : runs) e = std::max(e, r->end());
        return e;
    };
    const Timestamp t0 = std::max(w_runs.front()->start(), a_runs.front()->start());
    const Timestamp t_end = std::min(last_end(w_runs), last_end(a_runs));

    std::vector<Interval> nw(nonwear.begin(), nonwear.end());
    std::sort(nw.begin(), nw.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
    const auto touches_nonwear = [&](const Interval& win) {
        for (const auto& iv : nw) {
            if (iv.start >= win.end) break;
            if (iv.intersects(win)) return true;
        }
        return false;
    };

    const auto intervals = labels.intervals();
    for (Timestamp ws = t0; ws + params.length <= t_end; ws += params.length) {
        const Interval win{ws, ws + params.length};
        ++result.candidates;
        if (!params.daytime.contains(win)) {
            ++result.dropped.outside_daytime;
            continue;
        }
        // Label intervals meeting the window.
        auto lo = std::lower_bound(intervals.begin(), intervals.end(), win.start,
                                   [](const LabelInterval& iv, Timestamp t) { return iv.end <= t; });
        auto hi = lo;
        while (hi != intervals.end() && hi->start < win.end) ++hi;
        if (lo == hi) {
            ++result.dropped.unlabeled;
            continue;
        }
        if (hi - lo > 1 || !lo->span().contains(win)) {
            ++result.dropped.boundary;
            continue;
        }
        if (lo->label == Posture::out_of_view) {
            ++result.dropped.out_of_view;
            continue;
        }
        const auto wb = complete_block(w_runs, win.start, win.end, expected);
        const auto ab = complete_block(a_runs, win.start, win.end, expected);
        if (!wb || !ab) {
            ++result.dropped.missing_device;
            continue;
        }
        if (touches_nonwear(win)) {
            ++result.dropped.nonwear;
            continue;
        }
        result.windows.push_back(LabeledWindow{labels.subject(), win, lo->label,
                                               std::vector<Accel>(wb->begin(), wb->end()),
                                               std::vector<Accel>(ab->begin(), ab->end())});
    }
    return result;
}

}  // namespace posture
