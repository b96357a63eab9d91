#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "posture/errors.hpp"
#include "posture/ingest.hpp"
#include "posture/random.hpp"

using namespace posture;
using namespace std::chrono_literals;

namespace {

Timestamp at(const char* text) { return *parse_timestamp(text); }

const Timestamp kMorning = at("2024-03-04T08:00:00");

TriaxialRecording constant(Device d, Timestamp start, std::size_t n, double rate, Accel a = {0, 0, 1},
                           const std::string& subject = "S01") {
    return TriaxialRecording(subject, d, rate, start, std::vector<Accel>(n, a));
}

ParseError::Kind parse_error_kind(const std::string& text, std::size_t* line = nullptr) {
    std::istringstream in(text);
    try {
        parse_raw(in, "S01", Device::wrist);
    } catch (const ParseError& e) {
        if (line) *line = e.line();
        return e.kind();
    }
    ADD_FAILURE() << "no parse error for:\n" << text;
    return ParseError::Kind::empty_input;
}

LabelTrack track(std::vector<LabelInterval> iv) { return LabelTrack("S01", std::move(iv)); }

}  // namespace

TEST(ParseRaw, ThreeRows) {
    std::istringstream in(
        "timestamp,x_g,y_g,z_g\n"
        "2024-03-04T08:00:00.000,0.1,0.2,0.9\n"
        "2024-03-04T08:00:00.010,0.1,0.2,0.9\n"
        "2024-03-04T08:00:00.020,-0.5,1e-3,1\n");
    const auto runs = parse_raw(in, "S01", Device::ankle);
    ASSERT_EQ(runs.size(), 1u);
    EXPECT_EQ(runs[0].size(), 3u);
    EXPECT_EQ(runs[0].sample_rate(), 100.0);
    EXPECT_EQ(runs[0].device(), Device::ankle);
    EXPECT_EQ(runs[0].start(), at("2024-03-04T08:00:00"));
    EXPECT_EQ(runs[0][2], (Accel{-0.5, 0.001, 1.0}));
}

TEST(ParseRaw, Errors) {
    const std::string h = "timestamp,x_g,y_g,z_g\n";
    std::size_t line = 0;
    EXPECT_EQ(parse_error_kind(""), ParseError::Kind::empty_input);
    EXPECT_EQ(parse_error_kind(h), ParseError::Kind::empty_input);
    EXPECT_EQ(parse_error_kind("time,x,y,z\n"), ParseError::Kind::bad_header);
    EXPECT_EQ(parse_error_kind(h + "2024-03-04T08:00:00.000,0,0,1\n2024-03-04T08:00:00.010,NaN,0,1\n", &line),
              ParseError::Kind::non_finite);
    EXPECT_EQ(line, 3u);
    EXPECT_EQ(parse_error_kind(h + "2024-03-04T08:00:00.000,0,abc,1\n", &line), ParseError::Kind::non_numeric);
    EXPECT_EQ(line, 2u);
    EXPECT_EQ(parse_error_kind(h + "2024-03-04T08:00:00.020,0,0,1\n2024-03-04T08:00:00.010,0,0,1\n", &line),
              ParseError::Kind::non_monotonic);
    EXPECT_EQ(line, 3u);
    EXPECT_EQ(parse_error_kind(h + "2024-03-04T08:00:00.010,0,0,1\n2024-03-04T08:00:00.010,0,0,1\n"),
              ParseError::Kind::non_monotonic);
    EXPECT_EQ(parse_error_kind(h + "2024-03-04T08:00:00.010,0,0,1\n2024-03-04T08:00:00.012,0,0,1\n"),
              ParseError::Kind::irregular_spacing);
    EXPECT_EQ(parse_error_kind(h + "yesterday,0,0,1\n"), ParseError::Kind::bad_timestamp);
    EXPECT_EQ(parse_error_kind(h + "2024-03-04T08:00:00.010,0,0\n"), ParseError::Kind::bad_field_count);
}

TEST(ParseRaw, GapsSplitRuns) {
    std::ostringstream text;
    text << "timestamp,x_g,y_g,z_g\n";
    for (int i : {0, 1, 2, 5, 6}) text << "2024-03-04T08:00:00.0" << i << "0,0,0,1\n";
    std::istringstream in(text.str());
    const auto runs = parse_raw(in, "S01", Device::wrist);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_EQ(runs[0].size(), 3u);
    EXPECT_EQ(runs[1].size(), 2u);
    EXPECT_EQ(runs[1].start(), at("2024-03-04T08:00:00.050"));
}

TEST(ParseRaw, WriteRoundTrip) {
    Rng rng(4);
    std::vector<Accel> s(500);
    for (auto& a : s) a = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const std::vector<TriaxialRecording> runs{TriaxialRecording("S01", Device::wrist, 100, kMorning, s),
                                              TriaxialRecording("S01", Device::wrist, 100, kMorning + 10s, s)};
    std::stringstream io;
    write_raw(io, runs);
    const auto back = parse_raw(io, "S01", Device::wrist);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].start(), kMorning + 10s);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(back[0][i].x, s[i].x, 5e-7);
}

TEST(ParseLabels, RoundTripAndErrors) {
    const auto t = track({{kMorning, kMorning + 60s, Posture::lying}, {kMorning + 60s, kMorning + 90s, Posture::out_of_view}});
    std::stringstream io;
    write_labels(io, t);
    const auto back = parse_labels(io, "S01");
    ASSERT_EQ(back.intervals().size(), 2u);
    EXPECT_EQ(back.intervals()[1].label, Posture::out_of_view);
    EXPECT_EQ(back.find(kMorning + 61s)->label, Posture::out_of_view);
    EXPECT_EQ(back.find(kMorning + 90s), nullptr);

    std::istringstream bad_label("start,end,posture\n2024-03-04T08:00:00,2024-03-04T08:01:00,standing\n");
    EXPECT_THROW(parse_labels(bad_label, "S01"), ParseError);
    std::istringstream overlap(
        "start,end,posture\n2024-03-04T08:00:00,2024-03-04T08:01:00,lying\n"
        "2024-03-04T08:00:30,2024-03-04T08:02:00,sitting\n");
    EXPECT_THROW(parse_labels(overlap, "S01"), ParseError);
    std::istringstream backwards("start,end,posture\n2024-03-04T08:01:00,2024-03-04T08:00:00,lying\n");
    EXPECT_THROW(parse_labels(backwards, "S01"), ParseError);
}

TEST(Recording, Invariants) {
    EXPECT_THROW(TriaxialRecording("S01", Device::wrist, 100, kMorning, {}), DataError);
    EXPECT_THROW(TriaxialRecording("S01", Device::wrist, 100, kMorning, {{0, std::nan(""), 1}}), DataError);
    EXPECT_THROW(TriaxialRecording("S01", Device::wrist, 0, kMorning, {{0, 0, 1}}), DataError);
}

TEST(Resample, Examples) {
    auto r = resample_to_10hz(constant(Device::wrist, kMorning, 10, 100));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0], (Accel{0, 0, 1}));
    EXPECT_EQ(r.sample_rate(), 10.0);

    std::vector<Accel> ramp(10);
    for (int i = 0; i < 10; ++i) ramp[static_cast<std::size_t>(i)] = {0.1 * (i + 1), 0, 1};
    r = resample_to_10hz(TriaxialRecording("S01", Device::wrist, 100, kMorning, ramp));
    EXPECT_NEAR(r[0].x, 0.55, 1e-15);

    r = resample_to_10hz(constant(Device::wrist, kMorning, 25, 100));
    EXPECT_EQ(r.size(), 2u);
    EXPECT_EQ(r.time_at(1), kMorning + 100ms);

    EXPECT_THROW(resample_to_10hz(constant(Device::wrist, kMorning, 25, 10)), DataError);
    EXPECT_THROW(resample_to_10hz(constant(Device::wrist, kMorning, 9, 100)), DataError);
}

TEST(Resample, PreservesMeanOfCompleteBlocks) {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 10 + rng.below(500);
        std::vector<Accel> s(n);
        for (auto& a : s) a = {rng.normal(), rng.normal(), rng.normal()};
        const auto r = resample_to_10hz(TriaxialRecording("S01", Device::wrist, 100, kMorning, s));
        ASSERT_EQ(r.size(), n / 10);
        double in = 0.0, out = 0.0;
        for (std::size_t i = 0; i < r.size() * 10; ++i) in += s[i].y;
        for (std::size_t i = 0; i < r.size(); ++i) out += r[i].y;
        EXPECT_NEAR(in / static_cast<double>(r.size() * 10), out / static_cast<double>(r.size()), 1e-12);
    }
}

TEST(FilterDaytime, Boundaries) {
    // 06:59:59.0 .. 07:00:01.0 at 10 Hz
    const auto rec = constant(Device::wrist, at("2024-03-04T06:59:59"), 20, 10);
    const auto kept = filter_daytime(rec);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].start(), at("2024-03-04T07:00:00"));
    EXPECT_EQ(kept[0].size(), 10u);

    const auto evening = constant(Device::wrist, at("2024-03-04T18:59:59"), 20, 10);
    ASSERT_EQ(filter_daytime(evening).size(), 1u);
    EXPECT_EQ(filter_daytime(evening)[0].end(), at("2024-03-04T19:00:00"));

    EXPECT_TRUE(filter_daytime(constant(Device::wrist, at("2024-03-04T20:00:00"), 72000, 10)).empty());
}

TEST(FilterDaytime, SplitsAcrossNights) {
    // 18:00 day one to 08:00 day two.
    const auto rec = constant(Device::wrist, at("2024-03-04T18:00:00"), 14 * 36000, 10);
    const auto kept = filter_daytime(rec);
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_EQ(kept[0].span().duration(), 1h);
    EXPECT_EQ(kept[1].start(), at("2024-03-05T07:00:00"));
    EXPECT_EQ(kept[1].span().duration(), 1h);
}

TEST(Nonwear, Thresholds) {
    const auto long_still = constant(Device::ankle, kMorning, (2 * 3600 + 60) * 10, 10);
    const auto found = detect_nonwear(long_still);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_EQ(found[0].start, kMorning);
    EXPECT_EQ(found[0].end, long_still.end());

    EXPECT_TRUE(detect_nonwear(constant(Device::ankle, kMorning, (2 * 3600 - 60) * 10, 10)).empty());
    // Exactly two hours is not longer than two hours.
    EXPECT_TRUE(detect_nonwear(constant(Device::ankle, kMorning, 2 * 3600 * 10, 10)).empty());
}

TEST(Nonwear, SpikesBreakContinuity) {
    std::vector<Accel> s((3 * 3600) * 10, Accel{0, 0, 1});
    for (std::size_t i = 0; i < s.size(); i += 30 * 60 * 10) s[i] = {0.5, 0, 1};
    EXPECT_TRUE(detect_nonwear(TriaxialRecording("S01", Device::ankle, 10, kMorning, s)).empty());
}

TEST(Nonwear, SmallNoiseStillCounts) {
    Rng rng(6);
    std::vector<Accel> s((2 * 3600 + 600) * 10);
    for (auto& a : s) a = {rng.normal(0, 0.0005), rng.normal(0, 0.0005), 1 + rng.normal(0, 0.0005)};
    EXPECT_EQ(detect_nonwear(TriaxialRecording("S01", Device::ankle, 10, kMorning, s)).size(), 1u);
}

TEST(BuildWindows, SixtySecondsLying) {
    const std::vector<TriaxialRecording> w{constant(Device::wrist, kMorning, 600, 10)};
    const std::vector<TriaxialRecording> a{constant(Device::ankle, kMorning, 600, 10)};
    const auto r = build_windows(w, a, track({{kMorning, kMorning + 60s, Posture::lying}}), {});
    EXPECT_EQ(r.windows.size(), 30u);
    EXPECT_EQ(r.candidates, 30u);
    EXPECT_EQ(r.dropped.total(), 0u);
    for (const auto& win : r.windows) {
        EXPECT_EQ(win.wrist.size(), 20u);
        EXPECT_EQ(win.ankle.size(), 20u);
        EXPECT_EQ(win.span.duration(), 2s);
        EXPECT_EQ(win.label, Posture::lying);
    }
}

TEST(BuildWindows, ExclusionRules) {
    const std::vector<TriaxialRecording> a{constant(Device::ankle, kMorning, 600, 10)};
    // Wrist misses 3 samples in the window at 10 s.
    const std::vector<TriaxialRecording> w{constant(Device::wrist, kMorning, 101, 10),
                                           constant(Device::wrist, kMorning + 10400ms, 600 - 104, 10)};
    const auto labels = track({{kMorning, kMorning + 21s, Posture::lying},
                               {kMorning + 21s, kMorning + 40s, Posture::sitting},
                               {kMorning + 40s, kMorning + 50s, Posture::out_of_view}});
    const std::vector<Interval> nonwear{{kMorning + 30s, kMorning + 31s}};
    const auto r = build_windows(w, a, labels, nonwear);
    EXPECT_EQ(r.candidates, 30u);
    EXPECT_EQ(r.dropped.missing_device, 1u);  // 10-12 s
    EXPECT_EQ(r.dropped.boundary, 1u);        // 20-22 s straddles lying/sitting
    EXPECT_EQ(r.dropped.nonwear, 1u);         // 30-32 s
    EXPECT_EQ(r.dropped.out_of_view, 5u);     // 40-50 s
    EXPECT_EQ(r.dropped.unlabeled, 5u);       // 50-60 s
    EXPECT_EQ(r.windows.size(), 30u - 13u);
    for (const auto& win : r.windows) {
        EXPECT_FALSE(win.span.intersects({kMorning + 10s, kMorning + 12s}));
        EXPECT_FALSE(win.span.intersects(nonwear[0]));
        EXPECT_TRUE(labels.find(win.span.start)->span().contains(win.span));
    }
}

TEST(BuildWindows, Daytime) {
    const auto start = at("2024-03-04T18:59:30");
    const std::vector<TriaxialRecording> w{constant(Device::wrist, start, 600, 10)};
    const std::vector<TriaxialRecording> a{constant(Device::ankle, start, 600, 10)};
    const auto r = build_windows(w, a, track({{start, start + 60s, Posture::sitting}}), {});
    EXPECT_EQ(r.windows.size(), 15u);
    EXPECT_EQ(r.dropped.outside_daytime, 15u);
}

TEST(BuildWindows, Mismatches) {
    const std::vector<TriaxialRecording> w{constant(Device::wrist, kMorning, 600, 10)};
    const std::vector<TriaxialRecording> a_other{constant(Device::ankle, kMorning, 600, 10, {0, 0, 1}, "S02")};
    const std::vector<TriaxialRecording> a_fast{constant(Device::ankle, kMorning, 600, 100)};
    const auto labels = track({{kMorning, kMorning + 60s, Posture::lying}});
    EXPECT_THROW(build_windows(w, a_other, labels, {}), DataError);
    EXPECT_THROW(build_windows(w, a_fast, labels, {}), DataError);
}

TEST(BuildWindows, OffsetStartsTileFromCommonStart) {
    const std::vector<TriaxialRecording> w{constant(Device::wrist, kMorning, 600, 10)};
    const std::vector<TriaxialRecording> a{constant(Device::ankle, kMorning + 700ms, 600, 10)};
    const auto r = build_windows(w, a, track({{kMorning, kMorning + 90s, Posture::lying}}), {});
    ASSERT_FALSE(r.windows.empty());
    EXPECT_EQ(r.windows.front().span.start, kMorning + 700ms);
    EXPECT_EQ(r.candidates, 29u);  // 59.3 s of overlap
}

// Random small tracks against the brute-force enumerator.
TEST(BuildWindows, MatchesEnumerator) {
    Rng rng(77);
    std::size_t emitted = 0, dropped = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto base = at("2024-03-04T06:58:00") + Millis(100 * static_cast<long>(rng.below(1200)));
        const auto make_runs = [&](Device d) {
            std::vector<TriaxialRecording> runs;
            auto t = base + Millis(100 * static_cast<long>(rng.below(30)));
            const std::size_t n_runs = 1 + rng.below(4);
            for (std::size_t k = 0; k < n_runs; ++k) {
                const std::size_t n = 1 + rng.below(400);
                runs.push_back(constant(d, t, n, 10));
                t += Millis(100 * static_cast<long>(n + 2 + rng.below(40)));
            }
            return runs;
        };
        const auto w = make_runs(Device::wrist);
        const auto a = make_runs(Device::ankle);
        std::vector<LabelInterval> iv;
        auto t = base + Millis(100 * static_cast<long>(rng.below(50)));
        for (int k = 0; k < 12; ++k) {
            const auto len = Millis(100 * static_cast<long>(1 + rng.below(300)));
            if (rng.uniform() < 0.8) iv.push_back({t, t + len, static_cast<Posture>(rng.below(3))});
            t += len + Millis(100 * static_cast<long>(rng.below(3) == 0 ? rng.below(30) : 0));
        }
        const auto labels = track(iv);
        std::vector<Interval> nonwear;
        if (rng.uniform() < 0.5) {
            const auto s = base + Millis(100 * static_cast<long>(rng.below(2000)));
            nonwear.push_back({s, s + Millis(100 * static_cast<long>(1 + rng.below(200)))});
        }
        const WindowParams params{Millis(1000 * static_cast<long>(1 + rng.below(3))), {}};
        const auto got = build_windows(w, a, labels, nonwear, params);
        const auto ref = oracle::enumerate_windows(w, a, labels, nonwear, params);
        ASSERT_EQ(got.windows.size(), ref.size()) << "trial " << trial;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            EXPECT_EQ(got.windows[i].span, ref[i].span);
            EXPECT_EQ(got.windows[i].label, ref[i].label);
        }
        EXPECT_EQ(got.candidates, got.windows.size() + got.dropped.total());
        emitted += ref.size();
        dropped += got.dropped.total();
    }
    EXPECT_GT(emitted, 1000u);
    EXPECT_GT(dropped, 1000u);
}
