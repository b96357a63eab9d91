#include "posture/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "posture/errors.hpp"
#include "posture/random.hpp"

namespace posture {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr std::size_t kSamplesPerSecond = 100;

double norm(const Accel& a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }

Accel scaled(const Accel& a, double s) { return {a.x * s, a.y * s, a.z * s}; }

Accel random_unit(Rng& rng) {
    while (true) {
        const Accel v{rng.normal(), rng.normal(), rng.normal()};
        const double n = norm(v);
        if (n > 1e-9) return scaled(v, 1.0 / n);
    }
}

// Rotates v about a random axis by an angle drawn from N(0, sd_deg).
Accel random_rotation(const Accel& v, double sd_deg, Rng& rng) {
    const Accel k = random_unit(rng);
    const double angle = rng.normal() * sd_deg * kDegToRad;
    if (sd_deg == 0.0) return v;
    const double c = std::cos(angle), s = std::sin(angle);
    const double dot = k.x * v.x + k.y * v.y + k.z * v.z;
    const Accel cross{k.y * v.z - k.z * v.y, k.z * v.x - k.x * v.z, k.x * v.y - k.y * v.x};
    // Rodrigues
    return {v.x * c + cross.x * s + k.x * dot * (1 - c), v.y * c + cross.y * s + k.y * dot * (1 - c),
            v.z * c + cross.z * s + k.z * dot * (1 - c)};
}

// Splits `total` into parts proportional to random weights in [0.5, 1.5).
std::vector<long long> random_partition(long long total, std::size_t parts, Rng& rng) {
    std::vector<double> w(parts);
    double sum = 0.0;
    for (auto& x : w) {
        x = rng.uniform(0.5, 1.5);
        sum += x;
    }
    std::vector<long long> out(parts);
    long long used = 0;
    for (std::size_t i = 0; i + 1 < parts; ++i) {
        out[i] = std::llround(static_cast<double>(total) * w[i] / sum);
        used += out[i];
    }
    out.back() = total - used;
    return out;
}

struct Bout {
    long long seconds;
    Posture label;
};

std::vector<Bout> posture_schedule(const CohortConfig& c, Rng& rng) {
    const long long total = std::llround(c.session_hours * 3600.0);
    auto n_oov = static_cast<std::size_t>(std::llround(c.session_hours * c.out_of_view_per_hour));
    const long long oov_len = std::llround(c.out_of_view_minutes * 60.0);
    if (oov_len <= 0) n_oov = 0;
    while (n_oov > 0 && static_cast<long long>(n_oov) * oov_len > total / 2) --n_oov;

    const long long posture_time = total - static_cast<long long>(n_oov) * oov_len;
    const long long sitting_time = std::llround(static_cast<double>(posture_time) / (1.0 + c.imbalance_ratio));
    const long long lying_time = posture_time - sitting_time;
    const auto m = static_cast<std::size_t>(std::max(1LL, std::llround(c.session_hours * c.sitting_bouts_per_hour)));

    const auto sit = random_partition(sitting_time, m, rng);
    const auto lie = random_partition(lying_time, m + 1, rng);
    std::vector<Bout> bouts;
    for (std::size_t i = 0; i <= m; ++i) {
        bouts.push_back({lie[i], Posture::lying});
        if (i < m) bouts.push_back({sit[i], Posture::sitting});
    }
    for (std::size_t i = 0; i < n_oov; ++i) {
        const std::size_t pos = rng.below(bouts.size() + 1);
        bouts.insert(bouts.begin() + static_cast<long>(pos), Bout{oov_len, Posture::out_of_view});
    }
    std::erase_if(bouts, [](const Bout& b) { return b.seconds <= 0; });
    return bouts;
}

struct DeviceSignal {
    std::vector<Accel> samples;
};

void add_bursts(std::vector<Accel>& s, std::size_t first, std::size_t last, double rate_per_hour, double amplitude,
                const CohortConfig& c, Rng& rng) {
    if (rate_per_hour <= 0.0 || amplitude <= 0.0 || c.burst_seconds <= 0.0) return;
    const double mean_gap = 3600.0 / rate_per_hour;
    const auto len = static_cast<std::size_t>(std::llround(c.burst_seconds * kSamplesPerSecond));
    double t = rng.exponential(mean_gap);
    while (true) {
        const std::size_t at = first + static_cast<std::size_t>(t * kSamplesPerSecond);
        if (at >= last) break;
        const double f = rng.uniform(0.6, 2.5);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Accel dir = random_unit(rng);
        const double a = amplitude * rng.uniform(0.5, 1.5);
        const std::size_t end = std::min(last, at + len);
        for (std::size_t i = at; i < end; ++i) {
            const double u = static_cast<double>(i - at) / static_cast<double>(len);
            const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u);
            const double v = a * env * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i - at) / kSamplesPerSecond + phase);
            s[i].x += v * dir.x;
            s[i].y += v * dir.y;
            s[i].z += v * dir.z;
        }
        t += (len / static_cast<double>(kSamplesPerSecond)) + rng.exponential(mean_gap);
    }
}

std::vector<TriaxialRecording> split_runs(const std::string& subject, Device device, Timestamp start,
                                          const std::vector<Accel>& samples, const std::vector<bool>& removed) {
    std::vector<TriaxialRecording> runs;
    std::size_t i = 0;
    const Millis period(1000 / kSamplesPerSecond);
    while (i < samples.size()) {
        while (i < samples.size() && removed[i]) ++i;
        const std::size_t first = i;
        while (i < samples.size() && !removed[i]) ++i;
        if (i > first) {
            runs.emplace_back(subject, device, static_cast<double>(kSamplesPerSecond),
                              start + period * static_cast<long>(first),
                              std::vector<Accel>(samples.begin() + static_cast<long>(first),
                                                 samples.begin() + static_cast<long>(i)));
        }
    }
    return runs;
}

}  // namespace

void CohortConfig::validate() {
    if (n_subjects < 1) throw DataError("n_subjects must be at least 1");
    if (!(imbalance_ratio > 0.0)) throw DataError("imbalance_ratio must be positive");
    if (!(session_hours > 0.0)) throw DataError("session_hours must be positive");
    const double rates[] = {sitting_bouts_per_hour, out_of_view_per_hour, out_of_view_minutes, wrist_jitter_deg,
                            ankle_jitter_deg, mount_jitter_deg, burst_amplitude_g, burst_seconds, wrist_burst_scale,
                            noise_sd_g, nonwear_hours, nonwear_noise_sd_g, dropouts_per_hour, dropout_seconds,
                            lying.burst_rate_per_hour, sitting.burst_rate_per_hour};
    for (double r : rates) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw DataError("cohort rates and amplitudes must be finite and >= 0");
    }
    for (Accel* g : {&lying.wrist_gravity, &lying.ankle_gravity, &sitting.wrist_gravity, &sitting.ankle_gravity}) {
        const double n = norm(*g);
        if (!(n > 1e-9) || !std::isfinite(n)) throw DataError("gravity direction must be a non-zero vector");
        *g = scaled(*g, 1.0 / n);
    }
}

std::string subject_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "S%02zu", index + 1);
    return buf;
}

SubjectData generate_subject(const CohortConfig& config_in, std::size_t index) {
    CohortConfig config = config_in;
    config.validate();
    const std::uint64_t subject_seed = derive_seed(config.seed, index);
    Rng schedule_rng(derive_seed(subject_seed, 0));

    const std::string name = subject_name(index);
    const Timestamp start = std::chrono::sys_days{config.first_day} + std::chrono::days(static_cast<long>(index)) +
                            config.session_start;
    const auto bouts = posture_schedule(config, schedule_rng);

    std::vector<LabelInterval> intervals;
    Timestamp t = start;
    for (const auto& b : bouts) {
        const Timestamp e = t + std::chrono::seconds(b.seconds);
        intervals.push_back({t, e, b.label});
        t = e;
    }
    const Timestamp end = t;
    const auto n = static_cast<std::size_t>((end - start).count() / 10);

    SubjectData out{name, {}, {}, LabelTrack(name, intervals), {}, {}};
    std::vector<Accel> signals[2];
    for (Device dev : {Device::wrist, Device::ankle}) {
        Rng rng(derive_seed(subject_seed, 1 + static_cast<std::uint64_t>(dev)));
        const bool wrist = dev == Device::wrist;
        const double jitter = wrist ? config.wrist_jitter_deg : config.ankle_jitter_deg;
        // One mounting offset per subject and device, shared by all postures.
        const Accel mount_axis = random_unit(rng);
        const double mount_angle = rng.normal() * config.mount_jitter_deg * kDegToRad;
        const auto mount = [&](const Accel& v) {
            const double c = std::cos(mount_angle), s = std::sin(mount_angle);
            const Accel& k = mount_axis;
            const double dot = k.x * v.x + k.y * v.y + k.z * v.z;
            const Accel cross{k.y * v.z - k.z * v.y, k.z * v.x - k.x * v.z, k.x * v.y - k.y * v.x};
            return Accel{v.x * c + cross.x * s + k.x * dot * (1 - c), v.y * c + cross.y * s + k.y * dot * (1 - c),
                         v.z * c + cross.z * s + k.z * dot * (1 - c)};
        };

        auto& s = signals[static_cast<int>(dev)];
        s.assign(n, Accel{});
        for (const auto& iv : intervals) {
            Posture p = iv.label;
            if (p == Posture::out_of_view) {
                p = rng.uniform() * (1.0 + config.imbalance_ratio) < 1.0 ? Posture::sitting : Posture::lying;
            }
            const PostureProfile& prof = p == Posture::sitting ? config.sitting : config.lying;
            const Accel g = random_rotation(mount(wrist ? prof.wrist_gravity : prof.ankle_gravity), jitter, rng);
            const auto first = static_cast<std::size_t>((iv.start - start).count() / 10);
            const auto last = static_cast<std::size_t>((iv.end - start).count() / 10);
            std::fill(s.begin() + static_cast<long>(first), s.begin() + static_cast<long>(last), g);
            add_bursts(s, first, last, prof.burst_rate_per_hour,
                       config.burst_amplitude_g * (wrist ? config.wrist_burst_scale : 1.0), config, rng);
        }
        if (config.noise_sd_g > 0.0) {
            for (auto& a : s) {
                a.x += rng.normal() * config.noise_sd_g;
                a.y += rng.normal() * config.noise_sd_g;
                a.z += rng.normal() * config.noise_sd_g;
            }
        }
    }

    // Non-wear: the ankle device lies still somewhere.
    Rng event_rng(derive_seed(subject_seed, 7));
    for (std::size_t e = 0; e < config.nonwear_episodes; ++e) {
        const auto len = std::min(n, static_cast<std::size_t>(std::llround(config.nonwear_hours * 3600.0 * kSamplesPerSecond)));
        const std::size_t first = n > len ? event_rng.below(n - len + 1) : 0;
        const Accel rest = random_unit(event_rng);
        auto& s = signals[static_cast<int>(Device::ankle)];
        for (std::size_t i = first; i < first + len; ++i) {
            s[i] = {rest.x + event_rng.normal() * config.nonwear_noise_sd_g,
                    rest.y + event_rng.normal() * config.nonwear_noise_sd_g,
                    rest.z + event_rng.normal() * config.nonwear_noise_sd_g};
        }
        out.nonwear.push_back({start + Millis(10 * static_cast<long>(first)), start + Millis(10 * static_cast<long>(first + len))});
    }

    std::vector<bool> removed[2] = {std::vector<bool>(n, false), std::vector<bool>(n, false)};
    if (config.dropouts_per_hour > 0.0 && config.dropout_seconds > 0.0) {
        const double mean_gap = 3600.0 / config.dropouts_per_hour;
        const auto len = static_cast<std::size_t>(std::llround(config.dropout_seconds * kSamplesPerSecond));
        for (double at = event_rng.exponential(mean_gap); at < config.session_hours * 3600.0;
             at += event_rng.exponential(mean_gap)) {
            const auto dev = event_rng.below(2);
            const auto first = static_cast<std::size_t>(at * kSamplesPerSecond);
            const std::size_t last = std::min(n, first + len);
            for (std::size_t i = first; i < last; ++i) removed[dev][i] = true;
            out.dropouts.push_back({start + Millis(10 * static_cast<long>(first)), start + Millis(10 * static_cast<long>(last))});
        }
    }

    out.wrist = split_runs(name, Device::wrist, start, signals[0], removed[0]);
    out.ankle = split_runs(name, Device::ankle, start, signals[1], removed[1]);
    return out;
}

std::vector<SubjectData> generate_cohort(const CohortConfig& config) {
    std::vector<SubjectData> out;
    out.reserve(config.n_subjects);
    for (std::size_t i = 0; i < config.n_subjects; ++i) out.push_back(generate_subject(config, i));
    return out;
}

CohortFiles subject_files(const std::filesystem::path& dir, const std::string& subject) {
    return {dir / (subject + "_wrist.csv"), dir / (subject + "_ankle.csv"), dir / (subject + "_labels.csv")};
}

void write_subject(const std::filesystem::path& dir, const SubjectData& data) {
    const auto files = subject_files(dir, data.subject);
    const auto open = [](const std::filesystem::path& p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw DataError("cannot write " + p.string());
        return f;
    };
    {
        auto f = open(files.wrist);
        write_raw(f, data.wrist);
    }
    {
        auto f = open(files.ankle);
        write_raw(f, data.ankle);
    }
    auto f = open(files.labels);
    write_labels(f, data.labels);
    if (!f) throw DataError("failed writing " + files.labels.string());
}

}  // namespace posture
