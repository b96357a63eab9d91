#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "posture/ingest.hpp"
#include "posture/recording.hpp"
#include "posture/time.hpp"

namespace posture {

/// Device orientation and movement behaviour for one posture.
struct PostureProfile {
    Accel wrist_gravity{0.2, 0.3, 0.93};  // unit vector, sensor frame
    Accel ankle_gravity{0.0, 0.0, 1.0};
    double burst_rate_per_hour = 6.0;
};

struct CohortConfig {
    std::size_t n_subjects = 8;
    double imbalance_ratio = 16.9;  // lying : sitting time
    std::chrono::year_month_day first_day{std::chrono::year{2024}, std::chrono::March, std::chrono::day{4}};
    Millis session_start = std::chrono::hours(7);
    double session_hours = 4.0;
    double sitting_bouts_per_hour = 0.5;
    double out_of_view_per_hour = 0.5;
    double out_of_view_minutes = 4.0;

    PostureProfile lying{};
    PostureProfile sitting{{0.2, 0.3, 0.93}, {0.5, 0.0, 0.8660254037844386}, 12.0};

    double wrist_jitter_deg = 20.0;  // per posture bout
    double ankle_jitter_deg = 4.0;
    double mount_jitter_deg = 3.0;   // per subject and device

    double burst_amplitude_g = 0.15;
    double burst_seconds = 4.0;
    double wrist_burst_scale = 2.0;
    double noise_sd_g = 0.01;

    std::size_t nonwear_episodes = 0;  // per subject, on the ankle device
    double nonwear_hours = 3.0;
    double nonwear_noise_sd_g = 0.0005;

    double dropouts_per_hour = 0.25;  // short sample gaps on a random device
    double dropout_seconds = 3.0;

    std::uint64_t seed = 1;

    /// Throws DataError on non-positive ratios, negative rates or zero gravity vectors.
    /// Gravity vectors are normalised.
    void validate();
};

struct SubjectData {
    std::string subject;
    std::vector<TriaxialRecording> wrist;  // 100 Hz runs, split at dropouts
    std::vector<TriaxialRecording> ankle;
    LabelTrack labels;
    std::vector<Interval> nonwear;   // ground truth
    std::vector<Interval> dropouts;  // ground truth, either device
};

std::string subject_name(std::size_t index);

/// Deterministic in (config.seed, index).
SubjectData generate_subject(const CohortConfig& config, std::size_t index);

std::vector<SubjectData> generate_cohort(const CohortConfig& config);

struct CohortFiles {
    std::filesystem::path wrist;
    std::filesystem::path ankle;
    std::filesystem::path labels;
};

CohortFiles subject_files(const std::filesystem::path& dir, const std::string& subject);

/// Writes `<subject>_wrist.csv`, `<subject>_ankle.csv` and `<subject>_labels.csv`.
void write_subject(const std::filesystem::path& dir, const SubjectData& data);

}  // namespace posture
