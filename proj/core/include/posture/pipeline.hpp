#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "posture/balance.hpp"
#include "posture/config.hpp"
#include "posture/eval.hpp"
#include "posture/features.hpp"
#include "posture/ingest.hpp"
#include "posture/synth.hpp"

namespace posture {

/// Thrown for bad configuration or usage; the CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    Millis window = std::chrono::seconds(2);
    DeviceSet devices = DeviceSet::both;
    bool daytime_filter = true;
    DaytimeBounds daytime{};
    NonwearParams nonwear{};

    std::vector<BalanceMode> balance_modes = {BalanceMode::none, BalanceMode::undersample, BalanceMode::smote};
    BalanceConfig balance{};
    TuningGrid grid{};
    std::size_t min_leaf = 5;
    bool save_models = false;

    std::uint64_t seed = 42;
    std::size_t jobs = 1;

    /// Flattened key/value view, written to manifests.
    std::map<std::string, std::string> to_entries() const;
};

/// Applies recognised keys from `config`. Throws ConfigError on unknown keys or bad values.
RunConfig run_config_from(const KeyValueConfig& config);
CohortConfig cohort_config_from(const KeyValueConfig& config);
std::map<std::string, std::string> cohort_entries(const CohortConfig& config);

struct SynthSummary {
    std::size_t subjects = 0;
    std::size_t files = 0;
    std::size_t lying_seconds = 0;
    std::size_t sitting_seconds = 0;
};

/// Generates and writes the cohort one subject at a time plus a manifest.
SynthSummary cmd_synth(const CohortConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

struct SubjectInputs {
    std::string subject;
    std::filesystem::path wrist;
    std::filesystem::path ankle;
    std::filesystem::path labels;
};

/// Subjects with a label file, in name order. Missing device files are left empty.
std::vector<SubjectInputs> discover_subjects(const std::filesystem::path& input_dir);

struct SubjectWindows {
    std::vector<FeatureVector> rows;
    std::size_t candidates = 0;
    DropCounts dropped;
};

/// ingest + features for one subject held in memory (100 Hz runs).
SubjectWindows process_subject(std::span<const TriaxialRecording> wrist_raw,
                               std::span<const TriaxialRecording> ankle_raw, const LabelTrack& labels,
                               const RunConfig& config);

struct FeaturesSummary {
    std::size_t subjects = 0;
    std::size_t skipped_subjects = 0;
    std::size_t rows = 0;
    std::size_t lying = 0;
    std::size_t sitting = 0;
    DropCounts dropped;
    std::filesystem::path table;
};

/// Writes `<out>/features.csv` and a manifest. Throws DataError for an empty input directory.
FeaturesSummary cmd_features(const std::filesystem::path& input_dir, const RunConfig& config,
                             const std::filesystem::path& out_dir, std::ostream& log);

struct EvaluateSummary {
    std::vector<EvalResult> results;
    std::filesystem::path report;
    std::filesystem::path json;
};

/// Nested CV for each available device set (restricted by config.devices unless both)
/// and each requested balance mode. Writes report.txt, results.json and a manifest;
/// models under models/ when save_models is set.
EvaluateSummary cmd_evaluate(const std::filesystem::path& feature_table, const RunConfig& config,
                             const std::filesystem::path& out_dir, std::ostream& log);

/// Re-renders report.txt from results.json and/or writes feature_tests.csv from a feature table.
void cmd_report(const std::filesystem::path& results_json, const std::filesystem::path& feature_table,
                const std::filesystem::path& out_dir, std::ostream& log);

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace posture
