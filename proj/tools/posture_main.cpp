// posture: synth | features | evaluate | report
//
// Exit codes: 0 success, 1 usage or configuration error, 2 input data error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "posture/errors.hpp"
#include "posture/pipeline.hpp"

namespace fs = std::filesystem;
using namespace posture;

namespace {

struct Common {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::string out;
};

void add_common(CLI::App& cmd, Common& c) {
    cmd.add_option("--config", c.config_file, "Key = value configuration file")->check(CLI::ExistingFile);
    cmd.add_option("--seed", c.seed, "Random seed");
    cmd.add_option("--out", c.out, "Output directory")->required();
}

KeyValueConfig load_config(const Common& c) {
    if (c.config_file.empty()) return {};
    try {
        return KeyValueConfig::load(c.config_file);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Posture recognition from wrist and ankle accelerometry"};
    app.set_version_flag("--version", std::string(POSTURE_VERSION));
    app.require_subcommand(1);

    Common synth_opts;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort of raw and label CSV files");
    add_common(*synth, synth_opts);
    std::optional<std::size_t> n_subjects;
    synth->add_option("--subjects", n_subjects, "Number of subjects");

    Common feat_opts;
    std::string input_dir;
    std::optional<double> window_s;
    std::string device_set;
    auto* features = app.add_subcommand("features", "Window, filter and extract features from a cohort directory");
    add_common(*features, feat_opts);
    features->add_option("input", input_dir, "Directory with <S>_wrist.csv, <S>_ankle.csv, <S>_labels.csv")
        ->required();
    features->add_option("--window-s", window_s, "Window length in seconds");
    features->add_option("--device-set", device_set, "wrist, ankle or both");
    features->add_option("--jobs", feat_opts.jobs, "Worker threads");

    Common eval_opts;
    std::string table;
    std::string eval_devices;
    std::vector<std::string> balance_modes;
    std::optional<unsigned> smote_percent;
    std::optional<std::size_t> smote_k;
    bool save_models = false;
    auto* evaluate = app.add_subcommand("evaluate", "Nested leave-one-subject-out evaluation of a feature table");
    add_common(*evaluate, eval_opts);
    evaluate->add_option("table", table, "features.csv written by `posture features`")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--device-set", eval_devices, "wrist, ankle or both (both also runs each device alone)");
    evaluate->add_option("--balance", balance_modes, "none, under and/or smote")->delimiter(',');
    evaluate->add_option("--smote-percent", smote_percent, "SMOTE oversampling percentage");
    evaluate->add_option("--smote-k", smote_k, "SMOTE neighbour count");
    evaluate->add_option("--jobs", eval_opts.jobs, "Worker threads for forest training");
    evaluate->add_flag("--save-models", save_models, "Write each outer fold's final model");

    std::string results_json, report_features, report_out;
    auto* report = app.add_subcommand("report", "Render report.txt from results.json and per-feature class tests");
    report->add_option("--results", results_json, "results.json written by `posture evaluate`")
        ->check(CLI::ExistingFile);
    report->add_option("--features", report_features, "Feature table for Mann-Whitney tests")
        ->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            auto cfg = load_config(synth_opts);
            if (synth_opts.seed) cfg.set("synth.seed", std::to_string(*synth_opts.seed));
            if (n_subjects) cfg.set("synth.n_subjects", std::to_string(*n_subjects));
            const auto summary = cmd_synth(cohort_config_from(cfg), synth_opts.out, std::cout);
            std::cout << "lying " << summary.lying_seconds << " s, sitting " << summary.sitting_seconds << " s\n";
        } else if (features->parsed()) {
            auto cfg = load_config(feat_opts);
            if (feat_opts.seed) cfg.set("seed", std::to_string(*feat_opts.seed));
            if (feat_opts.jobs) cfg.set("jobs", std::to_string(*feat_opts.jobs));
            if (window_s) cfg.set("window_s", std::to_string(*window_s));
            if (!device_set.empty()) cfg.set("device_set", device_set);
            cmd_features(input_dir, run_config_from(cfg), feat_opts.out, std::cout);
        } else if (evaluate->parsed()) {
            auto cfg = load_config(eval_opts);
            if (eval_opts.seed) cfg.set("seed", std::to_string(*eval_opts.seed));
            if (eval_opts.jobs) cfg.set("jobs", std::to_string(*eval_opts.jobs));
            if (!eval_devices.empty()) cfg.set("device_set", eval_devices);
            if (!balance_modes.empty()) {
                std::string joined;
                for (const auto& m : balance_modes) joined += (joined.empty() ? "" : ",") + m;
                cfg.set("balance", joined);
            }
            if (smote_percent) cfg.set("smote_percent", std::to_string(*smote_percent));
            if (smote_k) cfg.set("smote_k", std::to_string(*smote_k));
            if (save_models) cfg.set("save_models", "true");
            const auto summary = cmd_evaluate(table, run_config_from(cfg), eval_opts.out, std::cout);
            std::cout << "wrote " << summary.report.string() << " and " << summary.json.string() << '\n';
        } else if (report->parsed()) {
            cmd_report(results_json, report_features, report_out, std::cout);
        }
    } catch (const ConfigError& e) {
        std::cerr << "posture: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "posture: invalid input: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "posture: invalid data: " << e.what() << '\n';
        return 2;
    } catch (const DegenerateWindow& e) {
        std::cerr << "posture: invalid data: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "posture: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
