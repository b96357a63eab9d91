#include "posture/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "posture/errors.hpp"
#include "posture/feature_table.hpp"
#include "posture/report.hpp"

#ifndef POSTURE_VERSION
#define POSTURE_VERSION "dev"
#endif

namespace posture {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string vec3(const Accel& a) { return num(a.x) + "," + num(a.y) + "," + num(a.z); }

std::string hhmmss(Millis t) {
    const auto s = t.count() / 1000;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(s / 3600),
                  static_cast<long long>(s / 60 % 60), static_cast<long long>(s % 60));
    return buf;
}

template <typename T>
std::string join(const std::vector<T>& items, auto&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += fmt(items[i]);
    }
    return out;
}

// Wraps KeyValueConfig lookups so that bad values surface as ConfigError.
template <typename F>
auto config_value(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    } catch (const ParseError& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

std::size_t positive_size(const KeyValueConfig& cfg, const std::string& key, std::size_t fallback, std::size_t min = 1) {
    const auto v = config_value(key, [&] { return cfg.get_int(key); });
    if (!v) return fallback;
    if (*v < static_cast<long long>(min)) throw ConfigError("config key '" + key + "' must be >= " + std::to_string(min));
    return static_cast<std::size_t>(*v);
}

Accel parse_vec3(const KeyValueConfig& cfg, const std::string& key, const Accel& fallback) {
    const auto items = cfg.get_list(key);
    if (!items) return fallback;
    if (items->size() != 3) throw ConfigError("config key '" + key + "' needs three comma-separated numbers");
    double v[3];
    for (int i = 0; i < 3; ++i) {
        const auto& s = (*items)[static_cast<std::size_t>(i)];
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v[i]);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
            throw ConfigError("config key '" + key + "' has a non-numeric component");
        }
    }
    return {v[0], v[1], v[2]};
}

const std::set<std::string>& run_keys() {
    static const std::set<std::string> keys = {
        "window_s",      "device_set",     "daytime_filter", "daytime_start",  "daytime_end",
        "nonwear_epsilon_g", "nonwear_min_s", "balance",     "smote_percent",  "smote_k",
        "target_ratio",  "grid.n_trees",   "grid.max_depth", "grid.mtry",      "grid.smote_percent",
        "min_leaf",      "save_models",    "seed",           "jobs",
    };
    return keys;
}

const std::set<std::string>& synth_keys() {
    static const std::set<std::string> keys = {
        "synth.n_subjects",          "synth.imbalance_ratio",        "synth.first_day",
        "synth.session_start",       "synth.session_hours",          "synth.sitting_bouts_per_hour",
        "synth.out_of_view_per_hour", "synth.out_of_view_minutes",   "synth.lying.wrist_gravity",
        "synth.lying.ankle_gravity", "synth.lying.burst_rate_per_hour", "synth.sitting.wrist_gravity",
        "synth.sitting.ankle_gravity", "synth.sitting.burst_rate_per_hour", "synth.wrist_jitter_deg",
        "synth.ankle_jitter_deg",    "synth.mount_jitter_deg",       "synth.burst_amplitude_g",
        "synth.burst_seconds",       "synth.wrist_burst_scale",      "synth.noise_sd_g",
        "synth.nonwear_episodes",    "synth.nonwear_hours",          "synth.nonwear_noise_sd_g",
        "synth.dropouts_per_hour",   "synth.dropout_seconds",        "synth.seed",
    };
    return keys;
}

void reject_unknown(const KeyValueConfig& cfg) {
    std::set<std::string> known = run_keys();
    known.insert(synth_keys().begin(), synth_keys().end());
    const auto unknown = cfg.unknown_keys(known);
    if (!unknown.empty()) throw ConfigError("unknown config key '" + unknown.front() + "'");
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

ordered_json file_entry(const fs::path& path, const fs::path& base) {
    return {{"file", fs::relative(path, base).generic_string()}, {"fnv1a64", file_checksum(path)}};
}

void write_manifest(const fs::path& out_dir, const std::string& command, const std::map<std::string, std::string>& config,
                    const std::vector<fs::path>& inputs, const fs::path& input_base,
                    const std::vector<fs::path>& outputs) {
    ordered_json m;
    m["tool"] = "posture";
    m["version"] = POSTURE_VERSION;
    m["command"] = command;
    m["config"] = config;
    ordered_json in = ordered_json::array();
    for (const auto& p : inputs) in.push_back(file_entry(p, input_base));
    m["inputs"] = std::move(in);
    ordered_json out = ordered_json::array();
    for (const auto& p : outputs) out.push_back(file_entry(p, out_dir));
    m["outputs"] = std::move(out);
    auto f = open_output(out_dir / (command + "_manifest.json"));
    f << m.dump(2) << '\n';
}

[[noreturn]] void rethrow_for(const fs::path& path, const ParseError& e);

std::vector<TriaxialRecording> read_raw_file(const fs::path& path, const std::string& subject, Device device) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return parse_raw(in, subject, device);
    } catch (const ParseError& e) {
        rethrow_for(path, e);
    }
}

LabelTrack read_label_file(const fs::path& path, const std::string& subject) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return parse_labels(in, subject);
    } catch (const ParseError& e) {
        rethrow_for(path, e);
    }
}

// Re-throws with the file name in front of the message; keeps kind and line.
[[noreturn]] void rethrow_for(const fs::path& path, const ParseError& e) {
    std::string msg = e.what();
    const std::string prefix = "line " + std::to_string(e.line()) + ": ";
    if (e.line() && msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw ParseError(e.kind(), e.line(), path.filename().string() + ": " + msg);
}

void log_drops(std::ostream& log, const DropCounts& d) {
    log << "  dropped windows: outside_daytime=" << d.outside_daytime << " unlabeled=" << d.unlabeled
        << " boundary=" << d.boundary << " out_of_view=" << d.out_of_view << " missing_device=" << d.missing_device
        << " nonwear=" << d.nonwear << " degenerate=" << d.degenerate << '\n';
}

}  // namespace

std::map<std::string, std::string> RunConfig::to_entries() const {
    std::map<std::string, std::string> e;
    e["window_s"] = num(static_cast<double>(window.count()) / 1000.0);
    e["device_set"] = std::string(to_string(devices));
    e["daytime_filter"] = daytime_filter ? "true" : "false";
    e["daytime_start"] = hhmmss(daytime.begin);
    e["daytime_end"] = hhmmss(daytime.end);
    e["nonwear_epsilon_g"] = num(nonwear.zero_epsilon_g);
    e["nonwear_min_s"] = num(static_cast<double>(nonwear.min_duration.count()) / 1000.0);
    e["balance"] = join(balance_modes, [](BalanceMode m) { return std::string(to_string(m)); });
    e["smote_percent"] = std::to_string(balance.smote_percent);
    e["smote_k"] = std::to_string(balance.k_neighbors);
    e["target_ratio"] = num(balance.target_ratio);
    e["grid.n_trees"] = join(grid.n_trees, [](std::size_t v) { return std::to_string(v); });
    e["grid.max_depth"] =
        join(grid.max_depth, [](const std::optional<std::size_t>& d) { return d ? std::to_string(*d) : "none"; });
    e["grid.mtry"] = join(grid.mtry, [](MtryRule m) { return std::string(m == MtryRule::sqrt ? "sqrt" : "third"); });
    e["grid.smote_percent"] = join(grid.smote_percent, [](unsigned v) { return std::to_string(v); });
    e["min_leaf"] = std::to_string(min_leaf);
    e["save_models"] = save_models ? "true" : "false";
    e["seed"] = std::to_string(seed);
    e["jobs"] = std::to_string(jobs);
    return e;
}

RunConfig run_config_from(const KeyValueConfig& cfg) {
    reject_unknown(cfg);
    RunConfig rc;
    if (const auto w = config_value("window_s", [&] { return cfg.get_double("window_s"); })) {
        const double ms = *w * 1000.0;
        if (!(ms > 0.0) || std::abs(ms - std::round(ms)) > 1e-6) throw ConfigError("window_s must be positive");
        rc.window = Millis(std::llround(ms));
        if (rc.window.count() % 100 != 0) throw ConfigError("window_s must be a multiple of 0.1 s");
    }
    if (const auto d = cfg.get("device_set")) rc.devices = config_value("device_set", [&] { return parse_device_set(*d); });
    if (const auto b = config_value("daytime_filter", [&] { return cfg.get_bool("daytime_filter"); })) rc.daytime_filter = *b;
    for (const auto& [key, field] : {std::pair{"daytime_start", &rc.daytime.begin}, std::pair{"daytime_end", &rc.daytime.end}}) {
        if (const auto v = cfg.get(key)) {
            const auto t = parse_time_of_day(*v);
            if (!t) throw ConfigError(std::string("config key '") + key + "' must be HH:MM[:SS]");
            *field = *t;
        }
    }
    if (!(rc.daytime.begin < rc.daytime.end)) throw ConfigError("daytime_start must precede daytime_end");
    if (const auto e = config_value("nonwear_epsilon_g", [&] { return cfg.get_double("nonwear_epsilon_g"); })) {
        if (!(*e >= 0.0)) throw ConfigError("nonwear_epsilon_g must be >= 0");
        rc.nonwear.zero_epsilon_g = *e;
    }
    if (const auto s = config_value("nonwear_min_s", [&] { return cfg.get_double("nonwear_min_s"); })) {
        if (!(*s >= 0.0)) throw ConfigError("nonwear_min_s must be >= 0");
        rc.nonwear.min_duration = Millis(std::llround(*s * 1000.0));
    }
    if (const auto modes = cfg.get_list("balance")) {
        rc.balance_modes.clear();
        for (const auto& m : *modes) rc.balance_modes.push_back(config_value("balance", [&] { return parse_balance_mode(m); }));
        if (rc.balance_modes.empty()) throw ConfigError("balance needs at least one mode");
    }
    rc.balance.smote_percent = static_cast<unsigned>(positive_size(cfg, "smote_percent", rc.balance.smote_percent, 0));
    rc.balance.k_neighbors = positive_size(cfg, "smote_k", rc.balance.k_neighbors);
    if (const auto r = config_value("target_ratio", [&] { return cfg.get_double("target_ratio"); })) {
        if (!(*r > 0.0)) throw ConfigError("target_ratio must be positive");
        rc.balance.target_ratio = *r;
    }
    if (const auto items = cfg.get_list("grid.n_trees")) {
        rc.grid.n_trees.clear();
        for (const auto& s : *items) {
            KeyValueConfig one;
            one.set("v", s);
            const auto v = config_value("grid.n_trees", [&] { return one.get_int("v"); });
            if (!v || *v < 1) throw ConfigError("grid.n_trees entries must be >= 1");
            rc.grid.n_trees.push_back(static_cast<std::size_t>(*v));
        }
    }
    if (const auto items = cfg.get_list("grid.max_depth")) {
        rc.grid.max_depth.clear();
        for (const auto& s : *items) {
            if (s == "none" || s == "unlimited") {
                rc.grid.max_depth.push_back(std::nullopt);
                continue;
            }
            KeyValueConfig one;
            one.set("v", s);
            const auto v = config_value("grid.max_depth", [&] { return one.get_int("v"); });
            if (!v || *v < 0) throw ConfigError("grid.max_depth entries must be 'none' or >= 0");
            rc.grid.max_depth.push_back(static_cast<std::size_t>(*v));
        }
    }
    if (const auto items = cfg.get_list("grid.mtry")) {
        rc.grid.mtry.clear();
        for (const auto& s : *items) {
            if (s == "sqrt") rc.grid.mtry.push_back(MtryRule::sqrt);
            else if (s == "third") rc.grid.mtry.push_back(MtryRule::third);
            else throw ConfigError("grid.mtry entries must be sqrt or third");
        }
    }
    if (const auto items = cfg.get_list("grid.smote_percent")) {
        rc.grid.smote_percent.clear();
        for (const auto& s : *items) {
            KeyValueConfig one;
            one.set("v", s);
            const auto v = config_value("grid.smote_percent", [&] { return one.get_int("v"); });
            if (!v || *v < 0) throw ConfigError("grid.smote_percent entries must be >= 0");
            rc.grid.smote_percent.push_back(static_cast<unsigned>(*v));
        }
    }
    if (rc.grid.n_trees.empty() || rc.grid.max_depth.empty() || rc.grid.mtry.empty() || rc.grid.smote_percent.empty()) {
        throw ConfigError("every grid list needs at least one entry");
    }
    rc.min_leaf = positive_size(cfg, "min_leaf", rc.min_leaf);
    if (const auto b = config_value("save_models", [&] { return cfg.get_bool("save_models"); })) rc.save_models = *b;
    if (const auto s = config_value("seed", [&] { return cfg.get_int("seed"); })) rc.seed = static_cast<std::uint64_t>(*s);
    rc.jobs = positive_size(cfg, "jobs", rc.jobs);
    return rc;
}

CohortConfig cohort_config_from(const KeyValueConfig& cfg) {
    reject_unknown(cfg);
    CohortConfig c;
    const auto dbl = [&](const char* key, double& field) {
        if (const auto v = config_value(key, [&] { return cfg.get_double(key); })) field = *v;
    };
    c.n_subjects = positive_size(cfg, "synth.n_subjects", c.n_subjects);
    dbl("synth.imbalance_ratio", c.imbalance_ratio);
    if (const auto d = cfg.get("synth.first_day")) {
        const auto t = parse_timestamp(*d + "T00:00:00");
        if (!t) throw ConfigError("synth.first_day must be YYYY-MM-DD");
        c.first_day = std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(*t)};
    }
    if (const auto s = cfg.get("synth.session_start")) {
        const auto t = parse_time_of_day(*s);
        if (!t) throw ConfigError("synth.session_start must be HH:MM[:SS]");
        c.session_start = *t;
    }
    dbl("synth.session_hours", c.session_hours);
    dbl("synth.sitting_bouts_per_hour", c.sitting_bouts_per_hour);
    dbl("synth.out_of_view_per_hour", c.out_of_view_per_hour);
    dbl("synth.out_of_view_minutes", c.out_of_view_minutes);
    c.lying.wrist_gravity = parse_vec3(cfg, "synth.lying.wrist_gravity", c.lying.wrist_gravity);
    c.lying.ankle_gravity = parse_vec3(cfg, "synth.lying.ankle_gravity", c.lying.ankle_gravity);
    dbl("synth.lying.burst_rate_per_hour", c.lying.burst_rate_per_hour);
    c.sitting.wrist_gravity = parse_vec3(cfg, "synth.sitting.wrist_gravity", c.sitting.wrist_gravity);
    c.sitting.ankle_gravity = parse_vec3(cfg, "synth.sitting.ankle_gravity", c.sitting.ankle_gravity);
    dbl("synth.sitting.burst_rate_per_hour", c.sitting.burst_rate_per_hour);
    dbl("synth.wrist_jitter_deg", c.wrist_jitter_deg);
    dbl("synth.ankle_jitter_deg", c.ankle_jitter_deg);
    dbl("synth.mount_jitter_deg", c.mount_jitter_deg);
    dbl("synth.burst_amplitude_g", c.burst_amplitude_g);
    dbl("synth.burst_seconds", c.burst_seconds);
    dbl("synth.wrist_burst_scale", c.wrist_burst_scale);
    dbl("synth.noise_sd_g", c.noise_sd_g);
    c.nonwear_episodes = positive_size(cfg, "synth.nonwear_episodes", c.nonwear_episodes, 0);
    dbl("synth.nonwear_hours", c.nonwear_hours);
    dbl("synth.nonwear_noise_sd_g", c.nonwear_noise_sd_g);
    dbl("synth.dropouts_per_hour", c.dropouts_per_hour);
    dbl("synth.dropout_seconds", c.dropout_seconds);
    if (const auto s = config_value("synth.seed", [&] { return cfg.get_int("synth.seed"); })) {
        c.seed = static_cast<std::uint64_t>(*s);
    }
    try {
        c.validate();
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

std::map<std::string, std::string> cohort_entries(const CohortConfig& c) {
    std::map<std::string, std::string> e;
    char day[48];
    std::snprintf(day, sizeof day, "%04d-%02u-%02u", static_cast<int>(c.first_day.year()),
                  static_cast<unsigned>(c.first_day.month()), static_cast<unsigned>(c.first_day.day()));
    e["synth.n_subjects"] = std::to_string(c.n_subjects);
    e["synth.imbalance_ratio"] = num(c.imbalance_ratio);
    e["synth.first_day"] = day;
    e["synth.session_start"] = hhmmss(c.session_start);
    e["synth.session_hours"] = num(c.session_hours);
    e["synth.sitting_bouts_per_hour"] = num(c.sitting_bouts_per_hour);
    e["synth.out_of_view_per_hour"] = num(c.out_of_view_per_hour);
    e["synth.out_of_view_minutes"] = num(c.out_of_view_minutes);
    e["synth.lying.wrist_gravity"] = vec3(c.lying.wrist_gravity);
    e["synth.lying.ankle_gravity"] = vec3(c.lying.ankle_gravity);
    e["synth.lying.burst_rate_per_hour"] = num(c.lying.burst_rate_per_hour);
    e["synth.sitting.wrist_gravity"] = vec3(c.sitting.wrist_gravity);
    e["synth.sitting.ankle_gravity"] = vec3(c.sitting.ankle_gravity);
    e["synth.sitting.burst_rate_per_hour"] = num(c.sitting.burst_rate_per_hour);
    e["synth.wrist_jitter_deg"] = num(c.wrist_jitter_deg);
    e["synth.ankle_jitter_deg"] = num(c.ankle_jitter_deg);
    e["synth.mount_jitter_deg"] = num(c.mount_jitter_deg);
    e["synth.burst_amplitude_g"] = num(c.burst_amplitude_g);
    e["synth.burst_seconds"] = num(c.burst_seconds);
    e["synth.wrist_burst_scale"] = num(c.wrist_burst_scale);
    e["synth.noise_sd_g"] = num(c.noise_sd_g);
    e["synth.nonwear_episodes"] = std::to_string(c.nonwear_episodes);
    e["synth.nonwear_hours"] = num(c.nonwear_hours);
    e["synth.nonwear_noise_sd_g"] = num(c.nonwear_noise_sd_g);
    e["synth.dropouts_per_hour"] = num(c.dropouts_per_hour);
    e["synth.dropout_seconds"] = num(c.dropout_seconds);
    e["synth.seed"] = std::to_string(c.seed);
    return e;
}

SynthSummary cmd_synth(const CohortConfig& config_in, const fs::path& out_dir, std::ostream& log) {
    CohortConfig config = config_in;
    try {
        config.validate();
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    ensure_dir(out_dir);
    SynthSummary summary;
    std::vector<fs::path> outputs;
    for (std::size_t i = 0; i < config.n_subjects; ++i) {
        const SubjectData data = generate_subject(config, i);
        const auto files = subject_files(out_dir, data.subject);
        for (const auto& p : {files.wrist, files.ankle, files.labels}) {
            std::ofstream probe(p, std::ios::binary);
            if (!probe) throw ConfigError("cannot write " + p.string());
        }
        write_subject(out_dir, data);
        std::size_t lying = 0, sitting = 0;
        for (const auto& iv : data.labels.intervals()) {
            const auto s = static_cast<std::size_t>(std::chrono::duration_cast<std::chrono::seconds>(iv.end - iv.start).count());
            if (iv.label == Posture::lying) lying += s;
            if (iv.label == Posture::sitting) sitting += s;
        }
        summary.lying_seconds += lying;
        summary.sitting_seconds += sitting;
        summary.files += 3;
        ++summary.subjects;
        outputs.insert(outputs.end(), {files.wrist, files.ankle, files.labels});
        log << data.subject << ": lying " << lying << " s, sitting " << sitting << " s, "
            << data.dropouts.size() << " dropouts, " << data.nonwear.size() << " non-wear episodes\n";
    }
    write_manifest(out_dir, "synth", cohort_entries(config), {}, out_dir, outputs);
    log << "wrote " << summary.files << " files for " << summary.subjects << " subjects to " << out_dir.string() << '\n';
    return summary;
}

std::vector<SubjectInputs> discover_subjects(const fs::path& input_dir) {
    if (!fs::is_directory(input_dir)) throw DataError("input directory " + input_dir.string() + " does not exist");
    std::vector<SubjectInputs> out;
    const std::string suffix = "_labels.csv";
    for (const auto& entry : fs::directory_iterator(input_dir)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file() || name.size() <= suffix.size() ||
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
            continue;
        }
        SubjectInputs s;
        s.subject = name.substr(0, name.size() - suffix.size());
        const auto files = subject_files(input_dir, s.subject);
        s.labels = files.labels;
        if (fs::is_regular_file(files.wrist)) s.wrist = files.wrist;
        if (fs::is_regular_file(files.ankle)) s.ankle = files.ankle;
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.subject < b.subject; });
    return out;
}

SubjectWindows process_subject(std::span<const TriaxialRecording> wrist_raw,
                               std::span<const TriaxialRecording> ankle_raw, const LabelTrack& labels,
                               const RunConfig& config) {
    const DaytimeBounds bounds = config.daytime_filter ? config.daytime : DaytimeBounds{Millis(0), std::chrono::hours(24)};
    const auto prepare = [&](std::span<const TriaxialRecording> raw) {
        std::vector<TriaxialRecording> runs;
        for (const auto& r : raw) {
            if (r.size() < 10) continue;
            const auto low = resample_to_10hz(r);
            if (config.daytime_filter) {
                for (auto& part : filter_daytime(low, bounds)) runs.push_back(std::move(part));
            } else {
                runs.push_back(low);
            }
        }
        return runs;
    };
    const auto wrist = prepare(wrist_raw);
    const auto ankle = prepare(ankle_raw);

    std::vector<Interval> nonwear;
    for (const auto* runs : {&wrist, &ankle}) {
        for (const auto& r : *runs) {
            const auto found = detect_nonwear(r, config.nonwear);
            nonwear.insert(nonwear.end(), found.begin(), found.end());
        }
    }

    const auto windowing = build_windows(wrist, ankle, labels, nonwear, WindowParams{config.window, bounds});
    SubjectWindows out;
    out.candidates = windowing.candidates;
    out.dropped = windowing.dropped;

    const auto& windows = windowing.windows;
    std::vector<std::optional<FeatureVector>> rows(windows.size());
    const auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                rows[i] = extract_features(windows[i], config.devices);
            } catch (const DegenerateWindow&) {
                rows[i].reset();
            }
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, std::max<std::size_t>(windows.size(), 1));
    if (jobs == 1) {
        work(0, windows.size());
    } else {
        std::vector<std::jthread> threads;
        const std::size_t chunk = (windows.size() + jobs - 1) / jobs;
        for (std::size_t j = 0; j < jobs; ++j) {
            const std::size_t b = std::min(windows.size(), j * chunk);
            const std::size_t e = std::min(windows.size(), b + chunk);
            threads.emplace_back(work, b, e);
        }
    }
    for (auto& r : rows) {
        if (r) {
            out.rows.push_back(std::move(*r));
        } else {
            ++out.dropped.degenerate;
        }
    }
    return out;
}

FeaturesSummary cmd_features(const fs::path& input_dir, const RunConfig& config, const fs::path& out_dir,
                             std::ostream& log) {
    const auto subjects = discover_subjects(input_dir);
    if (subjects.empty()) throw DataError("no subjects (*_labels.csv) found in " + input_dir.string());
    ensure_dir(out_dir);

    FeaturesSummary summary;
    summary.table = out_dir / "features.csv";
    auto table = open_output(summary.table);
    std::vector<fs::path> inputs;
    bool header_written = false;

    for (const auto& s : subjects) {
        inputs.push_back(s.labels);
        if (s.wrist.empty() || s.ankle.empty()) {
            log << "warning: " << s.subject << " is missing the " << (s.wrist.empty() ? "wrist" : "ankle")
                << " recording; subject skipped\n";
            ++summary.skipped_subjects;
            continue;
        }
        inputs.push_back(s.wrist);
        inputs.push_back(s.ankle);
        const auto labels = read_label_file(s.labels, s.subject);
        SubjectWindows windows;
        {
            const auto wrist = read_raw_file(s.wrist, s.subject, Device::wrist);
            const auto ankle = read_raw_file(s.ankle, s.subject, Device::ankle);
            windows = process_subject(wrist, ankle, labels, config);
        }
        if (!header_written) {
            write_feature_table(table, config.devices, {});
            header_written = true;
        }
        std::ostringstream body;
        write_feature_table(body, config.devices, windows.rows);
        const std::string text = body.str();
        table << std::string_view(text).substr(text.find('\n') + 1);

        std::size_t lying = 0;
        for (const auto& r : windows.rows) lying += r.label == Posture::lying;
        summary.lying += lying;
        summary.sitting += windows.rows.size() - lying;
        summary.rows += windows.rows.size();
        summary.dropped += windows.dropped;
        ++summary.subjects;
        log << s.subject << ": " << windows.rows.size() << " windows (" << lying << " lying, "
            << windows.rows.size() - lying << " sitting) of " << windows.candidates << " candidates\n";
        log_drops(log, windows.dropped);
    }
    if (!header_written) write_feature_table(table, config.devices, {});
    table.close();
    if (!table) throw DataError("failed writing " + summary.table.string());

    write_manifest(out_dir, "features", config.to_entries(), inputs, input_dir, {summary.table});
    log << "features: " << summary.rows << " windows (" << summary.lying << " lying, " << summary.sitting
        << " sitting) from " << summary.subjects << " subjects\n";
    log_drops(log, summary.dropped);
    return summary;
}

EvaluateSummary cmd_evaluate(const fs::path& feature_table, const RunConfig& config, const fs::path& out_dir,
                             std::ostream& log) {
    std::ifstream in(feature_table, std::ios::binary);
    if (!in) throw DataError("cannot open feature table " + feature_table.string());
    const Dataset data = read_feature_table(in);
    const DeviceSet available = available_devices(data);

    std::vector<DeviceSet> device_sets;
    if (available == DeviceSet::both && config.devices == DeviceSet::both) {
        device_sets = {DeviceSet::wrist, DeviceSet::ankle, DeviceSet::both};
    } else if (available == DeviceSet::both || available == config.devices) {
        device_sets = {config.devices};
    } else {
        device_sets = {available};
    }

    ensure_dir(out_dir);
    if (config.save_models) ensure_dir(out_dir / "models");
    std::vector<fs::path> outputs;

    EvaluateSummary summary;
    for (BalanceMode mode : config.balance_modes) {
        for (DeviceSet d : device_sets) {
            NestedCvOptions options;
            options.grid = config.grid;
            options.balance = config.balance;
            options.balance.mode = mode;
            options.training = {config.min_leaf, config.seed, config.jobs};
            options.seed = config.seed;
            if (config.save_models) {
                options.on_final_model = [&, mode, d](const FoldResult& f, const ForestModel& m) {
                    const auto path = out_dir / "models" /
                                      (std::string(to_string(mode)) + "_" + std::string(to_string(d)) + "_" +
                                       f.test_subject_name + ".model");
                    auto file = open_output(path);
                    save_model(file, m);
                    file.close();
                    outputs.push_back(path);
                };
            }
            auto result = run_nested_cv(data, d, options);
            const auto& m = result.pooled_metrics;
            log << "evaluate balance=" << to_string(mode) << " devices=" << to_string(d)
                << ": accuracy=" << num(m.accuracy) << " balanced_accuracy=" << num(m.balanced_accuracy)
                << " leaks=" << result.audit.violations << '\n';
            summary.results.push_back(std::move(result));
        }
    }

    summary.report = out_dir / "report.txt";
    summary.json = out_dir / "results.json";
    {
        auto f = open_output(summary.report);
        write_text_report(f, summary.results);
    }
    ordered_json run;
    run["config"] = config.to_entries();
    run["feature_table"] = {{"file", feature_table.filename().string()}, {"fnv1a64", file_checksum(feature_table)}};
    {
        auto f = open_output(summary.json);
        f << results_to_json(summary.results, run.dump());
    }
    outputs.insert(outputs.begin(), {summary.report, summary.json});
    write_manifest(out_dir, "evaluate", config.to_entries(), {feature_table}, feature_table.parent_path(), outputs);
    return summary;
}

void cmd_report(const fs::path& results_json, const fs::path& feature_table, const fs::path& out_dir,
                std::ostream& log) {
    if (results_json.empty() && feature_table.empty()) {
        throw ConfigError("report needs --results and/or --features");
    }
    ensure_dir(out_dir);
    std::vector<fs::path> inputs, outputs;
    if (!results_json.empty()) {
        std::ifstream in(results_json, std::ios::binary);
        if (!in) throw DataError("cannot open " + results_json.string());
        std::stringstream ss;
        ss << in.rdbuf();
        const auto results = results_from_json(ss.str());
        const auto path = out_dir / "report.txt";
        auto f = open_output(path);
        write_text_report(f, results);
        inputs.push_back(results_json);
        outputs.push_back(path);
        log << "wrote " << path.string() << '\n';
    }
    if (!feature_table.empty()) {
        std::ifstream in(feature_table, std::ios::binary);
        if (!in) throw DataError("cannot open " + feature_table.string());
        const Dataset data = read_feature_table(in);
        const auto path = out_dir / "feature_tests.csv";
        auto f = open_output(path);
        write_feature_tests(f, data);
        inputs.push_back(feature_table);
        outputs.push_back(path);
        log << "wrote " << path.string() << '\n';
    }
    std::map<std::string, std::string> cfg;
    write_manifest(out_dir, "report", cfg, inputs, fs::current_path(), outputs);
}

std::string file_checksum(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
            h *= 0x100000001b3ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace posture
