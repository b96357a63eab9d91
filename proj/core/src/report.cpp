#include "posture/report.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>

#include "posture/errors.hpp"

namespace posture {
namespace {

using nlohmann::ordered_json;

std::string_view row_name(DeviceSet s) {
    switch (s) {
        case DeviceSet::wrist: return "Wrist positions";
        case DeviceSet::ankle: return "Ankle positions";
        case DeviceSet::both: return "Wrist and ankle positions";
    }
    return "?";
}

std::string_view mode_title(BalanceMode m) {
    switch (m) {
        case BalanceMode::none: return "original data";
        case BalanceMode::undersample: return "random undersampling of the majority class";
        case BalanceMode::smote: return "SMOTE oversampling with majority undersampling";
    }
    return "?";
}

void write_table(std::ostream& out, std::span<const EvalResult> results, BalanceMode mode, bool pooled) {
    char line[160];
    std::snprintf(line, sizeof line, "%-28s %9s %9s %10s %7s %18s\n", "Model", "Accuracy", "F1-score", "Precision",
                  "Recall", "Balanced Accuracy");
    out << line;
    for (DeviceSet d : {DeviceSet::wrist, DeviceSet::ankle, DeviceSet::both}) {
        const auto it = std::find_if(results.begin(), results.end(),
                                     [&](const EvalResult& r) { return r.balance == mode && r.devices == d; });
        if (it == results.end()) continue;
        const Metrics& m = pooled ? it->pooled_metrics : it->mean_fold_metrics;
        std::snprintf(line, sizeof line, "%-28s %9.2f %9.2f %10.2f %7.2f %18.2f%s\n",
                      std::string(row_name(d)).c_str(), m.accuracy, m.f1, m.precision, m.recall,
                      m.balanced_accuracy, m.partial ? "  *" : "");
        out << line;
    }
}

ordered_json cm_json(const ConfusionMatrix& cm) {
    return ordered_json{{"lying", {{"lying", cm.counts[0][0]}, {"sitting", cm.counts[0][1]}}},
                        {"sitting", {{"lying", cm.counts[1][0]}, {"sitting", cm.counts[1][1]}}}};
}

ConfusionMatrix cm_from(const ordered_json& j) {
    ConfusionMatrix cm;
    cm.counts[0][0] = j.at("lying").at("lying").get<std::uint64_t>();
    cm.counts[0][1] = j.at("lying").at("sitting").get<std::uint64_t>();
    cm.counts[1][0] = j.at("sitting").at("lying").get<std::uint64_t>();
    cm.counts[1][1] = j.at("sitting").at("sitting").get<std::uint64_t>();
    return cm;
}

ordered_json metrics_json(const Metrics& m) {
    return ordered_json{{"accuracy", m.accuracy},   {"f1", m.f1},
                        {"precision", m.precision}, {"recall", m.recall},
                        {"balanced_accuracy", m.balanced_accuracy}, {"partial", m.partial}};
}

ordered_json grid_json(const GridPoint& g) {
    ordered_json j{{"n_trees", g.n_trees}};
    j["max_depth"] = g.max_depth ? ordered_json(*g.max_depth) : ordered_json(nullptr);
    j["mtry"] = g.mtry == MtryRule::sqrt ? "sqrt" : "third";
    j["smote_percent"] = g.smote_percent;
    return j;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

void write_text_report(std::ostream& out, std::span<const EvalResult> results) {
    for (bool pooled : {true, false}) {
        out << (pooled ? "Pooled over outer folds (summed confusion matrices)\n"
                       : "Mean over outer folds\n");
        out << std::string(pooled ? 52 : 21, '=') << "\n\n";
        for (BalanceMode mode : {BalanceMode::none, BalanceMode::undersample, BalanceMode::smote}) {
            const bool any = std::any_of(results.begin(), results.end(), [&](const auto& r) { return r.balance == mode; });
            if (!any) continue;
            out << "Balance: " << to_string(mode) << " (" << mode_title(mode) << ")\n";
            write_table(out, results, mode, pooled);
            out << '\n';
        }
    }
    out << "Positive class: sitting. '*' marks averages that include a fold with one class only.\n";
}

std::string results_to_json(std::span<const EvalResult> results, const std::string& extra_json) {
    ordered_json root;
    root["run"] = ordered_json::parse(extra_json);
    root["positive_class"] = "sitting";
    ordered_json arr = ordered_json::array();
    for (const auto& r : results) {
        ordered_json jr;
        jr["device_set"] = to_string(r.devices);
        jr["balance"] = to_string(r.balance);
        jr["pooled"] = {{"confusion", cm_json(r.pooled)}, {"metrics", metrics_json(r.pooled_metrics)}};
        jr["mean_over_folds"] = metrics_json(r.mean_fold_metrics);
        jr["leak_audit"] = {{"checked_rows", r.audit.checked_rows},
                            {"violations", r.audit.violations},
                            {"synthetic_in_eval", r.audit.synthetic_in_eval}};
        ordered_json folds = ordered_json::array();
        for (const auto& f : r.folds) {
            folds.push_back({{"test_subject", f.test_subject_name},
                             {"chosen", grid_json(f.chosen)},
                             {"tuning_balanced_accuracy", f.tuning_score},
                             {"seed", f.seed},
                             {"train_rows", f.train_rows},
                             {"synthetic_rows", f.synthetic_rows},
                             {"single_class", f.single_class},
                             {"confusion", cm_json(f.cm)},
                             {"metrics", metrics_json(f.metrics)}});
        }
        jr["folds"] = std::move(folds);
        arr.push_back(std::move(jr));
    }
    root["results"] = std::move(arr);
    return root.dump(2) + "\n";
}

std::vector<EvalResult> results_from_json(const std::string& text) {
    std::vector<EvalResult> out;
    try {
        const auto root = ordered_json::parse(text);
        for (const auto& jr : root.at("results")) {
            EvalResult r;
            r.devices = parse_device_set(jr.at("device_set").get<std::string>());
            r.balance = parse_balance_mode(jr.at("balance").get<std::string>());
            r.pooled = cm_from(jr.at("pooled").at("confusion"));
            r.pooled_metrics = metrics_from_cm(r.pooled);
            std::vector<Metrics> per_fold;
            for (const auto& jf : jr.at("folds")) {
                FoldResult f;
                f.test_subject_name = jf.at("test_subject").get<std::string>();
                f.cm = cm_from(jf.at("confusion"));
                f.metrics = metrics_from_cm(f.cm);
                f.single_class = jf.at("single_class").get<bool>();
                per_fold.push_back(f.metrics);
                r.folds.push_back(std::move(f));
            }
            r.mean_fold_metrics = mean_metrics(per_fold);
            const auto& audit = jr.at("leak_audit");
            r.audit = {audit.at("checked_rows").get<std::size_t>(), audit.at("violations").get<std::size_t>(),
                       audit.at("synthetic_in_eval").get<std::size_t>()};
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ParseError::Kind::bad_header, 0, std::string("results file: ") + e.what());
    }
    return out;
}

void write_feature_tests(std::ostream& out, const Dataset& data) {
    out << "feature,n_lying,n_sitting,q1_lying,median_lying,q3_lying,q1_sitting,median_sitting,q3_sitting,u,z,p_value,"
           "significant_p01\n";
    const auto lying_rows = data.rows_of_class(Posture::lying);
    const auto sitting_rows = data.rows_of_class(Posture::sitting);
    if (lying_rows.empty() || sitting_rows.empty()) throw DataError("feature tests need both classes");
    char buf[512];
    for (std::size_t f = 0; f < data.features(); ++f) {
        std::vector<double> a, b;
        for (auto i : lying_rows) a.push_back(data.value(i, f));
        for (auto i : sitting_rows) b.push_back(data.value(i, f));
        const auto mw = mann_whitney(a, b);
        std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.6f,%.6g,%d\n",
                      data.feature_names()[f].c_str(), a.size(), b.size(), quantile(a, 0.25), quantile(a, 0.5),
                      quantile(a, 0.75), quantile(b, 0.25), quantile(b, 0.5), quantile(b, 0.75), mw.u, mw.z, mw.p,
                      mw.p < 0.01 ? 1 : 0);
        out << buf;
    }
}

}  // namespace posture
