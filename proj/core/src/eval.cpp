#include "posture/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "posture/errors.hpp"
#include "posture/feature_table.hpp"
#include "posture/random.hpp"

namespace posture {
namespace {

constexpr double kScoreEpsilon = 1e-12;

std::vector<std::size_t> rows_of_subjects(const Dataset& data, std::span<const int> subjects) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (std::find(subjects.begin(), subjects.end(), data.subject(i)) != subjects.end()) rows.push_back(i);
    }
    return rows;
}

std::size_t count_synthetic(const Dataset& data) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) n += data.provenance(i).synthetic();
    return n;
}

bool single_class(const Dataset& data) {
    const auto c = data.class_counts();
    return c[0] == 0 || c[1] == 0;
}

ConfusionMatrix evaluate(const ForestModel& model, const Dataset& data) {
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < data.rows(); ++i) cm.add(data.label(i), model.predict(data.row(i)).label);
    return cm;
}

// True if `a` is the smaller model: fewer trees, then shallower.
bool smaller_model(const GridPoint& a, const GridPoint& b) {
    if (a.n_trees != b.n_trees) return a.n_trees < b.n_trees;
    const auto depth = [](const GridPoint& g) { return g.max_depth.value_or(std::numeric_limits<std::size_t>::max()); };
    return depth(a) < depth(b);
}

}  // namespace

FoldPlan make_fold_plan(std::span<const int> subjects, std::uint64_t seed) {
    std::vector<int> all(subjects.begin(), subjects.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    if (all.size() < kMinSubjects) {
        throw DataError("nested cross-validation needs at least " + std::to_string(kMinSubjects) + " subjects, got " +
                        std::to_string(all.size()));
    }
    FoldPlan plan;
    for (std::size_t k = 0; k < all.size(); ++k) {
        OuterFold fold;
        fold.test_subject = all[k];
        for (int s : all) {
            if (s != fold.test_subject) fold.train_subjects.push_back(s);
        }
        std::vector<int> shuffled = fold.train_subjects;
        Rng rng(derive_seed(seed, k));
        rng.shuffle(std::span<int>(shuffled));
        std::array<std::vector<int>, kInnerFolds> groups;
        for (std::size_t i = 0; i < shuffled.size(); ++i) groups[i % kInnerFolds].push_back(shuffled[i]);
        for (std::size_t g = 0; g < kInnerFolds; ++g) {
            auto& inner = fold.inner[g];
            inner.val_subjects = groups[g];
            std::sort(inner.val_subjects.begin(), inner.val_subjects.end());
            for (int s : fold.train_subjects) {
                if (std::find(groups[g].begin(), groups[g].end(), s) == groups[g].end()) inner.train_subjects.push_back(s);
            }
        }
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

std::size_t resolve_mtry(MtryRule rule, std::size_t n_features) {
    const std::size_t m = rule == MtryRule::sqrt ? static_cast<std::size_t>(std::floor(std::sqrt(n_features)))
                                                 : n_features / 3;
    return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n_features, 1));
}

std::vector<GridPoint> TuningGrid::points(BalanceMode mode) const {
    std::vector<GridPoint> out;
    const std::vector<unsigned> percents =
        mode == BalanceMode::smote ? smote_percent : std::vector<unsigned>{0};
    for (auto t : n_trees) {
        for (const auto& d : max_depth) {
            for (auto m : mtry) {
                for (auto sp : percents) out.push_back({t, d, m, sp});
            }
        }
    }
    if (out.empty()) throw DataError("tuning grid is empty");
    return out;
}

ForestParams forest_params(const GridPoint& point, std::size_t n_features, const TrainingOptions& options,
                           std::uint64_t seed) {
    ForestParams p;
    p.n_trees = point.n_trees;
    p.max_depth = point.max_depth;
    p.min_leaf = options.min_leaf;
    p.mtry = resolve_mtry(point.mtry, n_features);
    p.seed = seed;
    p.jobs = options.jobs;
    return p;
}

std::size_t count_leaks(const Dataset& training, const Dataset& root, int excluded) {
    std::size_t leaks = 0;
    const auto subject_of = [&](std::int64_t idx) {
        return idx >= 0 && static_cast<std::size_t>(idx) < root.rows() ? root.subject(static_cast<std::size_t>(idx))
                                                                        : -1;
    };
    for (std::size_t i = 0; i < training.rows(); ++i) {
        const auto& prov = training.provenance(i);
        bool leak = training.subject(i) == excluded;
        if (prov.synthetic()) {
            leak = leak || subject_of(prov.parent_a) == excluded || subject_of(prov.parent_b) == excluded;
        } else {
            leak = leak || subject_of(prov.source) == excluded;
        }
        leaks += leak;
    }
    return leaks;
}

TuneResult tune(const Dataset& train, std::span<const InnerFold> inner, std::span<const GridPoint> grid,
                const BalanceConfig& balance_config, const TrainingOptions& options, const Dataset* root,
                LeakAudit* audit, int excluded_subject) {
    if (grid.empty()) throw DataError("tuning grid is empty");
    TuneResult result;
    result.scores.assign(grid.size(), 0.0);

    struct Split {
        Dataset train;
        Dataset val;
    };
    std::vector<Split> splits;
    for (const auto& fold : inner) {
        Split s{train.subset(rows_of_subjects(train, fold.train_subjects)),
                train.subset(rows_of_subjects(train, fold.val_subjects))};
        if (s.val.empty()) continue;
        splits.push_back(std::move(s));
    }

    for (std::size_t g = 0; g < grid.size(); ++g) {
        double total = 0.0;
        for (std::size_t f = 0; f < splits.size(); ++f) {
            const auto& split = splits[f];
            if (single_class(split.train)) {
                // Nothing to learn; any constant rule scores 0.5.
                total += 0.5;
                continue;
            }
            BalanceConfig bc = balance_config;
            bc.seed = derive_seed(balance_config.seed, f);
            if (bc.mode == BalanceMode::smote) bc.smote_percent = grid[g].smote_percent;
            const Dataset balanced = balance(split.train, bc);
            if (audit && root) {
                const auto& fold = inner[f];
                audit->checked_rows += balanced.rows();
                if (excluded_subject >= 0) audit->violations += count_leaks(balanced, *root, excluded_subject);
                for (int v : fold.val_subjects) audit->violations += count_leaks(balanced, *root, v);
                audit->synthetic_in_eval += count_synthetic(split.val);
            }
            const auto model =
                train_forest(balanced, forest_params(grid[g], balanced.features(), options, derive_seed(options.seed, f)));
            total += metrics_from_cm(evaluate(model, split.val)).balanced_accuracy;
        }
        result.scores[g] = splits.empty() ? 0.0 : total / static_cast<double>(splits.size());
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const double d = result.scores[g] - result.scores[best];
        if (d > kScoreEpsilon || (std::abs(d) <= kScoreEpsilon && smaller_model(grid[g], grid[best]))) best = g;
    }
    result.best = grid[best];
    result.best_score = result.scores[best];
    return result;
}

EvalResult run_nested_cv(const Dataset& data, DeviceSet devices, const NestedCvOptions& options) {
    const Dataset view = data.select_columns(device_columns(data, devices));
    if (single_class(view)) throw DataError("evaluation data must contain both lying and sitting windows");
    const auto subjects = view.subjects_present();
    const FoldPlan plan = make_fold_plan(subjects, options.seed);
    const auto grid = options.grid.points(options.balance.mode);

    EvalResult result;
    result.devices = devices;
    result.balance = options.balance.mode;

    for (std::size_t k = 0; k < plan.folds.size(); ++k) {
        const auto& fold = plan.folds[k];
        const int test_subject = fold.test_subject;
        const Dataset train = view.subset(rows_of_subjects(view, fold.train_subjects));
        const std::array<int, 1> test_ids{test_subject};
        const Dataset test = view.subset(rows_of_subjects(view, test_ids));

        TrainingOptions training = options.training;
        training.seed = derive_seed(options.seed, 1000 + k);
        BalanceConfig bc = options.balance;
        bc.seed = derive_seed(options.seed, 2000 + k);

        result.audit.checked_rows += train.rows();
        result.audit.violations += count_leaks(train, view, test_subject);

        const auto tuned = tune(train, fold.inner, grid, bc, training, &view, &result.audit, test_subject);

        if (bc.mode == BalanceMode::smote) bc.smote_percent = tuned.best.smote_percent;
        const Dataset balanced = balance(train, bc);
        result.audit.checked_rows += balanced.rows();
        result.audit.violations += count_leaks(balanced, view, test_subject);
        result.audit.synthetic_in_eval += count_synthetic(test);
        if (single_class(balanced)) {
            throw DataError("training split without subject " + view.subject_names()[static_cast<std::size_t>(test_subject)] +
                            " has a single class");
        }

        FoldResult fr;
        fr.test_subject = test_subject;
        fr.test_subject_name = view.subject_names()[static_cast<std::size_t>(test_subject)];
        fr.chosen = tuned.best;
        fr.tuning_score = tuned.best_score;
        fr.seed = derive_seed(training.seed, 0xf17a1);
        fr.train_rows = balanced.rows();
        fr.synthetic_rows = count_synthetic(balanced);

        ForestModel model = train_forest(balanced, forest_params(tuned.best, balanced.features(), training, fr.seed));
        model.meta() = {std::string(to_string(devices)), std::string(to_string(bc.mode)), fr.seed};
        fr.cm = evaluate(model, test);
        fr.metrics = metrics_from_cm(fr.cm);
        fr.single_class = single_class(test);
        if (options.on_final_model) options.on_final_model(fr, model);

        result.pooled += fr.cm;
        result.folds.push_back(std::move(fr));
    }

    result.pooled_metrics = metrics_from_cm(result.pooled);
    std::vector<Metrics> per_fold;
    for (const auto& f : result.folds) per_fold.push_back(f.metrics);
    result.mean_fold_metrics = mean_metrics(per_fold);
    return result;
}

MannWhitney mann_whitney(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DataError("Mann-Whitney test needs two non-empty samples");
    const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
    std::vector<std::pair<double, bool>> all;  // (value, from first sample)
    all.reserve(n);
    for (double v : a) all.emplace_back(v, true);
    for (double v : b) all.emplace_back(v, false);
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    double rank_sum = 0.0, tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && all[j].first == all[i].first) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t q = i; q < j; ++q) {
            if (all[q].second) rank_sum += avg_rank;
        }
        i = j;
    }
    const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2), dn = static_cast<double>(n);
    MannWhitney r;
    r.u = rank_sum - dn1 * (dn1 + 1.0) / 2.0;
    const double mean = dn1 * dn2 / 2.0;
    const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (!(var > 0.0)) return r;
    r.z = (r.u - mean) / std::sqrt(var);
    r.p = std::clamp(std::erfc(std::abs(r.z) / std::sqrt(2.0)), 0.0, 1.0);
    return r;
}

double feature_class_test(std::span<const double> values_lying, std::span<const double> values_sitting) {
    return mann_whitney(values_lying, values_sitting).p;
}

}  // namespace posture
