#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "posture/errors.hpp"
#include "posture/eval.hpp"
#include "posture/features.hpp"
#include "posture/random.hpp"

using namespace posture;

namespace {

ConfusionMatrix cm_of(std::uint64_t tn, std::uint64_t fp, std::uint64_t fn, std::uint64_t tp) {
    ConfusionMatrix cm;
    cm.counts = {{{tn, fp}, {fn, tp}}};
    return cm;
}

// Subjects S01.. with `per_subject` rows; sitting about one row in `ratio`.
// `shift` moves sitting rows along feature 0 (0 means no signal).
Dataset cohort(std::size_t subjects, std::size_t per_subject, double shift, std::uint64_t seed,
               std::size_t ratio = 5, bool every_column = false) {
    const auto names = feature_columns(DeviceSet::both);
    Dataset d(names);
    Rng rng(seed);
    std::vector<double> x(names.size());
    for (std::size_t s = 0; s < subjects; ++s) {
        const int id = d.intern_subject("S0" + std::to_string(s + 1));
        for (std::size_t i = 0; i < per_subject; ++i) {
            const bool sit = i % ratio == 0;
            for (auto& v : x) v = rng.normal();
            if (sit && every_column) {
                for (auto& v : x) v += shift;
            } else if (sit) {
                x[15] += shift;  // ankle mvm column
            }
            d.add_row(x, sit ? Posture::sitting : Posture::lying, id);
        }
    }
    return d;
}

TuningGrid small_grid() {
    TuningGrid g;
    g.n_trees = {10};
    g.max_depth = {std::nullopt};
    g.mtry = {MtryRule::sqrt};
    g.smote_percent = {200};
    return g;
}

}  // namespace

TEST(Metrics, RowArithmetic) {
    // Two-decimal precision and recall; F1 agrees to two decimals as well.
    const struct {
        double p, r, f1;
    } rows[] = {{0.40, 0.28, 0.33}, {0.37, 0.50, 0.43}};
    for (const auto& row : rows) {
        const auto a = static_cast<std::uint64_t>(std::llround(row.p * 100));
        const auto b = static_cast<std::uint64_t>(std::llround(row.r * 100));
        const auto m = metrics_from_cm(cm_of(1000000, b * (100 - a), a * (100 - b), a * b));
        EXPECT_NEAR(m.precision, row.p, 1e-12);
        EXPECT_NEAR(m.recall, row.r, 1e-12);
        EXPECT_NEAR(m.f1, row.f1, 0.005);
    }
    EXPECT_NEAR(metrics_from_cm(cm_of(1000000, 28 * 60, 40 * 72, 40 * 28)).f1, 0.32941176470588235, 1e-12);
}

TEST(Metrics, ZeroDenominators) {
    const auto m = metrics_from_cm(cm_of(50, 0, 0, 0));
    EXPECT_EQ(m.precision, 0.0);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.f1, 0.0);
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_TRUE(m.partial);
    EXPECT_EQ(m.balanced_accuracy, 1.0);
}

TEST(Metrics, Perfect) {
    const auto m = metrics_from_cm(cm_of(90, 0, 0, 10));
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.f1, 1.0);
    EXPECT_EQ(m.balanced_accuracy, 1.0);
    EXPECT_FALSE(m.partial);
}

TEST(Metrics, ConstantLyingOnImbalancedCounts) {
    const auto m = metrics_from_cm(cm_of(120554, 0, 7134, 0));
    EXPECT_NEAR(m.accuracy, 120554.0 / 127688.0, 1e-15);
    EXPECT_NEAR(m.accuracy, 0.9441, 0.00005);
    EXPECT_EQ(m.balanced_accuracy, 0.5);
    EXPECT_EQ(m.f1, 0.0);
}

TEST(Metrics, ConstantClassifierBalancedAccuracy) {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t lying = 1 + rng.below(1000), sitting = 1 + rng.below(1000);
        EXPECT_EQ(metrics_from_cm(cm_of(lying, 0, sitting, 0)).balanced_accuracy, 0.5);
        EXPECT_EQ(metrics_from_cm(cm_of(0, lying, 0, sitting)).balanced_accuracy, 0.5);
    }
}

TEST(Metrics, F1Identity) {
    Rng rng(2);
    for (int i = 0; i < 500; ++i) {
        const auto m = metrics_from_cm(cm_of(rng.below(100), rng.below(100), rng.below(100), rng.below(100)));
        const double expected = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        EXPECT_NEAR(m.f1, expected, 1e-15);
        EXPECT_GE(m.balanced_accuracy, 0.0);
        EXPECT_LE(m.balanced_accuracy, 1.0);
    }
}

TEST(Metrics, PooledEqualsConcatenated) {
    Rng rng(3);
    ConfusionMatrix pooled, flat;
    for (int fold = 0; fold < 8; ++fold) {
        ConfusionMatrix cm;
        for (int i = 0; i < 100; ++i) {
            const auto a = static_cast<Posture>(rng.below(2));
            const auto p = static_cast<Posture>(rng.below(2));
            cm.add(a, p);
            flat.add(a, p);
        }
        pooled += cm;
    }
    EXPECT_EQ(pooled, flat);
    const auto a = metrics_from_cm(pooled), b = metrics_from_cm(flat);
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_EQ(a.f1, b.f1);
    EXPECT_EQ(a.balanced_accuracy, b.balanced_accuracy);
}

TEST(Metrics, MeanOverFolds) {
    const std::vector<Metrics> folds{{1.0, 0.5, 0.5, 0.5, 0.75, false}, {0.5, 0.0, 0.0, 0.0, 0.25, true}};
    const auto m = mean_metrics(folds);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
    EXPECT_DOUBLE_EQ(m.balanced_accuracy, 0.5);
    EXPECT_TRUE(m.partial);
}

TEST(FoldPlan, EightSubjects) {
    const std::vector<int> subjects{0, 1, 2, 3, 4, 5, 6, 7};
    const auto plan = make_fold_plan(subjects, 42);
    ASSERT_EQ(plan.folds.size(), 8u);
    std::set<int> tested;
    for (const auto& f : plan.folds) {
        tested.insert(f.test_subject);
        EXPECT_EQ(f.train_subjects.size(), 7u);
        EXPECT_EQ(std::count(f.train_subjects.begin(), f.train_subjects.end(), f.test_subject), 0);
        std::multiset<std::size_t> sizes;
        std::multiset<int> all_val;
        for (const auto& in : f.inner) {
            sizes.insert(in.val_subjects.size());
            all_val.insert(in.val_subjects.begin(), in.val_subjects.end());
            EXPECT_EQ(in.train_subjects.size() + in.val_subjects.size(), 7u);
            for (int s : in.val_subjects) {
                EXPECT_EQ(std::count(in.train_subjects.begin(), in.train_subjects.end(), s), 0);
            }
            for (int s : in.train_subjects) EXPECT_NE(s, f.test_subject);
            for (int s : in.val_subjects) EXPECT_NE(s, f.test_subject);
        }
        EXPECT_EQ(sizes, (std::multiset<std::size_t>{2, 2, 3}));
        // Validation groups partition the training subjects.
        EXPECT_EQ(all_val, std::multiset<int>(f.train_subjects.begin(), f.train_subjects.end()));
    }
    EXPECT_EQ(tested.size(), 8u);
}

TEST(FoldPlan, FourAndThreeSubjects) {
    const std::vector<int> four{3, 1, 2, 0};
    const auto plan = make_fold_plan(four, 1);
    ASSERT_EQ(plan.folds.size(), 4u);
    for (const auto& f : plan.folds) {
        for (const auto& in : f.inner) EXPECT_EQ(in.val_subjects.size(), 1u);
    }
    const std::vector<int> three{0, 1, 2};
    EXPECT_THROW(make_fold_plan(three, 1), DataError);
}

TEST(FoldPlan, SeededShuffle) {
    const std::vector<int> subjects{0, 1, 2, 3, 4, 5, 6, 7};
    const auto a = make_fold_plan(subjects, 5), b = make_fold_plan(subjects, 5), c = make_fold_plan(subjects, 6);
    bool differs = false;
    for (std::size_t k = 0; k < 8; ++k) {
        for (std::size_t g = 0; g < kInnerFolds; ++g) {
            EXPECT_EQ(a.folds[k].inner[g].val_subjects, b.folds[k].inner[g].val_subjects);
            differs = differs || a.folds[k].inner[g].val_subjects != c.folds[k].inner[g].val_subjects;
        }
    }
    EXPECT_TRUE(differs);
}

TEST(Grid, Points) {
    TuningGrid g;
    EXPECT_EQ(g.points(BalanceMode::none).size(), 8u);
    EXPECT_EQ(g.points(BalanceMode::smote).size(), 16u);
    EXPECT_EQ(resolve_mtry(MtryRule::sqrt, 30), 5u);
    EXPECT_EQ(resolve_mtry(MtryRule::third, 30), 10u);
    EXPECT_EQ(resolve_mtry(MtryRule::third, 2), 1u);
}

TEST(Tune, SinglePointChosen) {
    const auto d = cohort(4, 60, 3.0, 1);
    const std::vector<int> subjects{0, 1, 2, 3};
    const auto plan = make_fold_plan(subjects, 1);
    const std::vector<GridPoint> grid{{7, 3, MtryRule::third, 0}};
    const auto r = tune(d, plan.folds[0].inner, grid, {}, {});
    EXPECT_EQ(r.best, grid[0]);
    ASSERT_EQ(r.scores.size(), 1u);
}

TEST(Tune, SeparatingPointBeatsConstant) {
    const auto d = cohort(6, 80, 6.0, 2);
    const auto subjects = d.subjects_present();
    const auto plan = make_fold_plan(subjects, 2);
    // Depth 0 predicts the majority everywhere (score 0.5); the deep forest separates.
    const std::vector<GridPoint> grid{{5, 0, MtryRule::third, 0}, {20, std::nullopt, MtryRule::third, 0}};
    const auto r = tune(d, plan.folds[0].inner, grid, {}, {});
    EXPECT_DOUBLE_EQ(r.scores[0], 0.5);
    EXPECT_GT(r.scores[1], 0.9);
    EXPECT_EQ(r.best, grid[1]);
}

TEST(Tune, TiesPreferSmallerModel) {
    const auto d = cohort(5, 80, 50.0, 3, 5, true);
    const auto subjects = d.subjects_present();
    const auto plan = make_fold_plan(subjects, 3);
    const std::vector<GridPoint> grid{{30, std::nullopt, MtryRule::third, 0},
                                      {10, std::nullopt, MtryRule::third, 0},
                                      {10, 4, MtryRule::third, 0}};
    const auto r = tune(d, plan.folds[0].inner, grid, {}, {});
    for (double s : r.scores) EXPECT_EQ(s, 1.0);
    EXPECT_EQ(r.best, grid[2]);
}

TEST(NestedCv, SeparableCohort) {
    const auto d = cohort(8, 120, 8.0, 4);
    NestedCvOptions o;
    o.grid = small_grid();
    o.seed = 9;
    for (auto mode : {BalanceMode::none, BalanceMode::undersample, BalanceMode::smote}) {
        o.balance.mode = mode;
        const auto r = run_nested_cv(d, DeviceSet::ankle, o);
        ASSERT_EQ(r.folds.size(), 8u);
        EXPECT_EQ(r.pooled.total(), d.rows());
        const auto counts = d.class_counts();
        EXPECT_EQ(r.pooled.actual(Posture::lying), counts[0]);
        EXPECT_EQ(r.pooled.actual(Posture::sitting), counts[1]);
        EXPECT_GE(r.pooled_metrics.balanced_accuracy, 0.95);
        EXPECT_EQ(r.audit.violations, 0u);
        EXPECT_EQ(r.audit.synthetic_in_eval, 0u);
        EXPECT_GT(r.audit.checked_rows, 0u);
        if (mode == BalanceMode::smote) {
            for (const auto& f : r.folds) EXPECT_GT(f.synthetic_rows, 0u);
        }
        std::set<int> tested;
        for (const auto& f : r.folds) tested.insert(f.test_subject);
        EXPECT_EQ(tested.size(), 8u);
    }
}

TEST(NestedCv, DeterministicAndNoSignal) {
    const auto d = cohort(6, 100, 0.0, 5, 2);
    NestedCvOptions o;
    o.grid = small_grid();
    o.seed = 10;
    o.balance.mode = BalanceMode::undersample;
    const auto a = run_nested_cv(d, DeviceSet::both, o);
    const auto b = run_nested_cv(d, DeviceSet::both, o);
    EXPECT_EQ(a.pooled, b.pooled);
    EXPECT_GT(a.pooled_metrics.balanced_accuracy, 0.4);
    EXPECT_LT(a.pooled_metrics.balanced_accuracy, 0.6);
}

TEST(NestedCv, SingleClassTestSubjectIsFlagged) {
    auto d = cohort(5, 60, 8.0, 6);
    // A sixth subject with lying windows only.
    const int id = d.intern_subject("S06");
    std::vector<double> x(30, 0.0);
    for (int i = 0; i < 20; ++i) d.add_row(x, Posture::lying, id);
    NestedCvOptions o;
    o.grid = small_grid();
    const auto r = run_nested_cv(d, DeviceSet::ankle, o);
    const auto it = std::find_if(r.folds.begin(), r.folds.end(), [&](const FoldResult& f) { return f.test_subject == id; });
    ASSERT_NE(it, r.folds.end());
    EXPECT_TRUE(it->single_class);
    EXPECT_TRUE(it->metrics.partial);
    EXPECT_TRUE(r.mean_fold_metrics.partial);
}

TEST(NestedCv, Errors) {
    NestedCvOptions o;
    o.grid = small_grid();
    EXPECT_THROW(run_nested_cv(cohort(3, 50, 1.0, 7), DeviceSet::both, o), DataError);
    auto d = cohort(5, 50, 1.0, 7);
    Dataset lying_only(d.feature_names());
    for (std::size_t i = 0; i < d.rows(); ++i) {
        if (d.label(i) == Posture::lying) {
            lying_only.intern_subject(d.subject_names()[static_cast<std::size_t>(d.subject(i))]);
            lying_only.add_row(d.row(i), Posture::lying, d.subject(i));
        }
    }
    EXPECT_THROW(run_nested_cv(lying_only, DeviceSet::both, o), DataError);
}

TEST(NestedCv, FinalModelCallback) {
    const auto d = cohort(4, 60, 8.0, 8);
    NestedCvOptions o;
    o.grid = small_grid();
    std::size_t calls = 0;
    o.on_final_model = [&](const FoldResult& f, const ForestModel& m) {
        ++calls;
        EXPECT_EQ(m.feature_names().size(), 15u);
        EXPECT_EQ(m.meta().device_set, "wrist");
        EXPECT_EQ(m.meta().seed, f.seed);
    };
    run_nested_cv(d, DeviceSet::wrist, o);
    EXPECT_EQ(calls, 4u);
}

TEST(LeakAudit, CountsTestSubjectRows) {
    Dataset root({"a"});
    root.intern_subject("A");
    root.intern_subject("B");
    root.add_row(std::vector<double>{0}, Posture::sitting, 0);
    root.add_row(std::vector<double>{1}, Posture::sitting, 1);
    root.add_row(std::vector<double>{2}, Posture::sitting, 1);
    Dataset train = root.subset(std::vector<std::size_t>{1, 2});
    EXPECT_EQ(count_leaks(train, root, 0), 0u);
    Provenance p;
    p.parent_a = 1;
    p.parent_b = 0;  // a parent from the excluded subject
    p.u = 0.5;
    train.add_row(std::vector<double>{0.5}, Posture::sitting, 1, p);
    EXPECT_EQ(count_leaks(train, root, 0), 1u);
    EXPECT_EQ(count_leaks(train, root, 1), 3u);
}

TEST(MannWhitney, IdenticalSamples) {
    Rng rng(1);
    std::vector<double> a(40);
    for (auto& v : a) v = rng.normal();
    EXPECT_GT(feature_class_test(a, a), 0.9);
    const std::vector<double> flat(10, 1.0);
    EXPECT_EQ(feature_class_test(flat, flat), 1.0);
}

TEST(MannWhitney, SeparatedSamples) {
    std::vector<double> a, b;
    for (int i = 0; i < 50; ++i) {
        a.push_back(i);
        b.push_back(100 + i);
    }
    const auto r = mann_whitney(a, b);
    EXPECT_EQ(r.u, 0.0);
    EXPECT_EQ(oracle::brute_u(a, b), 0.0);
    // (0 - 1250) / sqrt(50 * 50 * 101 / 12)
    EXPECT_NEAR(r.z, -1250.0 / std::sqrt(2500.0 * 101.0 / 12.0), 1e-12);
    EXPECT_NEAR(r.z, -8.617, 0.001);
    EXPECT_LT(r.p, 1e-10);
    EXPECT_GT(r.p, 0.0);
}

TEST(MannWhitney, MatchesPairCountingAndIsRankBased) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(1 + rng.below(30)), b(1 + rng.below(30));
        for (auto& v : a) v = static_cast<double>(rng.below(10));
        for (auto& v : b) v = static_cast<double>(rng.below(12));
        const auto r = mann_whitney(a, b);
        const double n1n2 = static_cast<double>(a.size() * b.size());
        EXPECT_NEAR(std::min(r.u, n1n2 - r.u), oracle::brute_u(a, b), 1e-9);
        EXPECT_GE(r.p, 0.0);
        EXPECT_LE(r.p, 1.0);
        auto ta = a, tb = b;
        for (auto& v : ta) v = std::exp(v) + 1;
        for (auto& v : tb) v = std::exp(v) + 1;
        const auto t = mann_whitney(ta, tb);
        EXPECT_EQ(t.u, r.u);
        EXPECT_EQ(t.p, r.p);
    }
    const std::vector<double> empty;
    EXPECT_THROW(mann_whitney(empty, std::vector<double>{1.0}), DataError);
}
