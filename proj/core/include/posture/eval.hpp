#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posture/balance.hpp"
#include "posture/dataset.hpp"
#include "posture/forest.hpp"
#include "posture/metrics.hpp"

namespace posture {

inline constexpr std::size_t kInnerFolds = 3;
inline constexpr std::size_t kMinSubjects = kInnerFolds + 1;

struct InnerFold {
    std::vector<int> train_subjects;
    std::vector<int> val_subjects;
};

struct OuterFold {
    int test_subject;
    std::vector<int> train_subjects;
    std::array<InnerFold, kInnerFolds> inner;
};

struct FoldPlan {
    std::vector<OuterFold> folds;
};

/// Leave-one-subject-out outer loop; the remaining subjects are shuffled with a
/// seed derived per fold and dealt round-robin into kInnerFolds validation groups.
/// Throws DataError for fewer than kMinSubjects subjects.
FoldPlan make_fold_plan(std::span<const int> subjects, std::uint64_t seed);

enum class MtryRule : std::uint8_t { sqrt, third };
std::size_t resolve_mtry(MtryRule rule, std::size_t n_features);

struct GridPoint {
    std::size_t n_trees = 300;
    std::optional<std::size_t> max_depth;
    MtryRule mtry = MtryRule::sqrt;
    unsigned smote_percent = 400;

    friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct TuningGrid {
    std::vector<std::size_t> n_trees = {100, 300};
    std::vector<std::optional<std::size_t>> max_depth = {std::nullopt, 10};
    std::vector<MtryRule> mtry = {MtryRule::sqrt, MtryRule::third};
    std::vector<unsigned> smote_percent = {200, 400};

    /// Cartesian product; smote_percent only varies in smote mode.
    std::vector<GridPoint> points(BalanceMode mode) const;
};

/// Shared by tuning and the final fit.
struct TrainingOptions {
    std::size_t min_leaf = 5;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct TuneResult {
    GridPoint best;
    double best_score = 0.0;
    std::vector<double> scores;  // mean validation balanced accuracy per grid point
};

/// Forest parameters for a grid point.
ForestParams forest_params(const GridPoint& point, std::size_t n_features, const TrainingOptions& options,
                           std::uint64_t seed);

/// Leakage bookkeeping for one outer fold.
struct LeakAudit {
    std::size_t checked_rows = 0;
    std::size_t violations = 0;  // training-side rows tied to the test subject
    std::size_t synthetic_in_eval = 0;  // synthetic rows found in validation/test sets
};

/// Rows of `training` whose subject, or any SMOTE parent's subject, is `excluded`.
/// `root` is the table that provenance indices point into.
std::size_t count_leaks(const Dataset& training, const Dataset& root, int excluded);

/// Picks the grid point with the best mean balanced accuracy over the inner folds.
/// Balancing touches only each inner training split. Ties prefer fewer trees,
/// then shallower depth, then grid order.
TuneResult tune(const Dataset& train, std::span<const InnerFold> inner, std::span<const GridPoint> grid,
                const BalanceConfig& balance, const TrainingOptions& options, const Dataset* root = nullptr,
                LeakAudit* audit = nullptr, int excluded_subject = -1);

struct FoldResult {
    int test_subject = -1;
    std::string test_subject_name;
    GridPoint chosen;
    double tuning_score = 0.0;
    std::uint64_t seed = 0;
    std::size_t train_rows = 0;
    std::size_t synthetic_rows = 0;
    ConfusionMatrix cm;
    Metrics metrics;
    bool single_class = false;  // test subject had windows of one class only
};

struct EvalResult {
    DeviceSet devices = DeviceSet::both;
    BalanceMode balance = BalanceMode::none;
    std::vector<FoldResult> folds;
    ConfusionMatrix pooled;
    Metrics pooled_metrics;
    Metrics mean_fold_metrics;
    LeakAudit audit;
};

struct NestedCvOptions {
    TuningGrid grid;
    BalanceConfig balance;  // mode and SMOTE parameters; seed is derived per fold
    TrainingOptions training;
    std::uint64_t seed = 0;
    /// Called with each outer fold's final model, in fold order.
    std::function<void(const FoldResult&, const ForestModel&)> on_final_model;
};

/// Subject-grouped nested cross-validation on the columns of `devices`.
/// Throws DataError for fewer than kMinSubjects subjects or a single class.
EvalResult run_nested_cv(const Dataset& data, DeviceSet devices, const NestedCvOptions& options);

struct MannWhitney {
    double u = 0.0;  // U of the first sample
    double z = 0.0;
    double p = 1.0;  // two-sided
};

/// Two-sided Mann-Whitney U with the tie-corrected normal approximation.
/// Throws DataError when either sample is empty.
MannWhitney mann_whitney(std::span<const double> a, std::span<const double> b);

/// p-value of mann_whitney(lying, sitting).
double feature_class_test(std::span<const double> values_lying, std::span<const double> values_sitting);

}  // namespace posture
