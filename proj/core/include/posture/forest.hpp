#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "posture/dataset.hpp"
#include "posture/random.hpp"
#include "posture/types.hpp"

namespace posture {

using ClassCounts = std::array<std::uint32_t, kNumClasses>;

/// Gini impurity 1 - sum p_i^2. Throws DataError when all counts are zero.
double gini(std::span<const std::uint32_t> counts);

struct Split {
    std::size_t feature;
    double threshold;
    double gain;
};

/// Exhaustive search over `candidate_features` (any order) and the midpoints between
/// consecutive distinct values. Both children must keep at least `min_leaf` rows.
/// Ties go to the lowest feature index, then the lowest threshold. Returns nothing
/// when no split lowers the impurity.
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features, std::size_t min_leaf = 1);

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    ClassCounts counts{};

    bool is_leaf() const { return feature < 0; }
    /// Majority class; ties go to lying.
    Posture majority() const { return counts[1] > counts[0] ? Posture::sitting : Posture::lying; }

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Nodes in preorder; node 0 is the root. Values <= threshold go left.
class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    std::span<const TreeNode> nodes() const { return nodes_; }
    const TreeNode& leaf_for(std::span<const double> x) const;
    Posture predict(std::span<const double> x) const { return leaf_for(x).majority(); }
    std::size_t depth() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    std::vector<TreeNode> nodes_;
};

struct TreeParams {
    std::optional<std::size_t> max_depth;  // nullopt = unlimited
    std::size_t min_leaf = 5;
    std::size_t mtry = 1;
};

/// Recursive CART. At each node `mtry` features are drawn without replacement
/// from `rng`; growth stops on purity, max_depth, fewer than 2*min_leaf rows, or
/// when no split helps.
DecisionTree grow_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params, Rng& rng);

struct ForestParams {
    std::size_t n_trees = 300;
    std::optional<std::size_t> max_depth;
    std::size_t min_leaf = 5;
    std::optional<std::size_t> mtry;  // nullopt = floor(sqrt(p))
    std::uint64_t seed = 0;
    bool bootstrap = true;  // off only in tests
    std::size_t jobs = 1;   // worker threads; never affects the result

    std::size_t resolved_mtry(std::size_t n_features) const;
};

struct TrainingMeta {
    std::string device_set;
    std::string balance;
    std::uint64_t seed = 0;

    friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

struct Prediction {
    Posture label;
    std::array<std::uint32_t, kNumClasses> votes;
};

class ForestModel {
public:
    ForestModel() = default;
    ForestModel(ForestParams params, std::vector<std::string> feature_names, std::vector<DecisionTree> trees,
                TrainingMeta meta = {});

    const ForestParams& params() const { return params_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    std::span<const DecisionTree> trees() const { return trees_; }
    const TrainingMeta& meta() const { return meta_; }
    TrainingMeta& meta() { return meta_; }

    /// Majority vote of the trees; a tied vote goes to lying. Throws DataError
    /// when `x` has the wrong length.
    Prediction predict(std::span<const double> x) const;

    friend bool operator==(const ForestModel& a, const ForestModel& b) {
        return a.feature_names_ == b.feature_names_ && a.trees_ == b.trees_ && a.meta_ == b.meta_ &&
               a.params_.n_trees == b.params_.n_trees && a.params_.max_depth == b.params_.max_depth &&
               a.params_.min_leaf == b.params_.min_leaf && a.params_.mtry == b.params_.mtry &&
               a.params_.seed == b.params_.seed && a.params_.bootstrap == b.params_.bootstrap;
    }

private:
    ForestParams params_;
    std::vector<std::string> feature_names_;
    std::vector<DecisionTree> trees_;
    TrainingMeta meta_;
};

/// Tree t bootstraps and grows with its own generator seeded from (seed, t).
/// Throws DataError unless both classes are present and all values are finite.
ForestModel train_forest(const Dataset& data, const ForestParams& params);

inline constexpr int kModelFormatVersion = 1;

/// Text format, see model_io.cpp. Doubles are written in shortest round-trip form,
/// so load(save(m)) == m.
void save_model(std::ostream& out, const ForestModel& model);
ForestModel load_model(std::istream& in);

}  // namespace posture
