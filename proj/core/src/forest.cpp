#include "posture/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "posture/errors.hpp"

namespace posture {
namespace {

// Gains closer than this are treated as equal so that tie-breaking does not
// hinge on rounding in the last bit.
constexpr double kGainEpsilon = 1e-12;

double gini2(double a, double b) {
    const double n = a + b;
    return 1.0 - (a * a + b * b) / (n * n);
}

ClassCounts count_classes(const Dataset& data, std::span<const std::size_t> rows) {
    ClassCounts c{};
    for (std::size_t r : rows) ++c[class_index(data.label(r))];
    return c;
}

class SplitSearch {
public:
    std::optional<Split> run(const Dataset& data, std::span<const std::size_t> rows,
                             std::span<const std::size_t> features_sorted, std::size_t min_leaf,
                             const ClassCounts& total) {
        const std::size_t n = rows.size();
        if (n < 2 || total[0] == 0 || total[1] == 0) return std::nullopt;
        const double nd = static_cast<double>(n);
        const double parent = gini2(total[0], total[1]);

        std::optional<Split> best;
        double best_gain = kGainEpsilon;
        buf_.resize(n);
        for (std::size_t f : features_sorted) {
            for (std::size_t i = 0; i < n; ++i) {
                buf_[i] = {data.value(rows[i], f), static_cast<std::uint8_t>(class_index(data.label(rows[i])))};
            }
            std::sort(buf_.begin(), buf_.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double left0 = 0.0, left1 = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                (buf_[i].second ? left1 : left0) += 1.0;
                if (buf_[i].first == buf_[i + 1].first) continue;
                const std::size_t nl = i + 1;
                if (nl < min_leaf || n - nl < min_leaf) continue;
                const double right0 = total[0] - left0;
                const double right1 = total[1] - left1;
                const double nld = static_cast<double>(nl);
                const double gain =
                    parent - (nld / nd) * gini2(left0, left1) - ((nd - nld) / nd) * gini2(right0, right1);
                if (gain > best_gain + (best ? kGainEpsilon : 0.0)) {
                    const double lo = buf_[i].first;
                    const double hi = buf_[i + 1].first;
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best = Split{f, mid, gain};
                    best_gain = gain;
                }
            }
        }
        return best;
    }

private:
    std::vector<std::pair<double, std::uint8_t>> buf_;
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const TreeParams& params, Rng& rng) : data_(data), params_(params), rng_(rng) {}

    std::vector<TreeNode> build(std::vector<std::size_t> rows) {
        nodes_.clear();
        grow(rows, 0);
        return std::move(nodes_);
    }

private:
    std::int32_t grow(std::span<std::size_t> rows, std::size_t depth) {
        const ClassCounts counts = count_classes(data_, rows);
        const auto index = static_cast<std::int32_t>(nodes_.size());
        TreeNode leaf;
        leaf.counts = counts;
        nodes_.push_back(leaf);

        const bool pure = counts[0] == 0 || counts[1] == 0;
        const bool too_deep = params_.max_depth && depth >= *params_.max_depth;
        if (pure || too_deep || rows.size() < 2 * params_.min_leaf) return index;

        auto features = rng_.sample_without_replacement(data_.features(), params_.mtry);
        std::sort(features.begin(), features.end());
        const auto split = search_.run(data_, rows, features, params_.min_leaf, counts);
        if (!split) return index;

        const auto mid = std::partition(rows.begin(), rows.end(), [&](std::size_t r) {
            return data_.value(r, split->feature) <= split->threshold;
        });
        const auto n_left = static_cast<std::size_t>(mid - rows.begin());
        nodes_[index].feature = static_cast<std::int32_t>(split->feature);
        nodes_[index].threshold = split->threshold;
        const std::int32_t left = grow(rows.first(n_left), depth + 1);
        const std::int32_t right = grow(rows.subspan(n_left), depth + 1);
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    const Dataset& data_;
    const TreeParams& params_;
    Rng& rng_;
    SplitSearch search_;
    std::vector<TreeNode> nodes_;
};

void check_trainable(const Dataset& data) {
    const auto counts = data.class_counts();
    if (counts[0] == 0 || counts[1] == 0) throw DataError("training data must contain both lying and sitting rows");
    if (data.features() == 0) throw DataError("training data has no features");
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (double v : data.row(i)) {
            if (!std::isfinite(v)) throw DataError("training data contains a non-finite value");
        }
    }
}

}  // namespace

double gini(std::span<const std::uint32_t> counts) {
    double total = 0.0;
    for (auto c : counts) total += c;
    if (total == 0.0) throw DataError("gini of an empty node");
    double sum_sq = 0.0;
    for (auto c : counts) sum_sq += (c / total) * (c / total);
    return 1.0 - sum_sq;
}

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features, std::size_t min_leaf) {
    std::vector<std::size_t> feats(candidate_features.begin(), candidate_features.end());
    std::sort(feats.begin(), feats.end());
    SplitSearch search;
    return search.run(data, rows, feats, std::max<std::size_t>(min_leaf, 1), count_classes(data, rows));
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes_.front();
    while (!node->is_leaf()) {
        node = &nodes_[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold
                                                    ? node->left
                                                    : node->right)];
    }
    return *node;
}

std::size_t DecisionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t deepest = 0;
    // Preorder: parents precede children.
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (!nodes_[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
        }
    }
    return deepest;
}

DecisionTree grow_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params, Rng& rng) {
    if (rows.empty()) throw DataError("grow_tree needs at least one row");
    if (params.mtry < 1 || params.mtry > data.features()) throw DataError("mtry must lie in [1, features]");
    if (params.min_leaf < 1) throw DataError("min_leaf must be at least 1");
    TreeBuilder builder(data, params, rng);
    return DecisionTree(builder.build(std::vector<std::size_t>(rows.begin(), rows.end())));
}

std::size_t ForestParams::resolved_mtry(std::size_t n_features) const {
    const std::size_t m =
        mtry.value_or(std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(n_features)))));
    if (m < 1 || m > n_features) throw DataError("mtry must lie in [1, features]");
    return m;
}

ForestModel::ForestModel(ForestParams params, std::vector<std::string> feature_names, std::vector<DecisionTree> trees,
                         TrainingMeta meta)
    : params_(std::move(params)), feature_names_(std::move(feature_names)), trees_(std::move(trees)),
      meta_(std::move(meta)) {
    if (!feature_names_.empty()) params_.mtry = params_.resolved_mtry(feature_names_.size());
}

Prediction ForestModel::predict(std::span<const double> x) const {
    if (x.size() != feature_names_.size()) {
        throw DataError("feature vector has " + std::to_string(x.size()) + " values, model expects " +
                        std::to_string(feature_names_.size()));
    }
    Prediction p{Posture::lying, {0, 0}};
    for (const auto& t : trees_) ++p.votes[class_index(t.predict(x))];
    p.label = p.votes[1] > p.votes[0] ? Posture::sitting : Posture::lying;
    return p;
}

ForestModel train_forest(const Dataset& data, const ForestParams& params) {
    if (params.n_trees < 1) throw DataError("n_trees must be at least 1");
    check_trainable(data);
    const TreeParams tree_params{params.max_depth, params.min_leaf, params.resolved_mtry(data.features())};
    std::vector<DecisionTree> trees(params.n_trees);

    const auto train_one = [&](std::size_t t) {
        Rng rng(derive_seed(params.seed, t));
        std::vector<std::size_t> rows(data.rows());
        if (params.bootstrap) {
            for (auto& r : rows) r = rng.below(data.rows());
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        trees[t] = grow_tree(data, rows, tree_params, rng);
    };

    const std::size_t jobs = std::clamp<std::size_t>(params.jobs, 1, params.n_trees);
    if (jobs == 1) {
        for (std::size_t t = 0; t < params.n_trees; ++t) train_one(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t t = next++; t < params.n_trees; t = next++) {
                    try {
                        train_one(t);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        workers.clear();
        if (failure) std::rethrow_exception(failure);
    }
    return ForestModel(params, data.feature_names(), std::move(trees));
}

}  // namespace posture
