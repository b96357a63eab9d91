#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "posture/errors.hpp"
#include "posture/forest.hpp"
#include "posture/random.hpp"

using namespace posture;

namespace {

Dataset make(std::size_t p) {
    std::vector<std::string> names;
    for (std::size_t f = 0; f < p; ++f) names.push_back("f" + std::to_string(f));
    Dataset d(names);
    d.intern_subject("S01");
    return d;
}

Dataset one_d(std::initializer_list<std::pair<double, Posture>> rows) {
    Dataset d = make(1);
    for (auto [v, y] : rows) d.add_row(std::vector<double>{v}, y, 0);
    return d;
}

std::vector<std::size_t> all_rows(const Dataset& d) {
    std::vector<std::size_t> r(d.rows());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
    return r;
}

// Small integer grid values so that ties between candidate splits really occur.
Dataset random_small(Rng& rng, std::size_t n, std::size_t p) {
    Dataset d = make(p);
    std::vector<double> x(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : x) v = static_cast<double>(rng.below(8)) + (rng.uniform() < 0.3 ? rng.uniform() : 0.0);
        const double score = x[0] - (p > 1 ? x[1] : 0.0) + rng.normal(0, 2);
        d.add_row(x, score > 0 ? Posture::sitting : Posture::lying, 0);
    }
    return d;
}

Dataset blobs(Rng& rng, std::size_t per_class) {
    Dataset d = make(2);
    for (std::size_t i = 0; i < per_class; ++i) {
        d.add_row(std::vector<double>{rng.normal(0, 1), rng.normal(0, 1)}, Posture::lying, 0);
        d.add_row(std::vector<double>{rng.normal(6, 1), rng.normal(6, 1)}, Posture::sitting, 0);
    }
    return d;
}

}  // namespace

TEST(Gini, Examples) {
    EXPECT_EQ(gini(std::vector<std::uint32_t>{10, 0}), 0.0);
    EXPECT_DOUBLE_EQ(gini(std::vector<std::uint32_t>{5, 5}), 0.5);
    EXPECT_DOUBLE_EQ(gini(std::vector<std::uint32_t>{3, 1}), 0.375);
    EXPECT_THROW(gini(std::vector<std::uint32_t>{0, 0}), DataError);
}

TEST(BestSplit, Examples) {
    const auto d = one_d({{0.1, Posture::lying}, {0.2, Posture::lying}, {0.8, Posture::sitting}, {0.9, Posture::sitting}});
    const std::vector<std::size_t> feats{0};
    const auto s = best_split(d, all_rows(d), feats);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->feature, 0u);
    EXPECT_DOUBLE_EQ(s->threshold, 0.5);
    EXPECT_DOUBLE_EQ(s->gain, 0.5);

    const auto same = one_d({{0.3, Posture::lying}, {0.3, Posture::sitting}, {0.3, Posture::lying}});
    EXPECT_FALSE(best_split(same, all_rows(same), feats));
    const auto pure = one_d({{0.1, Posture::lying}, {0.5, Posture::lying}, {0.9, Posture::lying}});
    EXPECT_FALSE(best_split(pure, all_rows(pure), feats));
}

TEST(BestSplit, TiesPreferLowestFeatureThenThreshold) {
    Dataset d = make(3);
    // Features 1 and 2 separate perfectly; feature 0 is noise.
    d.add_row(std::vector<double>{5, 0, 0}, Posture::lying, 0);
    d.add_row(std::vector<double>{1, 1, 1}, Posture::lying, 0);
    d.add_row(std::vector<double>{3, 2, 2}, Posture::sitting, 0);
    d.add_row(std::vector<double>{2, 3, 3}, Posture::sitting, 0);
    const std::vector<std::size_t> feats{2, 1, 0};
    const auto s = best_split(d, all_rows(d), feats);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->feature, 1u);
    EXPECT_DOUBLE_EQ(s->threshold, 1.5);

    // Two equally good thresholds on one feature: the lower one wins.
    const auto two = one_d({{0, Posture::lying}, {1, Posture::sitting}, {2, Posture::lying}, {3, Posture::sitting}});
    const std::vector<std::size_t> f0{0};
    const auto t = best_split(two, all_rows(two), f0);
    ASSERT_TRUE(t);
    const auto ref = oracle::brute_best_split(two, all_rows(two), 1);
    ASSERT_TRUE(ref);
    EXPECT_DOUBLE_EQ(t->threshold, ref->threshold);
}

TEST(BestSplit, MinLeaf) {
    const auto d = one_d({{0, Posture::sitting}, {1, Posture::lying}, {2, Posture::lying}, {3, Posture::lying}});
    const std::vector<std::size_t> f0{0};
    EXPECT_DOUBLE_EQ(best_split(d, all_rows(d), f0, 1)->threshold, 0.5);
    EXPECT_DOUBLE_EQ(best_split(d, all_rows(d), f0, 2)->threshold, 1.5);
    EXPECT_FALSE(best_split(d, all_rows(d), f0, 3));
}

TEST(BestSplit, MatchesBruteForce) {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t p = 1 + rng.below(4);
        const auto d = random_small(rng, 5 + rng.below(40), p);
        std::vector<std::size_t> feats(p);
        for (std::size_t f = 0; f < p; ++f) feats[f] = f;
        const std::size_t min_leaf = 1 + rng.below(4);
        const auto got = best_split(d, all_rows(d), feats, min_leaf);
        const auto ref = oracle::brute_best_split(d, all_rows(d), min_leaf);
        ASSERT_EQ(got.has_value(), ref.has_value()) << "trial " << trial;
        if (!ref) continue;
        EXPECT_EQ(got->feature, ref->feature);
        EXPECT_DOUBLE_EQ(got->threshold, ref->threshold);
        EXPECT_NEAR(got->gain, ref->gain, 1e-12);
    }
}

TEST(GrowTree, SeparableIsStump) {
    Rng rng(1);
    Dataset d = make(1);
    for (int i = 0; i < 20; ++i) d.add_row(std::vector<double>{rng.uniform(0, 1)}, Posture::lying, 0);
    for (int i = 0; i < 20; ++i) d.add_row(std::vector<double>{rng.uniform(2, 3)}, Posture::sitting, 0);
    const auto tree = grow_tree(d, all_rows(d), {std::nullopt, 1, 1}, rng);
    EXPECT_EQ(tree.depth(), 1u);
    ASSERT_EQ(tree.nodes().size(), 3u);
    const std::vector<std::size_t> f0{0};
    EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, best_split(d, all_rows(d), f0)->threshold);
}

TEST(GrowTree, SingleLeafCases) {
    Rng rng(1);
    const auto pure = one_d({{0.1, Posture::lying}, {0.5, Posture::lying}, {0.9, Posture::lying}});
    auto t = grow_tree(pure, all_rows(pure), {std::nullopt, 1, 1}, rng);
    ASSERT_EQ(t.nodes().size(), 1u);
    EXPECT_EQ(t.nodes()[0].counts, (ClassCounts{3, 0}));

    const auto mixed = one_d({{0.1, Posture::lying}, {0.5, Posture::sitting}, {0.9, Posture::sitting}});
    t = grow_tree(mixed, all_rows(mixed), {0, 1, 1}, rng);
    ASSERT_EQ(t.nodes().size(), 1u);
    EXPECT_EQ(t.nodes()[0].counts, (ClassCounts{1, 2}));
    EXPECT_EQ(t.predict(std::vector<double>{0.1}), Posture::sitting);
}

TEST(GrowTree, LeafTieGoesToLying) {
    TreeNode n;
    n.counts = {4, 4};
    EXPECT_EQ(n.majority(), Posture::lying);
}

TEST(GrowTree, LeavesRespectMinLeafAndDepth) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto d = random_small(rng, 200, 3);
        const std::size_t min_leaf = 1 + rng.below(10);
        const std::size_t depth = rng.below(8);
        const auto tree = grow_tree(d, all_rows(d), {depth, min_leaf, 2}, rng);
        EXPECT_LE(tree.depth(), depth);
        for (const auto& n : tree.nodes()) {
            if (n.is_leaf()) EXPECT_GE(n.counts[0] + n.counts[1], min_leaf);
        }
        // Children of every split partition the parent's rows.
        for (const auto& n : tree.nodes()) {
            if (n.is_leaf()) continue;
            const auto& l = tree.nodes()[static_cast<std::size_t>(n.left)];
            const auto& r = tree.nodes()[static_cast<std::size_t>(n.right)];
            EXPECT_EQ(l.counts[0] + r.counts[0], n.counts[0]);
            EXPECT_EQ(l.counts[1] + r.counts[1], n.counts[1]);
        }
    }
}

TEST(TrainForest, SingleTreeEqualsGrowTree) {
    Rng rng(2);
    const auto d = random_small(rng, 120, 4);
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.mtry = 2;
    p.min_leaf = 3;
    p.seed = 17;
    const auto model = train_forest(d, p);
    Rng tree_rng(derive_seed(17, 0));
    const auto tree = grow_tree(d, all_rows(d), {std::nullopt, 3, 2}, tree_rng);
    ASSERT_EQ(model.trees().size(), 1u);
    EXPECT_EQ(model.trees()[0], tree);
}

TEST(TrainForest, SingleTreeFullMtryEqualsCart) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t p = 1 + rng.below(4);
        const auto d = random_small(rng, 10 + rng.below(60), p);
        if (d.class_counts()[0] == 0 || d.class_counts()[1] == 0) continue;
        ForestParams params;
        params.n_trees = 1;
        params.bootstrap = false;
        params.mtry = p;
        params.min_leaf = 1 + rng.below(3);
        params.seed = rng.next();
        const auto model = train_forest(d, params);
        const auto cart = oracle::brute_cart(d, std::nullopt, params.min_leaf);
        const auto nodes = model.trees()[0].nodes();
        ASSERT_EQ(nodes.size(), cart.nodes.size()) << "trial " << trial;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            EXPECT_EQ(nodes[i].feature, cart.nodes[i].feature);
            EXPECT_DOUBLE_EQ(nodes[i].threshold, cart.nodes[i].threshold);
            EXPECT_EQ(nodes[i].counts[0], cart.nodes[i].counts[0]);
            EXPECT_EQ(nodes[i].counts[1], cart.nodes[i].counts[1]);
        }
        for (int q = 0; q < 50; ++q) {
            std::vector<double> x(p);
            for (auto& v : x) v = rng.uniform(-1, 9);
            EXPECT_EQ(model.predict(x).label, cart.predict(x));
        }
    }
}

TEST(TrainForest, TwoBlobs) {
    Rng rng(4);
    const auto d = blobs(rng, 100);
    ForestParams p;
    p.n_trees = 50;
    p.seed = 1;
    const auto model = train_forest(d, p);
    const oracle::NearestCentroid centroid(d);
    std::size_t correct = 0, agree = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const auto y = model.predict(d.row(i)).label;
        correct += y == d.label(i);
        agree += y == centroid.predict(d.row(i));
    }
    EXPECT_GE(correct, 198u);
    EXPECT_GE(agree, 198u);
}

TEST(TrainForest, DeterministicAndJobIndependent) {
    Rng rng(6);
    const auto d = random_small(rng, 300, 5);
    ForestParams p;
    p.n_trees = 24;
    p.seed = 99;
    const auto a = train_forest(d, p);
    const auto b = train_forest(d, p);
    p.jobs = 4;
    const auto c = train_forest(d, p);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    std::ostringstream sa, sc;
    save_model(sa, a);
    save_model(sc, c);
    EXPECT_EQ(sa.str(), sc.str());
    p.seed = 100;
    EXPECT_FALSE(train_forest(d, p) == a);
}

TEST(TrainForest, VotesSumToTrees) {
    Rng rng(7);
    const auto d = random_small(rng, 200, 3);
    ForestParams p;
    p.n_trees = 31;
    const auto model = train_forest(d, p);
    for (int q = 0; q < 200; ++q) {
        const std::vector<double> x{rng.uniform(-1, 9), rng.uniform(-1, 9), rng.uniform(-1, 9)};
        const auto pred = model.predict(x);
        EXPECT_EQ(pred.votes[0] + pred.votes[1], 31u);
        EXPECT_EQ(pred.label, pred.votes[1] > pred.votes[0] ? Posture::sitting : Posture::lying);
    }
}

TEST(TrainForest, MonotoneTransformKeepsPredictions) {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const auto d = random_small(rng, 150, 3);
        Dataset t = make(3);
        t.intern_subject("S01");
        const auto transform = [](double v) { return std::exp(0.7 * v) - 3.0; };
        for (std::size_t i = 0; i < d.rows(); ++i) {
            std::vector<double> x(d.row(i).begin(), d.row(i).end());
            x[1] = transform(x[1]);
            t.add_row(x, d.label(i), 0);
        }
        ForestParams p;
        p.n_trees = 15;
        p.seed = static_cast<std::uint64_t>(trial);
        const auto a = train_forest(d, p);
        const auto b = train_forest(t, p);
        for (std::size_t k = 0; k < a.trees().size(); ++k) {
            const auto na = a.trees()[k].nodes();
            const auto nb = b.trees()[k].nodes();
            ASSERT_EQ(na.size(), nb.size()) << "tree " << k;
            for (std::size_t i = 0; i < na.size(); ++i) {
                ASSERT_EQ(na[i].feature, nb[i].feature) << "tree " << k << " node " << i;
                ASSERT_EQ(na[i].counts, nb[i].counts) << "tree " << k << " node " << i;
            }
        }
        // Without bootstrapping every training row that reaches a node is one of
        // the rows the node was split on, so its side of the threshold is the
        // same in both forests. (A point between two node values need not be:
        // midpoints are not preserved by the transform.)
        p.bootstrap = false;
        const auto c = train_forest(d, p);
        const auto e = train_forest(t, p);
        for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(c.predict(d.row(i)).votes, e.predict(t.row(i)).votes);
    }
}

TEST(TrainForest, Errors) {
    const auto pure = one_d({{0.1, Posture::lying}, {0.5, Posture::lying}});
    EXPECT_THROW(train_forest(pure, {}), DataError);
    auto d = one_d({{0.1, Posture::lying}, {0.5, Posture::sitting}});
    ForestParams p;
    p.n_trees = 0;
    EXPECT_THROW(train_forest(d, p), DataError);
    p.n_trees = 1;
    p.mtry = 2;
    EXPECT_THROW(train_forest(d, p), DataError);
}

TEST(ForestModel, PredictionRules) {
    // Three stumps: two vote sitting, one lying.
    const TreeNode sit_leaf{-1, 0.0, -1, -1, {0, 3}};
    const TreeNode lie_leaf{-1, 0.0, -1, -1, {3, 0}};
    std::vector<DecisionTree> trees{DecisionTree({sit_leaf}), DecisionTree({sit_leaf}), DecisionTree({lie_leaf})};
    ForestParams p;
    p.n_trees = 3;
    ForestModel m(p, {"a"}, trees);
    auto pred = m.predict(std::vector<double>{0.0});
    EXPECT_EQ(pred.label, Posture::sitting);
    EXPECT_EQ(pred.votes, (std::array<std::uint32_t, 2>{1, 2}));
    EXPECT_THROW(m.predict(std::vector<double>{0.0, 1.0}), DataError);

    // Tied vote goes to lying.
    trees.push_back(DecisionTree({lie_leaf}));
    p.n_trees = 4;
    ForestModel tied(p, {"a"}, trees);
    EXPECT_EQ(tied.predict(std::vector<double>{0.0}).label, Posture::lying);

    // All sitting.
    ForestModel all(p, {"a"}, {DecisionTree({sit_leaf}), DecisionTree({sit_leaf})});
    EXPECT_EQ(all.predict(std::vector<double>{5.0}).votes, (std::array<std::uint32_t, 2>{0, 2}));
}

TEST(ModelIo, RoundTrip) {
    Rng rng(9);
    const auto d = random_small(rng, 200, 4);
    ForestParams p;
    p.n_trees = 12;
    p.max_depth = 6;
    p.seed = 3;
    auto model = train_forest(d, p);
    model.meta() = {"ankle", "smote", 3};
    std::stringstream io;
    save_model(io, model);
    const std::string text = io.str();
    const auto back = load_model(io);
    EXPECT_EQ(back, model);
    std::ostringstream again;
    save_model(again, back);
    EXPECT_EQ(again.str(), text);
    for (int q = 0; q < 100; ++q) {
        const std::vector<double> x{rng.normal(3, 3), rng.normal(3, 3), rng.normal(3, 3), rng.normal(3, 3)};
        EXPECT_EQ(back.predict(x).votes, model.predict(x).votes);
    }
}

TEST(ModelIo, RejectsCorruptFiles) {
    Rng rng(10);
    const auto d = random_small(rng, 60, 2);
    ForestParams p;
    p.n_trees = 2;
    std::ostringstream out;
    save_model(out, train_forest(d, p));
    const std::string good = out.str();

    std::istringstream wrong_version("posture-forest 99\n" + good.substr(good.find('\n') + 1));
    EXPECT_ANY_THROW(load_model(wrong_version));
    std::istringstream truncated(good.substr(0, good.size() / 2));
    EXPECT_ANY_THROW(load_model(truncated));
    std::istringstream empty("");
    EXPECT_ANY_THROW(load_model(empty));
}
