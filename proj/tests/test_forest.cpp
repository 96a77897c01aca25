#include <filesystem>

#include <gtest/gtest.h>

#include "crowdtopic/forest.hpp"
#include "crowdtopic/random.hpp"
#include "oracles.hpp"

using namespace crowdtopic;
using namespace crowdtopic::forest;

namespace {

features::FeatureMatrix make_matrix(const Rows& rows, const std::vector<int>& labels) {
    features::FeatureMatrix m;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < rows.front().size(); ++j) names.push_back("x" + std::to_string(j));
    m.layout = features::FeatureLayout(0, 0, names);
    for (std::size_t i = 0; i < rows.size(); ++i) m.add({rows[i], m.layout}, labels[i]);
    return m;
}

/// Walks a tree and checks routing, leaf sizes, depth and per-node counts.
void check_structure(const DecisionTree& t, const Rows& rows, const std::vector<int>& labels,
                     const std::vector<std::size_t>& sample, const ForestParams& p) {
    EXPECT_LE(t.depth(), p.max_depth);
    struct Item {
        std::size_t node;
        std::vector<std::size_t> rows;
    };
    std::vector<Item> stack{{0, sample}};
    while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        const Node& n = t.nodes[it.node];
        std::size_t ones = 0;
        for (auto i : it.rows) ones += labels[i] == 1;
        EXPECT_EQ(n.count1, ones);
        EXPECT_EQ(n.count0, it.rows.size() - ones);
        if (n.is_leaf()) {
            EXPECT_GE(it.rows.size(), p.min_samples_leaf);
            continue;
        }
        std::vector<std::size_t> left, right;
        for (auto i : it.rows) (rows[i][static_cast<std::size_t>(n.slot)] <= n.threshold ? left : right).push_back(i);
        EXPECT_FALSE(left.empty());
        EXPECT_FALSE(right.empty());
        stack.push_back({n.left, left});
        stack.push_back({n.right, right});
    }
}

RandomForest forest_of_leaves(const std::vector<int>& votes) {
    RandomForest f;
    f.n_slots = 1;
    for (int v : votes) {
        DecisionTree t;
        Node leaf;
        (v == 1 ? leaf.count1 : leaf.count0) = 1;
        t.nodes.push_back(leaf);
        f.trees.push_back(t);
    }
    f.params.n_trees = votes.size();
    return f;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> s(n);
    std::iota(s.begin(), s.end(), std::size_t{0});
    return s;
}

} // namespace

TEST(Gini, HandValues) {
    EXPECT_DOUBLE_EQ(gini(std::vector<int>{0, 0, 1, 1}), 0.5);
    EXPECT_DOUBLE_EQ(gini(std::vector<int>{1, 1, 1}), 0.0);
    EXPECT_DOUBLE_EQ(gini(std::vector<int>{0, 0, 0, 1}), 0.375);
    EXPECT_THROW(gini(std::vector<int>{}), ArgumentError);
}

TEST(BestSplit, EnumeratesMidpoints) {
    const Rows x{{1}, {2}, {3}, {4}};
    const std::vector<int> y{0, 0, 1, 1};
    const auto s = best_split(x, y, {0});
    ASSERT_TRUE(s);
    EXPECT_EQ(s->slot, 0u);
    EXPECT_DOUBLE_EQ(s->threshold, 2.5);
    EXPECT_DOUBLE_EQ(s->impurity, 0.0);
}

TEST(BestSplit, PureLabelsGiveNoSplit) {
    EXPECT_FALSE(best_split(Rows{{1}, {2}, {3}}, std::vector<int>{1, 1, 1}, {0}));
}

TEST(BestSplit, IdenticalRowsGiveNoSplit) {
    EXPECT_FALSE(best_split(Rows{{5, 5}, {5, 5}}, std::vector<int>{0, 1}, {0, 1}));
}

TEST(BestSplit, TiesGoToLowerSlotThenLowerThreshold) {
    // Both slots separate the classes perfectly.
    const Rows x{{1, 10}, {2, 20}, {3, 30}, {4, 40}};
    const auto s = best_split(x, std::vector<int>{0, 0, 1, 1}, {1, 0});
    ASSERT_TRUE(s);
    EXPECT_EQ(s->slot, 0u);
    // Two equally good thresholds on one slot: [0,1,0,1] splits at 1.5 and 3.5
    // give the same impurity; the lower wins.
    const auto t = best_split(Rows{{1}, {2}, {3}, {4}}, std::vector<int>{1, 0, 0, 1}, {0});
    ASSERT_TRUE(t);
    EXPECT_DOUBLE_EQ(t->threshold, 1.5);
}

TEST(BestSplit, RespectsMinSamplesLeaf) {
    const Rows x{{1}, {2}, {3}, {4}, {5}};
    const std::vector<int> y{1, 0, 0, 0, 0};
    EXPECT_DOUBLE_EQ(best_split(x, y, {0})->threshold, 1.5);
    EXPECT_DOUBLE_EQ(best_split(x, y, {0}, 2)->threshold, 2.5);
    EXPECT_FALSE(best_split(x, y, {0}, 3));
}

TEST(BestSplit, MatchesBruteForceWeightedGini) {
    Rng rng = make_rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 10);
        Rows x(n, std::vector<double>(3));
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : x[i]) v = static_cast<double>(uniform_index(rng, 5));
            y[i] = static_cast<int>(uniform_index(rng, 2));
        }
        double best = 1.0;
        for (const auto& t : oracle::all_tests(x)) {
            std::vector<int> l, r;
            for (std::size_t i = 0; i < n; ++i) (x[i][t.slot] <= t.threshold ? l : r).push_back(y[i]);
            const double w = (l.size() * gini(l) + r.size() * gini(r)) / static_cast<double>(n);
            best = std::min(best, w);
        }
        const auto s = best_split(x, y, {0, 1, 2});
        if (s) {
            EXPECT_NEAR(s->impurity, best, 1e-12);
        } else {
            EXPECT_TRUE(oracle::all_tests(x).empty() || best >= gini(y) - 1e-12);
        }
    }
}

TEST(TrainTree, IdenticalLabelsGiveSingleLeaf) {
    const auto t = train_tree(Rows{{1}, {2}, {3}}, std::vector<int>{0, 0, 0}, ForestParams{}, 1);
    ASSERT_EQ(t.nodes.size(), 1u);
    EXPECT_TRUE(t.nodes[0].is_leaf());
    EXPECT_EQ(t.predict(std::vector<double>{9}), 0);
}

TEST(TrainTree, SeparableFourRowsGiveOneSplit) {
    const Rows x{{1}, {2}, {3}, {4}};
    const auto t = train_tree(x, std::vector<int>{0, 0, 1, 1}, ForestParams{}, 1);
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_EQ(t.nodes[0].slot, 0);
    EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 2.5);
    EXPECT_EQ(t.depth(), 1u);
    EXPECT_EQ(t.nodes[t.nodes[0].left].count1, 0u);
    EXPECT_EQ(t.nodes[t.nodes[0].right].count0, 0u);
}

TEST(TrainTree, DepthCapAndStructuralInvariants) {
    Rng rng = make_rng(22);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 20 + uniform_index(rng, 40);
        Rows x(n, std::vector<double>(4));
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : x[i]) v = standard_normal(rng);
            y[i] = static_cast<int>(uniform_index(rng, 2));
        }
        ForestParams p;
        p.max_depth = 1 + uniform_index(rng, 5);
        p.min_samples_leaf = 1 + uniform_index(rng, 4);
        p.min_samples_split = 2 + uniform_index(rng, 6);
        p.features_per_split = 1 + uniform_index(rng, 4);
        const auto t = train_tree(x, y, p, static_cast<std::uint64_t>(trial));
        check_structure(t, x, y, all_rows(n), p);
        if (p.max_depth == 1) {
            std::size_t internal = 0;
            for (const auto& node : t.nodes) internal += !node.is_leaf();
            EXPECT_LE(internal, 1u);
        }
    }
}

TEST(TrainTree, ZeroErrorWhenOneSplitSuffices) {
    // Labels realizable by a single threshold: greedy Gini finds a pure split
    // at the root, so training error equals the exhaustive optimum of 0.
    Rng rng = make_rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 7);
        Rows x(n, std::vector<double>(2));
        for (auto& r : x) {
            for (auto& v : r) v = uniform01(rng);
        }
        const std::size_t slot = uniform_index(rng, 2);
        const double cut = uniform01(rng);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i][slot] > cut ? 1 : 0;
        ForestParams p;
        p.n_trees = 1;
        p.max_depth = 2;
        p.features_per_split = 2;
        p.bootstrap = false;
        const auto f = train_forest(make_matrix(x, y), p);
        long err = 0;
        for (std::size_t i = 0; i < n; ++i) err += predict(f, std::span<const double>(x[i])) != y[i];
        EXPECT_EQ(err, oracle::exhaustive_min_error(x, y));
        EXPECT_EQ(err, 0);
    }
}

TEST(Oracle, ExhaustiveSearchKnownCases) {
    // XOR on a 2x2 grid: one split leaves two errors, two levels none.
    const Rows x{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const std::vector<int> xor_y{0, 1, 1, 0};
    EXPECT_EQ(oracle::exhaustive_min_error(x, xor_y, 1), 2);
    EXPECT_EQ(oracle::exhaustive_min_error(x, xor_y, 2), 0);
    EXPECT_EQ(oracle::exhaustive_min_error(x, xor_y, 0), 2);
}

TEST(Forest, SingleTreeWithoutBootstrapEqualsPlainTree) {
    Rng rng = make_rng(24);
    Rows x(30, std::vector<double>(3));
    std::vector<int> y(30);
    for (std::size_t i = 0; i < 30; ++i) {
        for (auto& v : x[i]) v = standard_normal(rng);
        y[i] = x[i][0] + x[i][1] > 0 ? 1 : 0;
    }
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.features_per_split = 3;
    p.seed = 9;
    const auto f = train_forest(make_matrix(x, y), p);
    EXPECT_EQ(f.trees[0], train_tree(x, y, p, splitmix64(derive_seed(9, 0))));
}

TEST(Forest, SeparableDataFitsTrainingSetExactly) {
    Rng rng = make_rng(25);
    Rows x(120, std::vector<double>(5));
    std::vector<int> y(120);
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = static_cast<int>(i % 2);
        for (auto& v : x[i]) v = standard_normal(rng);
        x[i][2] += y[i] == 1 ? 4.0 : -4.0;
    }
    ForestParams p;
    p.n_trees = 50;
    p.max_depth = 1000;
    p.seed = 4;
    const auto m = make_matrix(x, y);
    const auto f = train_forest(m, p);
    EXPECT_EQ(predict_all(f, m), y);
}

TEST(Forest, DeterministicAcrossRunsAndThreads) {
    Rng rng = make_rng(26);
    Rows x(60, std::vector<double>(4));
    std::vector<int> y(60);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (auto& v : x[i]) v = standard_normal(rng);
        y[i] = uniform01(rng) < 0.5 ? 1 : 0;
    }
    const auto m = make_matrix(x, y);
    ForestParams p;
    p.n_trees = 40;
    p.seed = 12;
    const auto a = train_forest(m, p, 1);
    const auto b = train_forest(m, p, 1);
    const auto c = train_forest(m, p, 4);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(to_json(a).dump(), to_json(c).dump());
}

TEST(Forest, Errors) {
    features::FeatureMatrix empty;
    EXPECT_THROW(train_forest(empty, ForestParams{}), ArgumentError);
    ForestParams p;
    p.n_trees = 0;
    EXPECT_THROW(p.validate(), ArgumentError);
    p = {};
    p.min_samples_split = 1;
    EXPECT_THROW(p.validate(), ArgumentError);
    p = {};
    p.features_per_split = 0;
    EXPECT_THROW(p.validate(), ArgumentError);
}

TEST(Predict, MajorityVoteWithTiesToSuccess) {
    const std::vector<double> x{0.0};
    EXPECT_EQ(predict(forest_of_leaves({1, 1, 0}), x), 1);
    EXPECT_EQ(predict(forest_of_leaves({0, 0, 0, 0}), x), 0);
    EXPECT_EQ(predict(forest_of_leaves({1, 0}), x), 1);
    EXPECT_DOUBLE_EQ(predict_proba(forest_of_leaves({1, 1, 0, 0}), x), 0.5);
    EXPECT_DOUBLE_EQ(predict_proba(forest_of_leaves({1, 1, 1}), x), 1.0);
}

TEST(Predict, LabelAgreesWithProbability) {
    Rng rng = make_rng(27);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> votes(1 + uniform_index(rng, 8));
        for (auto& v : votes) v = static_cast<int>(uniform_index(rng, 2));
        const auto f = forest_of_leaves(votes);
        const std::vector<double> x{0.0};
        EXPECT_EQ(predict(f, x) == 1, predict_proba(f, x) >= 0.5);
    }
}

TEST(Predict, LeafTieVotesSuccess) {
    Node n;
    n.count0 = n.count1 = 2;
    EXPECT_EQ(n.majority(), 1);
}

TEST(Predict, LayoutMismatch) {
    const auto m = make_matrix(Rows{{1, 2}, {3, 4}}, {0, 1});
    ForestParams p;
    p.n_trees = 3;
    const auto f = train_forest(m, p);
    EXPECT_THROW(predict(f, std::vector<double>{1.0}), LayoutError);
    features::FeatureVector v{{1.0, 2.0}, features::FeatureLayout(0, 0, {"a", "b"})};
    EXPECT_THROW(predict(f, v), LayoutError);
    EXPECT_NO_THROW(predict(f, features::FeatureVector{{1.0, 2.0}, m.layout}));
}

TEST(Serialization, RoundTrip) {
    Rng rng = make_rng(28);
    Rows x(40, std::vector<double>(3));
    std::vector<int> y(40);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (auto& v : x[i]) v = standard_normal(rng);
        y[i] = x[i][1] > 0.1 ? 1 : 0;
    }
    ForestParams p;
    p.n_trees = 7;
    p.features_per_split = 2;
    p.seed = 99;
    const auto f = train_forest(make_matrix(x, y), p);
    const auto path = std::filesystem::temp_directory_path() / "crowdtopic_forest.json";
    save_forest(path, f);
    EXPECT_EQ(load_forest(path), f);
    EXPECT_EQ(forest_from_json(nlohmann::json::parse(to_json(f).dump())), f);
    auto broken = nlohmann::json::parse(to_json(f).dump());
    broken["trees"].erase(0);
    EXPECT_THROW(forest_from_json(broken), SchemaError);
    std::filesystem::remove(path);
}
