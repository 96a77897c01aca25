#pragma once

// Random Forest of CART trees: bootstrap rows per tree, a random slot subset at
// every node, Gini splits on midpoints, majority vote across trees.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdtopic/error.hpp"
#include "crowdtopic/features.hpp"
#include "crowdtopic/parallel.hpp"
#include "crowdtopic/random.hpp"

namespace crowdtopic::forest {

using Rows = std::vector<std::vector<double>>;

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 16;
    std::size_t min_samples_leaf = 1;
    std::size_t min_samples_split = 2;
    std::optional<std::size_t> features_per_split; // empty: floor(sqrt(slots)), at least 1
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_trees < 1) throw ArgumentError("n_trees must be ≥ 1");
        if (max_depth < 1) throw ArgumentError("max_depth must be ≥ 1");
        if (min_samples_leaf < 1) throw ArgumentError("min_samples_leaf must be ≥ 1");
        if (min_samples_split < 2) throw ArgumentError("min_samples_split must be ≥ 2");
        if (features_per_split && *features_per_split < 1) throw ArgumentError("features_per_split must be ≥ 1");
    }

    [[nodiscard]] std::size_t slots_per_split(std::size_t n_slots) const {
        if (features_per_split) return std::min(*features_per_split, n_slots);
        const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_slots))));
        return std::clamp<std::size_t>(root, 1, n_slots);
    }

    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// 1 - p0^2 - p1^2.
inline double gini(std::size_t n0, std::size_t n1) {
    const std::size_t n = n0 + n1;
    if (n == 0) throw ArgumentError("gini of an empty set");
    const double p0 = static_cast<double>(n0) / static_cast<double>(n);
    const double p1 = static_cast<double>(n1) / static_cast<double>(n);
    return 1.0 - p0 * p0 - p1 * p1;
}

inline double gini(std::span<const int> labels) {
    const auto n1 = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    return gini(labels.size() - n1, n1);
}

struct Split {
    std::size_t slot = 0;
    double threshold = 0.0;
    double impurity = 0.0; // size-weighted Gini of the two children

    friend bool operator==(const Split&, const Split&) = default;
};

/// Midpoint of two consecutive distinct values, kept strictly below `hi` so
/// that `hi` routes right.
inline double midpoint(double lo, double hi) {
    const double mid = lo / 2.0 + hi / 2.0;
    return mid < hi ? mid : lo;
}

inline constexpr double kTieEpsilon = 1e-12;

/// Best split of the rows named by `sample` (indices into rows, repeats
/// allowed) over `candidate_slots`. Returns nothing when no split lowers the
/// impurity or every split leaves a child below min_samples_leaf. Ties go to
/// the lower slot, then the lower threshold.
inline std::optional<Split> best_split(const Rows& rows, std::span<const int> labels,
                                       std::span<const std::size_t> sample, std::vector<std::size_t> candidate_slots,
                                       std::size_t min_samples_leaf = 1) {
    const std::size_t n = sample.size();
    if (n < 2) return std::nullopt;
    std::size_t total1 = 0;
    for (auto i : sample) total1 += labels[i] == 1;
    const double parent = gini(n - total1, total1);
    if (parent == 0.0) return std::nullopt;

    std::sort(candidate_slots.begin(), candidate_slots.end());
    std::optional<Split> best;
    std::vector<std::size_t> order(sample.begin(), sample.end());
    for (std::size_t slot : candidate_slots) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return rows[a][slot] < rows[b][slot]; });
        std::size_t left1 = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left1 += labels[order[i]] == 1;
            const double lo = rows[order[i]][slot];
            const double hi = rows[order[i + 1]][slot];
            if (!(lo < hi)) continue;
            const std::size_t nl = i + 1;
            const std::size_t nr = n - nl;
            if (nl < min_samples_leaf || nr < min_samples_leaf) continue;
            const double w = (static_cast<double>(nl) * gini(nl - left1, left1) +
                              static_cast<double>(nr) * gini(nr - (total1 - left1), total1 - left1)) /
                             static_cast<double>(n);
            if (!best || w < best->impurity - kTieEpsilon) best = Split{slot, midpoint(lo, hi), w};
        }
    }
    if (best && best->impurity < parent - kTieEpsilon) return best;
    return std::nullopt;
}

/// Convenience overload over every row.
inline std::optional<Split> best_split(const Rows& rows, std::span<const int> labels,
                                       std::vector<std::size_t> candidate_slots, std::size_t min_samples_leaf = 1) {
    std::vector<std::size_t> sample(rows.size());
    std::iota(sample.begin(), sample.end(), std::size_t{0});
    return best_split(rows, labels, sample, std::move(candidate_slots), min_samples_leaf);
}

struct Node {
    // Internal nodes: slot >= 0, rows with value <= threshold go to `left`.
    int slot = -1;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    // Training rows reaching this node, by class.
    std::size_t count0 = 0;
    std::size_t count1 = 0;

    [[nodiscard]] bool is_leaf() const { return slot < 0; }
    /// Majority class; a tie predicts 1.
    [[nodiscard]] int majority() const { return count1 >= count0 ? 1 : 0; }

    friend bool operator==(const Node&, const Node&) = default;
};

struct DecisionTree {
    std::vector<Node> nodes; // nodes[0] is the root

    [[nodiscard]] const Node& leaf_for(std::span<const double> x) const {
        const Node* node = &nodes.front();
        while (!node->is_leaf()) {
            node = &nodes[x[static_cast<std::size_t>(node->slot)] <= node->threshold ? node->left : node->right];
        }
        return *node;
    }
    [[nodiscard]] int predict(std::span<const double> x) const { return leaf_for(x).majority(); }

    [[nodiscard]] std::size_t depth() const {
        std::size_t deepest = 0;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            auto [i, d] = stack.back();
            stack.pop_back();
            deepest = std::max(deepest, d);
            if (!nodes[i].is_leaf()) {
                stack.emplace_back(nodes[i].left, d + 1);
                stack.emplace_back(nodes[i].right, d + 1);
            }
        }
        return deepest;
    }

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

namespace detail {

struct Grower {
    const Rows& rows;
    std::span<const int> labels;
    const ForestParams& params;
    std::size_t n_slots;
    Rng rng;
    DecisionTree tree;

    std::vector<std::size_t> draw_slots() {
        std::vector<std::size_t> slots(n_slots);
        std::iota(slots.begin(), slots.end(), std::size_t{0});
        const std::size_t m = params.slots_per_split(n_slots);
        for (std::size_t i = 0; i < m; ++i) std::swap(slots[i], slots[i + uniform_index(rng, n_slots - i)]);
        slots.resize(m);
        return slots;
    }

    std::size_t grow(std::vector<std::size_t> sample, std::size_t depth) {
        const std::size_t id = tree.nodes.size();
        tree.nodes.emplace_back();
        Node node;
        for (auto i : sample) (labels[i] == 1 ? node.count1 : node.count0)++;

        const bool can_split = depth < params.max_depth && sample.size() >= params.min_samples_split &&
                               node.count0 > 0 && node.count1 > 0;
        if (can_split) {
            const auto split = best_split(rows, labels, sample, draw_slots(), params.min_samples_leaf);
            if (split) {
                std::vector<std::size_t> left;
                std::vector<std::size_t> right;
                for (auto i : sample) (rows[i][split->slot] <= split->threshold ? left : right).push_back(i);
                sample.clear();
                sample.shrink_to_fit();
                node.slot = static_cast<int>(split->slot);
                node.threshold = split->threshold;
                node.left = grow(std::move(left), depth + 1);
                node.right = grow(std::move(right), depth + 1);
            }
        }
        tree.nodes[id] = node;
        return id;
    }
};

} // namespace detail

/// Grows one tree on rows[sample] (repeats allowed). The tree's generator
/// only picks the candidate slots at each node.
inline DecisionTree train_tree(const Rows& rows, std::span<const int> labels, std::vector<std::size_t> sample,
                               const ForestParams& params, std::uint64_t tree_seed) {
    if (sample.empty()) throw ArgumentError("train_tree needs at least one row");
    if (rows.size() != labels.size()) throw ArgumentError("rows and labels differ in length");
    detail::Grower g{rows, labels, params, rows.front().size(), make_rng(tree_seed), {}};
    g.grow(std::move(sample), 0);
    return std::move(g.tree);
}

inline DecisionTree train_tree(const Rows& rows, std::span<const int> labels, const ForestParams& params,
                               std::uint64_t tree_seed) {
    std::vector<std::size_t> sample(rows.size());
    std::iota(sample.begin(), sample.end(), std::size_t{0});
    return train_tree(rows, labels, std::move(sample), params, tree_seed);
}

struct RandomForest {
    std::vector<DecisionTree> trees;
    ForestParams params;
    std::string layout_fingerprint;
    std::size_t n_slots = 0;

    friend bool operator==(const RandomForest&, const RandomForest&) = default;
};

/// Tree i draws its bootstrap rows from the generator seeded with
/// derive_seed(params.seed, i) and its per-node slots from one seeded with
/// splitmix64 of that seed.
inline RandomForest train_forest(const features::FeatureMatrix& m, const ForestParams& params,
                                 std::size_t threads = 1) {
    params.validate();
    if (m.empty()) throw ArgumentError("train_forest needs a non-empty matrix");
    RandomForest forest;
    forest.params = params;
    forest.layout_fingerprint = m.layout.fingerprint();
    forest.n_slots = m.layout.size();
    forest.trees.resize(params.n_trees);
    const std::size_t n = m.size();
    parallel_for(params.n_trees, threads, [&](std::size_t t) {
        const std::uint64_t tree_seed = derive_seed(params.seed, t);
        std::vector<std::size_t> sample(n);
        if (params.bootstrap) {
            Rng rng = make_rng(tree_seed);
            for (auto& s : sample) s = uniform_index(rng, n);
            std::sort(sample.begin(), sample.end());
        } else {
            std::iota(sample.begin(), sample.end(), std::size_t{0});
        }
        forest.trees[t] = train_tree(m.rows, m.labels, std::move(sample), params, splitmix64(tree_seed));
    });
    return forest;
}

inline std::size_t votes_for_one(const RandomForest& f, std::span<const double> x) {
    if (x.size() != f.n_slots) throw LayoutError("feature vector length differs from the forest");
    std::size_t ones = 0;
    for (const auto& t : f.trees) ones += t.predict(x) == 1;
    return ones;
}

/// Majority vote; an exact tie predicts 1.
inline int predict(const RandomForest& f, std::span<const double> x) {
    return 2 * votes_for_one(f, x) >= f.trees.size() ? 1 : 0;
}

/// Fraction of trees voting 1.
inline double predict_proba(const RandomForest& f, std::span<const double> x) {
    return static_cast<double>(votes_for_one(f, x)) / static_cast<double>(f.trees.size());
}

inline void check_layout(const RandomForest& f, const features::FeatureLayout& layout) {
    if (layout.fingerprint() != f.layout_fingerprint) {
        throw LayoutError("feature layout " + layout.fingerprint() + " differs from the forest's " +
                          f.layout_fingerprint);
    }
}

inline int predict(const RandomForest& f, const features::FeatureVector& x) {
    check_layout(f, x.layout);
    return predict(f, std::span<const double>(x.values));
}

inline double predict_proba(const RandomForest& f, const features::FeatureVector& x) {
    check_layout(f, x.layout);
    return predict_proba(f, std::span<const double>(x.values));
}

inline std::vector<int> predict_all(const RandomForest& f, const features::FeatureMatrix& m) {
    check_layout(f, m.layout);
    std::vector<int> out;
    out.reserve(m.size());
    for (const auto& row : m.rows) out.push_back(predict(f, std::span<const double>(row)));
    return out;
}

// Serialization ------------------------------------------------------------

inline nlohmann::ordered_json to_json(const ForestParams& p) {
    nlohmann::ordered_json j;
    j["n_trees"] = p.n_trees;
    j["max_depth"] = p.max_depth;
    j["min_samples_leaf"] = p.min_samples_leaf;
    j["min_samples_split"] = p.min_samples_split;
    if (p.features_per_split) {
        j["features_per_split"] = *p.features_per_split;
    } else {
        j["features_per_split"] = "sqrt";
    }
    j["bootstrap"] = p.bootstrap;
    j["seed"] = p.seed;
    return j;
}

inline ForestParams params_from_json(const nlohmann::json& j) {
    ForestParams p;
    p.n_trees = j.at("n_trees").get<std::size_t>();
    p.max_depth = j.at("max_depth").get<std::size_t>();
    p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    const auto& fps = j.at("features_per_split");
    if (fps.is_string()) {
        if (fps != "sqrt") throw SchemaError("features_per_split must be an integer or \"sqrt\"");
    } else {
        p.features_per_split = fps.get<std::size_t>();
    }
    p.bootstrap = j.at("bootstrap").get<bool>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

/// Each tree is an array of nodes: [slot, threshold, left, right, count0, count1],
/// with slot -1 marking a leaf.
inline nlohmann::ordered_json to_json(const RandomForest& f) {
    nlohmann::ordered_json j;
    j["format"] = "crowdtopic.random_forest";
    j["version"] = 1;
    j["params"] = to_json(f.params);
    j["layout_fingerprint"] = f.layout_fingerprint;
    j["n_slots"] = f.n_slots;
    auto trees = nlohmann::ordered_json::array();
    for (const auto& t : f.trees) {
        auto nodes = nlohmann::ordered_json::array();
        for (const auto& n : t.nodes) nodes.push_back({n.slot, n.threshold, n.left, n.right, n.count0, n.count1});
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j;
}

inline RandomForest forest_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "crowdtopic.random_forest") throw SchemaError("not a random forest file");
        RandomForest f;
        f.params = params_from_json(j.at("params"));
        f.layout_fingerprint = j.at("layout_fingerprint").get<std::string>();
        f.n_slots = j.at("n_slots").get<std::size_t>();
        for (const auto& jt : j.at("trees")) {
            DecisionTree t;
            for (const auto& jn : jt) {
                Node n{jn.at(0).get<int>(),         jn.at(1).get<double>(),      jn.at(2).get<std::size_t>(),
                       jn.at(3).get<std::size_t>(), jn.at(4).get<std::size_t>(), jn.at(5).get<std::size_t>()};
                if (n.slot >= static_cast<int>(f.n_slots)) throw SchemaError("node slot out of range");
                t.nodes.push_back(n);
            }
            if (t.nodes.empty()) throw SchemaError("tree without nodes");
            for (const auto& n : t.nodes) {
                if (!n.is_leaf() && (n.left >= t.nodes.size() || n.right >= t.nodes.size())) {
                    throw SchemaError("node child index out of range");
                }
            }
            f.trees.push_back(std::move(t));
        }
        if (f.trees.size() != f.params.n_trees) throw SchemaError("tree count differs from n_trees");
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed forest: ") + e.what());
    }
}

inline void save_forest(const std::filesystem::path& path, const RandomForest& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
    out << to_json(f).dump() << '\n';
}

inline RandomForest load_forest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open forest '" + path.string() + "'");
    try {
        return forest_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace crowdtopic::forest
