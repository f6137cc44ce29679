#include <algorithm>
#include <cmath>
#include <numeric>

#include "xcohort/error.hpp"
#include "xcohort/learners.hpp"
#include "xcohort/rng.hpp"
#include "trees.hpp"

namespace xcohort::learn {

namespace {

void check_binary(std::span<const int> y, Eigen::Index rows) {
    if (static_cast<std::size_t>(rows) != y.size()) fail(ErrorCode::DimensionMismatch, "design rows and label count differ");
    int pos = 0;
    for (int v : y) {
        if (v != 0 && v != 1) fail(ErrorCode::InvalidValue, "labels must be 0 or 1");
        pos += v;
    }
    if (pos == 0 || pos == static_cast<int>(y.size())) fail(ErrorCode::SingleClassLabels, "training labels contain a single class");
}

double gini_sum(double n, double pos) {
    // n * gini impurity
    if (n <= 0) return 0.0;
    const double p = pos / n;
    return n * (1.0 - p * p - (1.0 - p) * (1.0 - p));
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

Split best_split_on(const Eigen::MatrixXd& X, std::span<const int> y, const std::vector<std::size_t>& rows, int f, double parent) {
    std::vector<std::pair<double, int>> pairs;
    pairs.reserve(rows.size());
    for (auto r : rows) pairs.emplace_back(X(static_cast<Eigen::Index>(r), f), y[r]);
    std::sort(pairs.begin(), pairs.end());
    double total_pos = 0.0;
    for (const auto& p : pairs) total_pos += p.second;
    const double n = static_cast<double>(pairs.size());
    Split best;
    double left_pos = 0.0;
    for (std::size_t k = 0; k + 1 < pairs.size(); ++k) {
        left_pos += pairs[k].second;
        if (!(pairs[k].first < pairs[k + 1].first)) continue;
        const double nl = static_cast<double>(k + 1);
        const double gain = parent - gini_sum(nl, left_pos) - gini_sum(n - nl, total_pos - left_pos);
        if (best.feature < 0 || gain > best.gain) {
            double mid = pairs[k].first + (pairs[k + 1].first - pairs[k].first) / 2.0;
            if (mid >= pairs[k + 1].first) mid = pairs[k].first;
            best = {f, mid, gain};
        }
    }
    return best;
}

Tree grow_tree(const Eigen::MatrixXd& X, std::span<const int> y, std::vector<std::size_t> rows, int max_depth, Rng& rng) {
    const int p = static_cast<int>(X.cols());
    const int mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))));
    Tree tree;
    struct Pending {
        int node;
        std::vector<std::size_t> rows;
        int depth;
    };
    std::vector<Pending> stack;
    tree.push_back({});
    stack.push_back({0, std::move(rows), 0});
    std::vector<int> features(static_cast<std::size_t>(p));
    while (!stack.empty()) {
        Pending cur = std::move(stack.back());
        stack.pop_back();
        double pos = 0.0;
        for (auto r : cur.rows) pos += y[r];
        const double n = static_cast<double>(cur.rows.size());
        tree[static_cast<std::size_t>(cur.node)].value = pos / n;
        if (pos == 0.0 || pos == n || cur.rows.size() < 2 || (max_depth > 0 && cur.depth >= max_depth)) continue;

        // Draw features without replacement; keep drawing past mtry until a
        // feature with a valid partition is found.
        std::iota(features.begin(), features.end(), 0);
        const double parent = gini_sum(n, pos);
        Split best;
        for (int drawn = 0; drawn < p; ++drawn) {
            const auto pick = static_cast<std::size_t>(drawn) + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(p - drawn)));
            std::swap(features[static_cast<std::size_t>(drawn)], features[pick]);
            const Split s = best_split_on(X, y, cur.rows, features[static_cast<std::size_t>(drawn)], parent);
            if (s.feature >= 0 && (best.feature < 0 || s.gain > best.gain)) best = s;
            if (drawn + 1 >= mtry && best.feature >= 0) break;
        }
        if (best.feature < 0) continue;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto r : cur.rows) (X(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
        const int li = static_cast<int>(tree.size());
        tree.push_back({});
        const int ri = static_cast<int>(tree.size());
        tree.push_back({});
        TreeNode& node = tree[static_cast<std::size_t>(cur.node)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = li;
        node.right = ri;
        stack.push_back({ri, std::move(right), cur.depth + 1});
        stack.push_back({li, std::move(left), cur.depth + 1});
    }
    return tree;
}

}  // namespace

double tree_value(const Tree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    std::size_t node = 0;
    while (tree[node].feature >= 0) {
        node = static_cast<std::size_t>(x[tree[node].feature] <= tree[node].threshold ? tree[node].left : tree[node].right);
    }
    return tree[node].value;
}

Eigen::VectorXd ForestModel::predict_proba(const Eigen::MatrixXd& X) const {
    if (X.cols() != n_features) fail(ErrorCode::FeatureMismatch, "forest expects " + std::to_string(n_features) + " features");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double s = 0.0;
        for (const auto& t : trees) s += tree_value(t, X.row(i));
        out[i] = s / static_cast<double>(trees.size());
    }
    return out;
}

ForestModel train_forest(const Eigen::MatrixXd& X, std::span<const int> y, int n_trees, int max_depth, std::uint64_t seed) {
    check_binary(y, X.rows());
    if (n_trees < 1) fail(ErrorCode::InvalidValue, "n_trees must be >= 1");
    ForestModel m;
    m.n_trees = n_trees;
    m.max_depth = max_depth;
    m.seed = seed;
    m.n_features = static_cast<int>(X.cols());
    const auto n = static_cast<std::uint64_t>(X.rows());
    for (int t = 0; t < n_trees; ++t) {
        Rng rng = Rng::stream(seed, {static_cast<std::uint64_t>(t)});
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        // A bootstrap sample with one class still yields a valid (constant) tree.
        m.trees.push_back(grow_tree(X, y, std::move(rows), max_depth, rng));
    }
    return m;
}

Json tree_to_json(const Tree& t) {
    Json nodes = Json::array();
    for (const auto& n : t) nodes.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    return nodes;
}

Tree tree_from_json(const Json& j) {
    Tree t;
    for (const auto& n : j) {
        if (!n.is_array() || n.size() != 5) fail(ErrorCode::SchemaError, "tree node must have 5 fields");
        t.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(), n[4].get<double>()});
    }
    const auto size = static_cast<int>(t.size());
    for (const auto& n : t) {
        if (n.feature >= 0 && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size)) {
            fail(ErrorCode::SchemaError, "tree child index out of range");
        }
    }
    if (t.empty()) fail(ErrorCode::SchemaError, "empty tree");
    return t;
}

Json to_json(const ForestModel& m) {
    Json trees = Json::array();
    for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
    return Json{{"n_trees", m.n_trees}, {"max_depth", m.max_depth}, {"seed", m.seed}, {"n_features", m.n_features}, {"trees", trees}};
}

ForestModel forest_from_json(const Json& j) {
    ForestModel m;
    m.n_trees = require(j, "n_trees").get<int>();
    m.max_depth = require(j, "max_depth").get<int>();
    m.seed = require(j, "seed").get<std::uint64_t>();
    m.n_features = require(j, "n_features").get<int>();
    for (const auto& t : require(j, "trees")) m.trees.push_back(tree_from_json(t));
    if (static_cast<int>(m.trees.size()) != m.n_trees) fail(ErrorCode::SchemaError, "tree count mismatch");
    return m;
}

}  // namespace xcohort::learn
