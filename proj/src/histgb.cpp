#include <algorithm>
#include <cmath>

#include "xcohort/error.hpp"
#include "xcohort/learners.hpp"
#include "trees.hpp"

namespace xcohort::learn {

namespace {

using BinMatrix = std::vector<std::vector<std::uint16_t>>;  // [feature][row]

std::uint16_t bin_of(const std::vector<double>& edges, double x) {
    return static_cast<std::uint16_t>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin());
}

struct SplitCandidate {
    int feature = -1;
    int bin = -1;
    double gain = 0.0;
};

struct Leaf {
    int node = 0;
    std::vector<std::size_t> rows;
    double g = 0.0;
    double h = 0.0;
    SplitCandidate split;
};

SplitCandidate find_split(const BinMatrix& bins, const std::vector<std::vector<double>>& edges, const Leaf& leaf,
                          const std::vector<double>& grad, const std::vector<double>& hess, const HistGbOptions& opt) {
    SplitCandidate best;
    const double parent = leaf.h > 0 ? leaf.g * leaf.g / leaf.h : 0.0;
    const auto n = static_cast<int>(leaf.rows.size());
    if (n < 2 * opt.min_samples_leaf) return best;
    for (std::size_t f = 0; f < bins.size(); ++f) {
        const std::size_t nb = edges[f].size() + 1;
        if (nb < 2) continue;
        std::vector<double> hg(nb, 0.0);
        std::vector<double> hh(nb, 0.0);
        std::vector<int> hc(nb, 0);
        for (auto r : leaf.rows) {
            const auto b = bins[f][r];
            hg[b] += grad[r];
            hh[b] += hess[r];
            ++hc[b];
        }
        double gl = 0.0;
        double hl = 0.0;
        int cl = 0;
        for (std::size_t b = 0; b + 1 < nb; ++b) {
            gl += hg[b];
            hl += hh[b];
            cl += hc[b];
            if (cl < opt.min_samples_leaf) continue;
            if (n - cl < opt.min_samples_leaf) break;
            const double gr = leaf.g - gl;
            const double hr = leaf.h - hl;
            if (hl < opt.min_hessian || hr < opt.min_hessian) continue;
            const double gain = gl * gl / hl + gr * gr / hr - parent;
            if (gain > 0.0 && gain > best.gain) best = {static_cast<int>(f), static_cast<int>(b), gain};
        }
    }
    return best;
}

Tree grow(const BinMatrix& bins, const std::vector<std::vector<double>>& edges, const std::vector<double>& grad,
          const std::vector<double>& hess, const HistGbOptions& opt) {
    const std::size_t n = grad.size();
    Tree tree(1);
    std::vector<Leaf> leaves(1);
    leaves[0].rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        leaves[0].rows[i] = i;
        leaves[0].g += grad[i];
        leaves[0].h += hess[i];
    }
    leaves[0].split = find_split(bins, edges, leaves[0], grad, hess, opt);

    while (static_cast<int>(leaves.size()) < opt.max_leaf_nodes) {
        int pick = -1;
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            if (leaves[l].split.feature < 0) continue;
            if (pick < 0 || leaves[l].split.gain > leaves[static_cast<std::size_t>(pick)].split.gain) pick = static_cast<int>(l);
        }
        if (pick < 0) break;
        Leaf parent = std::move(leaves[static_cast<std::size_t>(pick)]);
        leaves.erase(leaves.begin() + pick);
        Leaf left;
        Leaf right;
        const auto f = static_cast<std::size_t>(parent.split.feature);
        for (auto r : parent.rows) {
            Leaf& dst = bins[f][r] <= parent.split.bin ? left : right;
            dst.rows.push_back(r);
            dst.g += grad[r];
            dst.h += hess[r];
        }
        left.node = static_cast<int>(tree.size());
        tree.push_back({});
        right.node = static_cast<int>(tree.size());
        tree.push_back({});
        TreeNode& node = tree[static_cast<std::size_t>(parent.node)];
        node.feature = parent.split.feature;
        node.threshold = parent.split.bin;
        node.left = left.node;
        node.right = right.node;
        left.split = find_split(bins, edges, left, grad, hess, opt);
        right.split = find_split(bins, edges, right, grad, hess, opt);
        leaves.insert(leaves.begin() + pick, std::move(right));
        leaves.insert(leaves.begin() + pick, std::move(left));
    }
    for (const auto& l : leaves) tree[static_cast<std::size_t>(l.node)].value = l.h > 0 ? -l.g / l.h : 0.0;
    return tree;
}

double binned_tree_value(const Tree& tree, const std::vector<std::uint16_t>& row_bins) {
    std::size_t node = 0;
    while (tree[node].feature >= 0) {
        const auto b = row_bins[static_cast<std::size_t>(tree[node].feature)];
        node = static_cast<std::size_t>(b <= tree[node].threshold ? tree[node].left : tree[node].right);
    }
    return tree[node].value;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

std::vector<double> histogram_edges(std::vector<double> values, int max_bins) {
    std::sort(values.begin(), values.end());
    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> edges;
    if (static_cast<int>(distinct.size()) <= max_bins) {
        for (std::size_t k = 0; k + 1 < distinct.size(); ++k) edges.push_back(distinct[k] + (distinct[k + 1] - distinct[k]) / 2.0);
        return edges;
    }
    const double last = static_cast<double>(values.size() - 1);
    for (int q = 1; q < max_bins; ++q) {
        const double pos = last * q / max_bins;
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, values.size() - 1);
        const double e = values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
        if (edges.empty() || e > edges.back()) edges.push_back(e);
    }
    return edges;
}

Eigen::VectorXd HistGbModel::raw_scores(const Eigen::MatrixXd& X) const {
    if (X.cols() != n_features) fail(ErrorCode::FeatureMismatch, "gradient boosting expects " + std::to_string(n_features) + " features");
    Eigen::VectorXd out(X.rows());
    std::vector<std::uint16_t> row_bins(static_cast<std::size_t>(n_features));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (int f = 0; f < n_features; ++f) row_bins[static_cast<std::size_t>(f)] = bin_of(bin_edges[static_cast<std::size_t>(f)], X(i, f));
        double s = 0.0;
        for (const auto& t : trees) s += binned_tree_value(t, row_bins);
        out[i] = base_score + learning_rate * s;
    }
    return out;
}

Eigen::VectorXd HistGbModel::predict_proba(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd raw = raw_scores(X);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = sigmoid(raw[i]);
    return raw;
}

HistGbModel train_histgb(const Eigen::MatrixXd& X, std::span<const int> y, std::uint64_t seed, const HistGbOptions& opt) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) fail(ErrorCode::DimensionMismatch, "design rows and label count differ");
    double pos = 0.0;
    for (int v : y) {
        if (v != 0 && v != 1) fail(ErrorCode::InvalidValue, "labels must be 0 or 1");
        pos += v;
    }
    const auto n = static_cast<std::size_t>(X.rows());
    if (pos == 0.0 || pos == static_cast<double>(n)) fail(ErrorCode::SingleClassLabels, "training labels contain a single class");

    HistGbModel m;
    m.learning_rate = opt.learning_rate;
    m.n_rounds = opt.n_rounds;
    m.seed = seed;
    m.n_features = static_cast<int>(X.cols());
    const double prior = pos / static_cast<double>(n);
    m.base_score = std::log(prior / (1.0 - prior));

    BinMatrix bins(static_cast<std::size_t>(X.cols()), std::vector<std::uint16_t>(n));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        std::vector<double> col(X.col(f).data(), X.col(f).data() + X.rows());
        m.bin_edges.push_back(histogram_edges(col, opt.max_bins));
        for (std::size_t i = 0; i < n; ++i) bins[static_cast<std::size_t>(f)][i] = bin_of(m.bin_edges.back(), col[i]);
    }

    std::vector<double> raw(n, m.base_score);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    for (int round = 0; round < opt.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(raw[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }
        Tree t = grow(bins, m.bin_edges, grad, hess, opt);
        std::vector<std::uint16_t> row_bins(bins.size());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < bins.size(); ++f) row_bins[f] = bins[f][i];
            raw[i] += m.learning_rate * binned_tree_value(t, row_bins);
        }
        m.trees.push_back(std::move(t));
    }
    return m;
}

Json to_json(const HistGbModel& m) {
    Json trees = Json::array();
    for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
    return Json{{"bin_edges", m.bin_edges},
                {"trees", trees},
                {"learning_rate", m.learning_rate},
                {"n_rounds", m.n_rounds},
                {"base_score", m.base_score},
                {"seed", m.seed},
                {"n_features", m.n_features}};
}

HistGbModel histgb_from_json(const Json& j) {
    HistGbModel m;
    m.bin_edges = require(j, "bin_edges").get<std::vector<std::vector<double>>>();
    for (const auto& t : require(j, "trees")) m.trees.push_back(tree_from_json(t));
    m.learning_rate = require(j, "learning_rate").get<double>();
    m.n_rounds = require(j, "n_rounds").get<int>();
    m.base_score = require(j, "base_score").get<double>();
    m.seed = require(j, "seed").get<std::uint64_t>();
    m.n_features = require(j, "n_features").get<int>();
    if (static_cast<int>(m.bin_edges.size()) != m.n_features) fail(ErrorCode::SchemaError, "bin edge count mismatch");
    return m;
}

}  // namespace xcohort::learn
