#pragma once

// Regression trees: binary recursive partitioning, weakest-link
// cost-complexity pruning and test-sample selection of the final subtree.

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "timeseries.hpp"

namespace fxh::cart {

struct CartConfig {
    int min_node_size = 5;
    double min_split_gain = 0.0;
    std::optional<int> max_depth;

    void validate() const {
        require(min_node_size >= 1, "cart: min_node_size must be >= 1");
        require(min_split_gain >= 0.0, "cart: min_split_gain must be >= 0");
        require(!max_depth || *max_depth >= 0, "cart: max_depth must be >= 0");
    }
};

struct SplitChoice {
    int variable = -1;
    double threshold = 0.0;
    double reduction = 0.0;  // SSE(parent) - SSE(left) - SSE(right)
};

/// Every node carries the mean of its training targets; internal nodes also
/// carry a split. Leaves have left == right == -1.
struct CartNode {
    int variable = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf_id = -1;
    double prediction = 0.0;
    int count = 0;
    double sse = 0.0;
    int source = -1;  // index of this node in the maximal tree it was pruned from

    bool is_leaf() const { return left < 0; }
};

/// Nodes are stored in preorder with the root at index 0; leaf ids are dense
/// and assigned in preorder.
struct CartTree {
    size_t n_features = 0;
    std::vector<CartNode> nodes;

    size_t leaf_count() const {
        return size_t(std::count_if(nodes.begin(), nodes.end(), [](const CartNode& n) { return n.is_leaf(); }));
    }

    template <class Row>
    const CartNode& route(const Row& x) const {
        const CartNode* n = &nodes.front();
        while (!n->is_leaf()) n = &nodes[size_t(x(n->variable) <= n->threshold ? n->left : n->right)];
        return *n;
    }

    void check_width(Eigen::Index width) const {
        require(static_cast<size_t>(width) == n_features,
                "cart: expected " + std::to_string(n_features) + " features, got " + std::to_string(width));
    }

    double predict(const Eigen::VectorXd& x) const {
        check_width(x.size());
        return route(x).prediction;
    }

    int node_id(const Eigen::VectorXd& x) const {
        check_width(x.size());
        return route(x).leaf_id;
    }

    Eigen::VectorXd predict(const Dataset& ds) const {
        check_width(ds.cols());
        Eigen::VectorXd out(ds.rows());
        for (Eigen::Index i = 0; i < ds.rows(); ++i) out(i) = route(ds.features.row(i)).prediction;
        return out;
    }

    double sse(const Dataset& ds) const { return (predict(ds) - ds.target).squaredNorm(); }

    double training_sse() const {
        double s = 0.0;
        for (const auto& n : nodes)
            if (n.is_leaf()) s += n.sse;
        return s;
    }

    /// Indented rendering, one node per line, preorder. read() parses it back.
    void write(std::ostream& out, const std::vector<std::string>& names = {}) const {
        out << "cart " << n_features << ' ' << nodes.size() << '\n';
        std::function<void(int, int)> emit = [&](int idx, int depth) {
            const CartNode& n = nodes[size_t(idx)];
            out << std::string(size_t(depth) * 2, ' ');
            if (n.is_leaf()) {
                out << "leaf id=" << n.leaf_id;
            } else {
                out << "split var=" << n.variable << " le=" << fmt_exact(n.threshold);
            }
            out << " mean=" << fmt_exact(n.prediction) << " n=" << n.count << " sse=" << fmt_exact(n.sse);
            if (!n.is_leaf() && size_t(n.variable) < names.size()) out << " # " << names[size_t(n.variable)];
            out << '\n';
            if (!n.is_leaf()) {
                emit(n.left, depth + 1);
                emit(n.right, depth + 1);
            }
        };
        emit(0, 0);
    }

    static CartTree read(std::istream& in) {
        TokenReader header(in);
        CartTree t;
        header.expect("cart");
        t.n_features = header.count("feature count");
        const size_t total = header.count("node count");
        require(total >= 1, "tree dump: no nodes");
        std::string line;
        std::getline(in, line);  // rest of the header line

        auto field = [](const std::string& tok, const char* key) {
            const std::string prefix = std::string(key) + "=";
            if (tok.rfind(prefix, 0) != 0) fail("tree dump: expected '" + prefix + "', found '" + tok + "'");
            return tok.substr(prefix.size());
        };
        int next_leaf = 0;
        std::function<int()> parse = [&]() -> int {
            if (t.nodes.size() >= total) fail("tree dump: more nodes than declared");
            if (!std::getline(in, line)) fail("tree dump truncated");
            std::istringstream ls(line);
            std::string kind, a, b, mean, cnt, sse;
            ls >> kind;
            CartNode n;
            if (kind == "leaf") {
                ls >> a >> mean >> cnt >> sse;
                n.leaf_id = int(parse_int(field(a, "id"), "tree dump leaf id"));
                require(n.leaf_id == next_leaf++, "tree dump: leaf ids must be dense and in preorder");
            } else if (kind == "split") {
                ls >> a >> b >> mean >> cnt >> sse;
                n.variable = int(parse_int(field(a, "var"), "tree dump variable"));
                require(n.variable >= 0 && size_t(n.variable) < t.n_features, "tree dump: variable out of range");
                n.threshold = parse_double(field(b, "le"), "tree dump threshold");
            } else {
                fail("tree dump: unknown node kind '" + kind + "'");
            }
            n.prediction = parse_double(field(mean, "mean"), "tree dump mean");
            n.count = int(parse_int(field(cnt, "n"), "tree dump count"));
            n.sse = parse_double(field(sse, "sse"), "tree dump sse");
            const int idx = int(t.nodes.size());
            n.source = idx;
            t.nodes.push_back(n);
            if (kind == "split") {
                const int l = parse();
                const int r = parse();
                t.nodes[size_t(idx)].left = l;
                t.nodes[size_t(idx)].right = r;
            }
            return idx;
        };
        parse();
        require(t.nodes.size() == total, "tree dump: node count mismatch");
        return t;
    }
};

// ---------------------------------------------------------------------------

namespace detail {

inline double mean_of(const Eigen::VectorXd& y, std::span<const int> rows) {
    double s = 0.0;
    for (int r : rows) s += y(r);
    return s / double(rows.size());
}

inline double sse_of(const Eigen::VectorXd& y, std::span<const int> rows, double mean) {
    double s = 0.0;
    for (int r : rows) s += (y(r) - mean) * (y(r) - mean);
    return s;
}

/// Midpoint that is guaranteed to route `lo` left and `hi` right.
inline double midpoint(double lo, double hi) {
    double m = lo + (hi - lo) / 2.0;
    if (!(m < hi)) m = lo;
    return m;
}

}  // namespace detail

/// Exhaustive search over midpoints between consecutive distinct values of
/// each variable. Ties go to the lowest variable, then the smallest threshold.
inline std::optional<SplitChoice> best_split(const Dataset& ds, std::span<const int> rows, const CartConfig& cfg) {
    cfg.validate();
    require(!rows.empty(), "cart: best_split needs at least one row");
    const Eigen::VectorXd& y = ds.target;
    const size_t n = rows.size();
    const bool constant_target =
        std::all_of(rows.begin(), rows.end(), [&](int r) { return y(r) == y(rows.front()); });
    if (n < 2 || constant_target) return std::nullopt;

    const double mean = detail::mean_of(y, rows);
    const auto min_size = size_t(cfg.min_node_size);
    std::vector<int> order(rows.begin(), rows.end());
    std::optional<SplitChoice> best;
    for (Eigen::Index v = 0; v < ds.cols(); ++v) {
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return ds.features(a, v) < ds.features(b, v); });
        double left_sum = 0.0;  // sum of centred targets on the left
        for (size_t k = 1; k < n; ++k) {
            left_sum += y(order[k - 1]) - mean;
            const double lo = ds.features(order[k - 1], v);
            const double hi = ds.features(order[k], v);
            if (!(lo < hi) || k < min_size || n - k < min_size) continue;
            // SSE(parent) - SSE(L) - SSE(R) = S_L^2 * n / (n_L * n_R) for centred sums.
            const double reduction = left_sum * left_sum * double(n) / (double(k) * double(n - k));
            if (!best || reduction > best->reduction * (1.0 + 1e-12))
                best = SplitChoice{int(v), detail::midpoint(lo, hi), reduction};
        }
    }
    if (!best || !(best->reduction > 0.0) || best->reduction < cfg.min_split_gain) return std::nullopt;
    return best;
}

inline std::optional<SplitChoice> best_split(const Dataset& ds, const CartConfig& cfg) {
    std::vector<int> rows(size_t(ds.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    return best_split(ds, rows, cfg);
}

/// Grows the maximal tree: nodes are split until no admissible split remains.
inline CartTree grow(const Dataset& train, const CartConfig& cfg) {
    cfg.validate();
    require(!train.empty(), "cart: empty training set");
    CartTree tree;
    tree.n_features = size_t(train.cols());
    int next_leaf = 0;

    std::function<int(std::vector<int>, int)> build = [&](std::vector<int> rows, int depth) -> int {
        CartNode node;
        node.count = int(rows.size());
        node.prediction = detail::mean_of(train.target, rows);
        node.sse = detail::sse_of(train.target, rows, node.prediction);
        const int idx = int(tree.nodes.size());
        node.source = idx;
        tree.nodes.push_back(node);

        std::optional<SplitChoice> s;
        if (!cfg.max_depth || depth < *cfg.max_depth) s = best_split(train, rows, cfg);
        if (!s) {
            tree.nodes[size_t(idx)].leaf_id = next_leaf++;
            return idx;
        }
        std::vector<int> left, right;
        for (int r : rows) (train.features(r, s->variable) <= s->threshold ? left : right).push_back(r);
        tree.nodes[size_t(idx)].variable = s->variable;
        tree.nodes[size_t(idx)].threshold = s->threshold;
        const int l = build(std::move(left), depth + 1);
        const int r = build(std::move(right), depth + 1);
        tree.nodes[size_t(idx)].left = l;
        tree.nodes[size_t(idx)].right = r;
        return idx;
    };
    std::vector<int> all(size_t(train.rows()));
    std::iota(all.begin(), all.end(), 0);
    build(std::move(all), 0);
    return tree;
}

// ---------------------------------------------------------------------------
// Pruning

struct PrunedTree {
    CartTree tree;
    double alpha = 0.0;
    std::optional<double> test_cost;
};

using PruneSequence = std::vector<PrunedTree>;

namespace detail {

/// Copies the part of `full` reachable from the root, turning collapsed
/// internal nodes into leaves and renumbering leaves in preorder.
inline CartTree extract(const CartTree& full, const std::vector<char>& collapsed) {
    CartTree out;
    out.n_features = full.n_features;
    int next_leaf = 0;
    std::function<int(int)> copy = [&](int idx) -> int {
        CartNode n = full.nodes[size_t(idx)];
        const int at = int(out.nodes.size());
        const bool leaf = n.is_leaf() || collapsed[size_t(idx)];
        const int l = n.left, r = n.right;
        if (leaf) {
            n.left = n.right = -1;
            n.variable = -1;
            n.threshold = 0.0;
            n.leaf_id = next_leaf++;
        } else {
            n.leaf_id = -1;
        }
        out.nodes.push_back(n);
        if (!leaf) {
            const int nl = copy(l);
            const int nr = copy(r);
            out.nodes[size_t(at)].left = nl;
            out.nodes[size_t(at)].right = nr;
        }
        return at;
    };
    copy(0);
    return out;
}

}  // namespace detail

/// Weakest-link cost-complexity pruning: repeatedly collapses the internal
/// node with the smallest (SSE increase) / (leaves removed), ties to the
/// lowest preorder index, down to the root-only tree.
inline PruneSequence prune_sequence(const CartTree& tree, const Dataset& train) {
    require(!tree.nodes.empty(), "cart: empty tree");
    tree.check_width(train.cols());
    const size_t m = tree.nodes.size();
    std::vector<char> collapsed(m, 0);
    PruneSequence seq;
    seq.push_back({detail::extract(tree, collapsed), 0.0, std::nullopt});

    // Subtree leaf SSE and leaf count for node idx under the current pruning.
    std::function<std::pair<double, int>(int)> subtree = [&](int idx) -> std::pair<double, int> {
        const CartNode& n = tree.nodes[size_t(idx)];
        if (n.is_leaf() || collapsed[size_t(idx)]) return {n.sse, 1};
        auto [ls, ll] = subtree(n.left);
        auto [rs, rl] = subtree(n.right);
        return {ls + rs, ll + rl};
    };

    while (seq.back().tree.nodes.size() > 1) {
        int weakest = -1;
        double g_min = std::numeric_limits<double>::infinity();
        std::function<void(int)> scan = [&](int idx) {
            const CartNode& n = tree.nodes[size_t(idx)];
            if (n.is_leaf() || collapsed[size_t(idx)]) return;
            auto [s, leaves] = subtree(idx);
            const double g = (n.sse - s) / double(leaves - 1);
            if (g < g_min) {
                g_min = g;
                weakest = idx;
            }
            scan(n.left);
            scan(n.right);
        };
        scan(0);
        collapsed[size_t(weakest)] = 1;
        seq.push_back({detail::extract(tree, collapsed), g_min, std::nullopt});
    }
    return seq;
}

/// Index of the subtree with minimum test SSE; ties go to fewer leaves.
/// Fills each entry's test_cost.
inline size_t select_min_cost_index(PruneSequence& seq, const Dataset& test) {
    require(!seq.empty(), "cart: empty prune sequence");
    require(!test.empty(), "cart: empty test sample");
    size_t best = 0;
    for (size_t k = 0; k < seq.size(); ++k) {
        seq[k].test_cost = seq[k].tree.sse(test);
        const double c = *seq[k].test_cost, b = *seq[best].test_cost;
        if (c < b || (c == b && seq[k].tree.leaf_count() < seq[best].tree.leaf_count())) best = k;
    }
    return best;
}

inline CartTree select_min_cost(PruneSequence seq, const Dataset& test) {
    const size_t k = select_min_cost_index(seq, test);
    return seq[k].tree;
}

struct RelativeErrorPoint {
    size_t leaves = 0;
    double relative_error = 0.0;
};

/// Test SSE of each subtree divided by that of the root-only tree.
inline std::vector<RelativeErrorPoint> relative_error_curve(const PruneSequence& seq, const Dataset& test) {
    require(!seq.empty(), "cart: empty prune sequence");
    require(!test.empty(), "cart: empty test sample");
    const double base = seq.back().tree.sse(test);
    std::vector<RelativeErrorPoint> out;
    for (const auto& p : seq) {
        const double s = p.tree.sse(test);
        double rel = s / base;
        if (!(base > 0.0)) rel = s > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
        out.push_back({p.tree.leaf_count(), rel});
    }
    return out;
}

/// Full pipeline: grow on train, prune, pick the minimum-cost subtree on test.
inline CartTree fit(const Dataset& train, const Dataset& test, const CartConfig& cfg) {
    CartTree maximal = grow(train, cfg);
    return select_min_cost(prune_sequence(maximal, train), test);
}

}  // namespace fxh::cart
