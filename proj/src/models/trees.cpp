#include "idcs/trees.hpp"

#include <algorithm>
#include <numeric>

namespace idcs {

double Tree::predict(std::span<const double> x) const noexcept { return nodes[leaf_index(x)].value; }

std::size_t Tree::leaf_index(std::span<const double> x) const noexcept {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return i;
}

std::size_t Tree::n_splits() const noexcept {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

std::size_t Tree::depth() const noexcept {
    if (nodes.empty()) return 0;
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    // Children are always appended after their parent.
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

nlohmann::json Tree::to_json() const {
    nlohmann::json f = nlohmann::json::array(), t = nlohmann::json::array(), l = nlohmann::json::array(),
                   r = nlohmann::json::array(), v = nlohmann::json::array();
    for (const auto& n : nodes) {
        f.push_back(n.feature);
        t.push_back(n.threshold);
        l.push_back(n.left);
        r.push_back(n.right);
        v.push_back(n.value);
    }
    return {{"feature", f}, {"threshold", t}, {"left", l}, {"right", r}, {"value", v}};
}

Tree Tree::from_json(const nlohmann::json& j) {
    auto f = j.at("feature").get<std::vector<int>>();
    auto t = j.at("threshold").get<std::vector<double>>();
    auto l = j.at("left").get<std::vector<int>>();
    auto r = j.at("right").get<std::vector<int>>();
    auto v = j.at("value").get<std::vector<double>>();
    Tree tree;
    tree.nodes.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) tree.nodes[i] = {f[i], t[i], l[i], r[i], v[i]};
    return tree;
}

double node_cost(std::span<const std::size_t> rows, std::span<const int> y, std::span<const double> c_fn,
                 std::span<const double> c_fp) noexcept {
    double pos = 0.0, neg = 0.0;
    for (auto r : rows) (y[r] == 1 ? pos : neg) += y[r] == 1 ? c_fn[r] : c_fp[r];
    return std::min(pos, neg);
}

int node_cost_label(std::span<const std::size_t> rows, std::span<const int> y, std::span<const double> c_fn,
                    std::span<const double> c_fp) noexcept {
    double pos = 0.0, neg = 0.0;
    for (auto r : rows) (y[r] == 1 ? pos : neg) += y[r] == 1 ? c_fn[r] : c_fp[r];
    // Labelling the node "default" costs the negatives' c_fp.
    return neg < pos ? 1 : 0;
}

namespace {

template <class Eval>
SplitChoice scan_splits(const Matrix& X, std::span<const std::size_t> rows, std::span<const std::size_t> features,
                        Eval&& eval) {
    SplitChoice best;
    std::vector<std::size_t> order(rows.begin(), rows.end());
    for (auto f : features) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = X(a, f), vb = X(b, f);
            return va < vb || (va == vb && a < b);
        });
        eval.reset();
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            eval.add(order[k]);
            const double lo = X(order[k], f), hi = X(order[k + 1], f);
            if (!(lo < hi)) continue;
            const double gain = eval.gain();
            if (gain > best.gain) {
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (lo + hi);
                best.gain = gain;
            }
        }
    }
    return best;
}

struct CostEval {
    std::span<const int> y;
    std::span<const double> c_fn, c_fp;
    double total_pos = 0.0, total_neg = 0.0, parent = 0.0, eps = 0.0;
    double left_pos = 0.0, left_neg = 0.0;

    void reset() { left_pos = left_neg = 0.0; }
    void add(std::size_t r) {
        if (y[r] == 1) left_pos += c_fn[r];
        else left_neg += c_fp[r];
    }
    double gain() const {
        const double left = std::min(left_pos, left_neg);
        const double right = std::min(total_pos - left_pos, total_neg - left_neg);
        const double g = parent - left - right;
        return g > eps ? g : 0.0;
    }
};

struct GiniEval {
    std::span<const int> y;
    double n = 0.0, pos = 0.0, parent = 0.0;
    double ln = 0.0, lpos = 0.0;

    static double weighted_gini(double count, double positives) {
        if (count <= 0.0) return 0.0;
        const double p = positives / count;
        return count * 2.0 * p * (1.0 - p);
    }
    void reset() { ln = lpos = 0.0; }
    void add(std::size_t r) {
        ln += 1.0;
        lpos += y[r] == 1 ? 1.0 : 0.0;
    }
    double gain() const {
        const double g = parent - weighted_gini(ln, lpos) - weighted_gini(n - ln, pos - lpos);
        return g > 1e-12 ? g : 0.0;
    }
};

}  // namespace

SplitChoice best_cost_split(const Matrix& X, std::span<const std::size_t> rows, std::span<const int> y,
                            std::span<const double> c_fn, std::span<const double> c_fp,
                            std::span<const std::size_t> features) {
    CostEval e{y, c_fn, c_fp};
    for (auto r : rows) (y[r] == 1 ? e.total_pos : e.total_neg) += y[r] == 1 ? c_fn[r] : c_fp[r];
    e.parent = std::min(e.total_pos, e.total_neg);
    e.eps = 1e-10 * std::max(1.0, e.parent);
    if (e.parent <= 0.0) return {};
    return scan_splits(X, rows, features, e);
}

SplitChoice best_gini_split(const Matrix& X, std::span<const std::size_t> rows, std::span<const int> y,
                            std::span<const std::size_t> features) {
    GiniEval e{y};
    e.n = static_cast<double>(rows.size());
    for (auto r : rows) e.pos += y[r] == 1 ? 1.0 : 0.0;
    e.parent = GiniEval::weighted_gini(e.n, e.pos);
    if (e.parent <= 0.0) return {};
    return scan_splits(X, rows, features, e);
}

}  // namespace idcs
