#include "common.hpp"

#include "idcs/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace idcs {

namespace {

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
};

double score(double g, double h, double lambda) { return g * g / (h + lambda); }

// Level-wise exact greedy tree on (gradient, hessian) pairs.
class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, const std::vector<std::vector<std::size_t>>& sorted, const BoostParams& p)
        : X_(X), sorted_(sorted), p_(p), node_of_(X.rows(), 0) {}

    Tree build(const std::vector<double>& g, const std::vector<double>& h, const std::vector<std::size_t>& features) {
        Tree tree;
        std::fill(node_of_.begin(), node_of_.end(), 0);
        NodeStats root;
        for (std::size_t i = 0; i < g.size(); ++i) {
            root.g += g[i];
            root.h += h[i];
        }
        tree.nodes.push_back({-1, 0.0, -1, -1, leaf_value(root)});
        std::vector<int> frontier{0};
        std::vector<NodeStats> stats{root};

        for (int depth = 0; depth < p_.max_depth && !frontier.empty(); ++depth) {
            const std::size_t m = tree.nodes.size();
            // Per-node search state, indexed by node id.
            std::vector<SplitChoice> best(m);
            std::vector<char> open(m, 0);
            for (int id : frontier) open[static_cast<std::size_t>(id)] = 1;
            std::vector<NodeStats> left(m);
            std::vector<double> last(m);
            std::vector<char> seen(m);

            for (auto f : features) {
                std::fill(left.begin(), left.end(), NodeStats{});
                std::fill(seen.begin(), seen.end(), 0);
                for (auto r : sorted_[f]) {
                    const auto k = static_cast<std::size_t>(node_of_[r]);
                    if (!open[k]) continue;
                    const double x = X_(r, f);
                    if (seen[k] && last[k] < x) {
                        const auto& s = stats[k];
                        const NodeStats& l = left[k];
                        const NodeStats rgt{s.g - l.g, s.h - l.h};
                        if (l.h >= p_.min_child_weight && rgt.h >= p_.min_child_weight) {
                            const double gain = 0.5 * (score(l.g, l.h, p_.lambda) + score(rgt.g, rgt.h, p_.lambda) -
                                                       score(s.g, s.h, p_.lambda)) -
                                                p_.gamma;
                            if (gain > best[k].gain) {
                                best[k].feature = static_cast<int>(f);
                                best[k].threshold = 0.5 * (last[k] + x);
                                best[k].gain = gain;
                            }
                        }
                    }
                    left[k].g += grad_[r];
                    left[k].h += hess_[r];
                    last[k] = x;
                    seen[k] = 1;
                }
            }

            std::vector<int> next;
            for (int id : frontier) {
                const auto k = static_cast<std::size_t>(id);
                if (!best[k].valid()) continue;
                const int l = static_cast<int>(tree.nodes.size());
                tree.nodes[k].feature = best[k].feature;
                tree.nodes[k].threshold = best[k].threshold;
                tree.nodes[k].left = l;
                tree.nodes[k].right = l + 1;
                tree.nodes.push_back({});
                tree.nodes.push_back({});
                stats.resize(tree.nodes.size());
                next.push_back(l);
                next.push_back(l + 1);
            }
            if (next.empty()) break;
            // Route rows and accumulate child statistics.
            for (std::size_t r = 0; r < node_of_.size(); ++r) {
                const auto& n = tree.nodes[static_cast<std::size_t>(node_of_[r])];
                if (n.is_leaf()) continue;
                const int child = X_(r, static_cast<std::size_t>(n.feature)) < n.threshold ? n.left : n.right;
                node_of_[r] = child;
                auto& s = stats[static_cast<std::size_t>(child)];
                s.g += grad_[r];
                s.h += hess_[r];
            }
            for (int id : next) tree.nodes[static_cast<std::size_t>(id)].value = leaf_value(stats[static_cast<std::size_t>(id)]);
            frontier = std::move(next);
        }
        for (auto& n : tree.nodes)
            if (!n.is_leaf()) n.value = 0.0;
        return tree;
    }

    void set_gradients(const std::vector<double>* g, const std::vector<double>* h) {
        grad_ = g->data();
        hess_ = h->data();
    }

private:
    double leaf_value(const NodeStats& s) const { return -s.g / (s.h + p_.lambda); }

    const Matrix& X_;
    const std::vector<std::vector<std::size_t>>& sorted_;
    const BoostParams& p_;
    std::vector<int> node_of_;
    const double* grad_ = nullptr;
    const double* hess_ = nullptr;
};

double mean_objective(const Objective& obj, std::span<const int> y, const std::vector<double>& margin) {
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += obj.value(i, y[i], margin[i]);
    return total / static_cast<double>(y.size());
}

}  // namespace

TrainedModel fit_boost(const TrainingSet& data, const BoostParams& params, LossKind loss, std::uint64_t seed) {
    detail::check_training_set(data, "fit_boost");
    if (params.max_depth < 1) throw std::invalid_argument("fit_boost: max_depth must be at least 1");
    if (!(params.colsample_bytree > 0.0 && params.colsample_bytree <= 1.0))
        throw std::invalid_argument("fit_boost: colsample_bytree must lie in (0, 1]");
    const auto obj = detail::make_objective(data, loss);
    const std::size_t n = data.X.rows(), d = data.X.cols();

    std::vector<std::vector<std::size_t>> sorted(d);
    for (std::size_t f = 0; f < d; ++f) {
        sorted[f].resize(n);
        std::iota(sorted[f].begin(), sorted[f].end(), std::size_t{0});
        std::stable_sort(sorted[f].begin(), sorted[f].end(),
                         [&](std::size_t a, std::size_t b) { return data.X(a, f) < data.X(b, f); });
    }

    BoostState state;
    state.base_margin = detail::base_margin(data, loss);
    state.learning_rate = params.learning_rate;

    std::vector<double> margin(n, state.base_margin), g(n), h(n), trial(n);
    double current = mean_objective(obj, data.y, margin);
    std::vector<double> curve{current};
    double best = current;
    std::size_t best_len = 0;
    int stale = 0;

    const std::size_t n_cols =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.colsample_bytree * static_cast<double>(d) + 1e-9)));
    Rng rng(derive_seed(seed, "boost"));
    std::vector<std::size_t> all_features(d);
    std::iota(all_features.begin(), all_features.end(), std::size_t{0});

    TreeBuilder builder(data.X, sorted, params);
    builder.set_gradients(&g, &h);

    for (int round = 0; round < params.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto gh = obj.grad_hess(i, data.y[i], margin[i]);
            g[i] = gh.grad;
            h[i] = loss == LossKind::aec ? floored_hessian(gh.hess) : gh.hess;
        }
        std::vector<std::size_t> features = all_features;
        if (n_cols < d) {
            std::shuffle(features.begin(), features.end(), rng);
            features.resize(n_cols);
            std::sort(features.begin(), features.end());
        }
        Tree tree = builder.build(g, h, features);
        if (tree.n_splits() == 0) break;

        // Shrink the tree when its step raises the objective; the AEC
        // curvature can be tiny near s = 0.5 and overshoot.
        double next = 0.0;
        bool improved = false;
        for (int halvings = 0; halvings < 10; ++halvings) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = margin[i] + params.learning_rate * tree.predict(data.X.row(i));
            next = mean_objective(obj, data.y, trial);
            if (std::isfinite(next) && next <= current) {
                improved = true;
                break;
            }
            for (auto& node : tree.nodes) node.value *= 0.5;
        }
        if (!improved) break;

        margin.swap(trial);
        current = next;
        state.trees.push_back(std::move(tree));
        curve.push_back(current);
        if (current < best - params.early_stopping_tolerance) {
            best = current;
            best_len = state.trees.size();
            stale = 0;
        } else if (++stale >= params.early_stopping_rounds) {
            break;
        }
    }
    // Rounds after the last meaningful improvement are dropped.
    if (stale > 0 && state.trees.size() > best_len) {
        state.trees.resize(best_len);
        curve.resize(best_len + 1);
    }

    ModelSpec spec{Family::boost, loss, params, seed};
    return TrainedModel(std::move(spec), d, std::move(state), std::move(curve));
}

}  // namespace idcs
