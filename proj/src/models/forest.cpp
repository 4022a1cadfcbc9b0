#include "common.hpp"

#include "idcs/random.hpp"

#include <algorithm>
#include <cmath>

namespace idcs {

namespace {

struct ForestContext {
    const Matrix& X;
    std::span<const int> y;
    std::span<const double> c_fn;
    std::span<const double> c_fp;
    LossKind loss;
    int max_depth;
    int min_samples_split;
    std::size_t n_features;
};

double leaf_value(const ForestContext& ctx, std::span<const std::size_t> rows) {
    if (ctx.loss == LossKind::aec) return static_cast<double>(node_cost_label(rows, ctx.y, ctx.c_fn, ctx.c_fp));
    double pos = 0.0;
    for (auto r : rows) pos += ctx.y[r] == 1 ? 1.0 : 0.0;
    return rows.empty() ? 0.0 : pos / static_cast<double>(rows.size());
}

Tree grow_tree(const ForestContext& ctx, std::vector<std::size_t> bootstrap, Rng& rng) {
    Tree tree;
    struct Pending {
        int node;
        int depth;
        std::vector<std::size_t> rows;
    };
    std::vector<Pending> stack;
    tree.nodes.push_back({});
    stack.push_back({0, 0, std::move(bootstrap)});

    const std::size_t d = ctx.X.cols();
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), std::size_t{0});

    while (!stack.empty()) {
        Pending job = std::move(stack.back());
        stack.pop_back();
        auto& node = tree.nodes[static_cast<std::size_t>(job.node)];
        node.value = leaf_value(ctx, job.rows);

        if (job.depth >= ctx.max_depth || job.rows.size() < static_cast<std::size_t>(ctx.min_samples_split)) continue;

        // Feature subsample drawn per split; sorted so ties favour lower indices.
        std::vector<std::size_t> features = all;
        if (ctx.n_features < d) {
            std::shuffle(features.begin(), features.end(), rng);
            features.resize(ctx.n_features);
            std::sort(features.begin(), features.end());
        }
        const SplitChoice split = ctx.loss == LossKind::aec
                                      ? best_cost_split(ctx.X, job.rows, ctx.y, ctx.c_fn, ctx.c_fp, features)
                                      : best_gini_split(ctx.X, job.rows, ctx.y, features);
        if (!split.valid()) continue;

        std::vector<std::size_t> left, right;
        for (auto r : job.rows)
            (ctx.X(r, static_cast<std::size_t>(split.feature)) < split.threshold ? left : right).push_back(r);
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes[static_cast<std::size_t>(job.node)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(job.node)].threshold = split.threshold;
        tree.nodes[static_cast<std::size_t>(job.node)].left = l;
        tree.nodes[static_cast<std::size_t>(job.node)].right = l + 1;
        tree.nodes[static_cast<std::size_t>(job.node)].value = 0.0;
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        stack.push_back({l + 1, job.depth + 1, std::move(right)});
        stack.push_back({l, job.depth + 1, std::move(left)});
    }
    return tree;
}

}  // namespace

TrainedModel fit_forest(const TrainingSet& data, const ForestParams& params, LossKind loss, std::uint64_t seed) {
    detail::check_training_set(data, "fit_forest");
    if (params.n_estimators < 1) throw std::invalid_argument("fit_forest: n_estimators must be positive");
    if (loss == LossKind::aec && !data.costs) throw std::invalid_argument("fit_forest: cost-based splitting needs costs");

    const std::size_t n = data.X.rows(), d = data.X.cols();
    std::size_t n_features = params.max_features > 0
                                 ? static_cast<std::size_t>(params.max_features)
                                 : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d))));
    n_features = std::clamp<std::size_t>(n_features, 1, std::max<std::size_t>(d, 1));

    std::span<const double> c_fn, c_fp;
    if (data.costs) {
        c_fn = data.costs->c_fn;
        c_fp = data.costs->c_fp;
    }
    const ForestContext ctx{data.X,
                            data.y,
                            c_fn,
                            c_fp,
                            loss,
                            params.max_depth > 0 ? std::min(params.max_depth, kUnlimitedDepthCap) : kUnlimitedDepthCap,
                            std::max(params.min_samples_split, 2),
                            n_features};

    ForestState state;
    state.trees.reserve(static_cast<std::size_t>(params.n_estimators));
    for (int t = 0; t < params.n_estimators; ++t) {
        Rng rng(derive_seed(seed, "forest", {static_cast<std::uint64_t>(t)}));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> bootstrap(n);
        for (auto& r : bootstrap) r = pick(rng);
        std::sort(bootstrap.begin(), bootstrap.end());
        state.trees.push_back(grow_tree(ctx, std::move(bootstrap), rng));
    }

    ModelSpec spec{Family::forest, loss, params, seed};
    return TrainedModel(std::move(spec), d, std::move(state));
}

}  // namespace idcs
