#pragma once

#include "idcs/matrix.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace idcs {

// Binary decision tree; a row goes left when x[feature] < threshold.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const noexcept;
    std::size_t leaf_index(std::span<const double> x) const noexcept;
    std::size_t n_splits() const noexcept;
    std::size_t depth() const noexcept;

    nlohmann::json to_json() const;
    static Tree from_json(const nlohmann::json& j);
};

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;

    bool valid() const noexcept { return feature >= 0; }
};

// Cost of labelling every row of a node with one class:
// min(sum of c_fn over positives, sum of c_fp over negatives).
double node_cost(std::span<const std::size_t> rows, std::span<const int> y, std::span<const double> c_fn,
                 std::span<const double> c_fp) noexcept;

// Cost-minimizing node label; ties go to 0.
int node_cost_label(std::span<const std::size_t> rows, std::span<const int> y, std::span<const double> c_fn,
                    std::span<const double> c_fp) noexcept;

// Best split of `rows` over the candidate features by decrease in total
// cost (parent cost minus children costs). Only splits with strictly
// positive decrease qualify. Thresholds are midpoints between consecutive
// distinct values; ties go to the lower feature index, then lower threshold.
SplitChoice best_cost_split(const Matrix& X, std::span<const std::size_t> rows, std::span<const int> y,
                            std::span<const double> c_fn, std::span<const double> c_fp,
                            std::span<const std::size_t> features);

// Same search using the decrease in weighted Gini impurity.
SplitChoice best_gini_split(const Matrix& X, std::span<const std::size_t> rows, std::span<const int> y,
                            std::span<const std::size_t> features);

}  // namespace idcs
