#include "idcs/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace idcs {

std::vector<int> rank_features(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });
    std::vector<int> ranks(values.size());
    for (std::size_t k = 0; k < order.size(); ++k) ranks[order[k]] = static_cast<int>(k + 1);
    return ranks;
}

}  // namespace idcs
