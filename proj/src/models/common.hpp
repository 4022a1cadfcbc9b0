#pragma once

#include "idcs/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace idcs::detail {

inline Objective make_objective(const TrainingSet& data, LossKind loss) {
    if (loss == LossKind::cross_entropy) return Objective::cross_entropy();
    if (!data.costs) throw std::invalid_argument("fit: the AEC loss needs a cost set");
    return Objective::aec(data.y, *data.costs);
}

inline double positive_rate(std::span<const int> y) {
    if (y.empty()) return 0.5;
    const auto pos = std::count(y.begin(), y.end(), 1);
    return static_cast<double>(pos) / static_cast<double>(y.size());
}

// Starting margin: training default rate for CE, the cost prior pi1 for AEC.
inline double base_margin(const TrainingSet& data, LossKind loss) {
    if (loss == LossKind::aec && data.costs && data.costs->params.pi1 > 0.0) return logit(data.costs->params.pi1);
    return logit(positive_rate(data.y));
}

inline void check_training_set(const TrainingSet& data, const char* who) {
    if (data.X.rows() == 0) throw std::invalid_argument(std::string(who) + ": empty training set");
    if (data.X.rows() != data.y.size()) throw std::invalid_argument(std::string(who) + ": X and y lengths differ");
    for (double v : data.X.data())
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": non-finite value in X");
}

}  // namespace idcs::detail
