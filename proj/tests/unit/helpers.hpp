#pragma once

#include "idcs/costs.hpp"
#include "idcs/data.hpp"
#include "idcs/random.hpp"

#include <cmath>
#include <random>
#include <string>

namespace testing {

// Numeric-only dataset with a logistic signal in the first columns and
// lognormal loan amounts.
inline idcs::Dataset synthetic(std::size_t n, std::size_t d, std::uint64_t seed, double signal = 1.5,
                               double intercept = -1.0) {
    idcs::Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::lognormal_distribution<double> amount(8.0, 0.6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    idcs::Dataset ds;
    ds.X = idcs::Matrix(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        ds.column_names.push_back("x" + std::to_string(j));
        idcs::FeatureBlock b;
        b.name = ds.column_names.back();
        b.columns = {j};
        ds.blocks.push_back(b);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double m = intercept;
        for (std::size_t j = 0; j < d; ++j) {
            ds.X(i, j) = z(rng);
            if (j < 3) m += signal * ds.X(i, j) / static_cast<double>(j + 1);
        }
        ds.y.push_back(u(rng) < 1.0 / (1.0 + std::exp(-m)) ? 1 : 0);
        ds.amount.push_back(amount(rng));
        ds.revenue.push_back(0.2644 * ds.amount.back());
    }
    return ds;
}

inline idcs::CostSet costs_for(const idcs::Dataset& d) {
    return idcs::build_cost_set(d, idcs::fit_cost_params(d));
}

inline std::string source_path(const std::string& rel) { return std::string(IDCS_SOURCE_DIR) + "/" + rel; }

}  // namespace testing
