#pragma once

#include "idcs/data.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <vector>

namespace idcs {

inline constexpr double kDefaultLgd = 0.75;

// Global cost parameters, fitted on training rows only.
struct CostParams {
    double lgd = kDefaultLgd;
    double pi0 = 0.0;    // prior non-default rate
    double pi1 = 0.0;    // prior default rate
    double a_bar = 0.0;  // mean loan amount
    double r_bar = 0.0;  // mean lost revenue
    double c_alt = 0.0;  // expected cost of the average alternative customer

    nlohmann::json to_json() const;
    static CostParams from_json(const nlohmann::json& j);
};

struct Priors {
    double pi0 = 0.0;
    double pi1 = 0.0;
};

// C_alt = -r_bar * pi0 + a_bar * lgd * pi1.
double alternative_customer_cost(double lgd, double pi1, double a_bar, double r_bar) noexcept;

CostParams make_cost_params(double lgd, double pi1, double a_bar, double r_bar);

// Priors default to the empirical training rates; the stability experiment
// passes the original dataset rates so C_alt does not move with resampling.
CostParams fit_cost_params(const Dataset& train, double lgd = kDefaultLgd, std::optional<Priors> priors = std::nullopt);

// Per-row misclassification costs; correct classifications cost nothing.
struct CostSet {
    std::vector<double> c_fn;  // C_i(0|1) = A_i * LGD
    std::vector<double> c_fp;  // C_i(1|0) = r_i + C_alt, floored at zero
    CostParams params;
    std::size_t floored = 0;

    std::size_t size() const noexcept { return c_fn.size(); }
    CostSet subset(std::span<const std::size_t> rows) const;
};

CostSet build_cost_set(const Dataset& d, const CostParams& params, bool floor_negative_fp = true);
CostSet build_cost_set(std::span<const double> amount, std::span<const double> revenue, const CostParams& params,
                       bool floor_negative_fp = true);

struct RatioBucket {
    double lower = 0.0;
    double upper = 0.0;  // +inf for the c_fp = 0 bucket
    std::size_t count = 0;
    double frequency = 0.0;
};

// FN/FP cost ratio distribution over actual defaulters, equal-width buckets
// on [0, max finite ratio] plus a +inf bucket for rows with c_fp = 0.
std::vector<RatioBucket> cost_ratio_histogram(std::span<const int> y, const CostSet& costs, std::size_t buckets = 20);

}  // namespace idcs
