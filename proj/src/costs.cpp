#include "idcs/costs.hpp"
#include "idcs/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace idcs {

nlohmann::json CostParams::to_json() const {
    return {{"lgd", lgd}, {"pi0", pi0}, {"pi1", pi1}, {"A_bar", a_bar}, {"r_bar", r_bar}, {"C_alt", c_alt}};
}

CostParams CostParams::from_json(const nlohmann::json& j) {
    CostParams p;
    p.lgd = j.at("lgd").get<double>();
    p.pi0 = j.at("pi0").get<double>();
    p.pi1 = j.at("pi1").get<double>();
    p.a_bar = j.at("A_bar").get<double>();
    p.r_bar = j.at("r_bar").get<double>();
    p.c_alt = j.at("C_alt").get<double>();
    return p;
}

double alternative_customer_cost(double lgd, double pi1, double a_bar, double r_bar) noexcept {
    const double pi0 = 1.0 - pi1;
    return -r_bar * pi0 + a_bar * lgd * pi1;
}

CostParams make_cost_params(double lgd, double pi1, double a_bar, double r_bar) {
    if (!(lgd > 0.0 && lgd <= 1.0)) throw std::invalid_argument("cost params: LGD must lie in (0, 1]");
    if (!(pi1 >= 0.0 && pi1 <= 1.0)) throw std::invalid_argument("cost params: prior must lie in [0, 1]");
    CostParams p;
    p.lgd = lgd;
    p.pi1 = pi1;
    p.pi0 = 1.0 - pi1;
    p.a_bar = a_bar;
    p.r_bar = r_bar;
    p.c_alt = alternative_customer_cost(lgd, pi1, a_bar, r_bar);
    return p;
}

CostParams fit_cost_params(const Dataset& train, double lgd, std::optional<Priors> priors) {
    if (train.rows() == 0) throw ValidationError("cost params: empty training set");
    const double n = static_cast<double>(train.rows());
    const double a_bar = std::accumulate(train.amount.begin(), train.amount.end(), 0.0) / n;
    const double r_bar = std::accumulate(train.revenue.begin(), train.revenue.end(), 0.0) / n;
    double pi1 = train.positive_rate();
    if (priors) {
        if (std::abs(priors->pi0 + priors->pi1 - 1.0) > 1e-9)
            throw std::invalid_argument("cost params: priors must sum to one");
        pi1 = priors->pi1;
    }
    return make_cost_params(lgd, pi1, a_bar, r_bar);
}

CostSet CostSet::subset(std::span<const std::size_t> rows) const {
    CostSet out;
    out.params = params;
    out.c_fn.reserve(rows.size());
    out.c_fp.reserve(rows.size());
    for (auto r : rows) {
        out.c_fn.push_back(c_fn[r]);
        out.c_fp.push_back(c_fp[r]);
    }
    return out;
}

CostSet build_cost_set(std::span<const double> amount, std::span<const double> revenue, const CostParams& params,
                       bool floor_negative_fp) {
    if (amount.size() != revenue.size()) throw std::invalid_argument("cost set: amount/revenue length mismatch");
    CostSet cs;
    cs.params = params;
    cs.c_fn.resize(amount.size());
    cs.c_fp.resize(amount.size());
    for (std::size_t i = 0; i < amount.size(); ++i) {
        cs.c_fn[i] = amount[i] * params.lgd;
        double fp = revenue[i] + params.c_alt;
        if (fp < 0.0) {
            if (!floor_negative_fp)
                throw ValidationError("cost set: row " + std::to_string(i) + " has negative false-positive cost " +
                                      std::to_string(fp));
            fp = 0.0;
            ++cs.floored;
        }
        cs.c_fp[i] = fp;
    }
    if (cs.floored > 0) log::debug("fp_cost_floored", {{"rows", cs.floored}});
    return cs;
}

CostSet build_cost_set(const Dataset& d, const CostParams& params, bool floor_negative_fp) {
    return build_cost_set(d.amount, d.revenue, params, floor_negative_fp);
}

std::vector<RatioBucket> cost_ratio_histogram(std::span<const int> y, const CostSet& costs, std::size_t buckets) {
    if (buckets == 0) throw std::invalid_argument("cost ratio histogram: need at least one bucket");
    std::vector<double> ratios;
    std::size_t infinite = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 1) continue;
        if (costs.c_fp[i] <= 0.0) ++infinite;
        else ratios.push_back(costs.c_fn[i] / costs.c_fp[i]);
    }
    const double total = static_cast<double>(ratios.size() + infinite);
    const double hi = ratios.empty() ? 1.0 : *std::max_element(ratios.begin(), ratios.end());
    const double width = hi > 0.0 ? hi / static_cast<double>(buckets) : 1.0;

    std::vector<RatioBucket> out(buckets);
    for (std::size_t b = 0; b < buckets; ++b) {
        out[b].lower = width * static_cast<double>(b);
        out[b].upper = width * static_cast<double>(b + 1);
    }
    for (double r : ratios) {
        auto b = static_cast<std::size_t>(r / width);
        ++out[std::min(b, buckets - 1)].count;
    }
    out.push_back({hi, std::numeric_limits<double>::infinity(), infinite, 0.0});
    for (auto& b : out) b.frequency = total > 0.0 ? static_cast<double>(b.count) / total : 0.0;
    return out;
}

}  // namespace idcs
