#include "idcs/metrics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace idcs {

std::vector<double> rank_row(std::span<const double> values, bool higher_better) {
    const std::size_t k = values.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return higher_better ? values[a] > values[b] : values[a] < values[b];
    });
    std::vector<double> ranks(k);
    for (std::size_t lo = 0; lo < k;) {
        std::size_t hi = lo;
        while (hi < k && values[order[hi]] == values[order[lo]]) ++hi;
        // Positions lo..hi-1 share the average of ranks lo+1..hi.
        const double avg = 0.5 * static_cast<double>(lo + 1 + hi);
        for (std::size_t t = lo; t < hi; ++t) ranks[order[t]] = avg;
        lo = hi;
    }
    return ranks;
}

double chi_square_sf(double x, double dof) {
    if (!(x > 0.0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

FriedmanResult friedman_from_avg_ranks(std::span<const double> avg_ranks, std::size_t n_blocks) {
    const std::size_t k = avg_ranks.size();
    if (k < 2) throw std::invalid_argument("friedman: need at least two models");
    if (n_blocks < 2) throw std::invalid_argument("friedman: need at least two datasets");
    const double kd = static_cast<double>(k), n = static_cast<double>(n_blocks);
    double sum_sq = 0.0;
    for (double r : avg_ranks) sum_sq += r * r;
    FriedmanResult out;
    out.avg_ranks.assign(avg_ranks.begin(), avg_ranks.end());
    out.n_blocks = n_blocks;
    out.chi2 = 12.0 * n / (kd * (kd + 1.0)) * (sum_sq - kd * (kd + 1.0) * (kd + 1.0) / 4.0);
    if (std::abs(out.chi2) < 1e-12) out.chi2 = 0.0;
    out.p = chi_square_sf(out.chi2, kd - 1.0);
    return out;
}

FriedmanResult friedman_and_ranks(const std::vector<std::vector<double>>& table, bool higher_better) {
    if (table.size() < 2) throw std::invalid_argument("friedman: need at least two datasets");
    const std::size_t k = table.front().size();
    std::vector<double> sums(k, 0.0);
    for (const auto& row : table) {
        if (row.size() != k) throw std::invalid_argument("friedman: ragged metric table");
        const auto r = rank_row(row, higher_better);
        for (std::size_t m = 0; m < k; ++m) sums[m] += r[m];
    }
    for (auto& s : sums) s /= static_cast<double>(table.size());
    return friedman_from_avg_ranks(sums, table.size());
}

std::vector<double> hommel_adjust(std::span<const double> p_in) {
    const std::size_t n = p_in.size();
    if (n == 0) return {};
    for (double v : p_in)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("hommel: p-values must lie in [0, 1]");
    std::vector<std::size_t> o(n);
    std::iota(o.begin(), o.end(), std::size_t{0});
    std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return p_in[a] < p_in[b]; });
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = p_in[o[i]];

    double init = 1.0;
    for (std::size_t i = 0; i < n; ++i) init = std::min(init, static_cast<double>(n) * p[i] / static_cast<double>(i + 1));
    std::vector<double> q(n, init), pa(n, init);
    for (std::size_t m = n - 1; m >= 2; --m) {
        const std::size_t n1 = n - m + 1;  // size of the first block
        double q1 = 1e300;
        for (std::size_t t = 2; t <= m; ++t) q1 = std::min(q1, static_cast<double>(m) * p[n1 + t - 2] / static_cast<double>(t));
        for (std::size_t i = 0; i < n1; ++i) q[i] = std::min(static_cast<double>(m) * p[i], q1);
        for (std::size_t i = n1; i < n; ++i) q[i] = q[n1 - 1];
        for (std::size_t i = 0; i < n; ++i) pa[i] = std::max(pa[i], q[i]);
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[o[i]] = std::min(1.0, std::max(pa[i], p[i]));
    return out;
}

std::vector<PosthocRow> posthoc_vs_best(std::span<const double> avg_ranks, std::size_t n_blocks) {
    const std::size_t k = avg_ranks.size();
    if (k < 2 || n_blocks < 1) return {};
    const auto best = static_cast<std::size_t>(std::min_element(avg_ranks.begin(), avg_ranks.end()) - avg_ranks.begin());
    const double se = std::sqrt(static_cast<double>(k) * static_cast<double>(k + 1) / (6.0 * static_cast<double>(n_blocks)));
    const boost::math::normal norm;
    std::vector<PosthocRow> rows;
    std::vector<double> ps;
    for (std::size_t m = 0; m < k; ++m) {
        if (m == best) continue;
        PosthocRow r;
        r.model = m;
        r.z = (avg_ranks[m] - avg_ranks[best]) / se;
        r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(norm, std::abs(r.z))));
        rows.push_back(r);
        ps.push_back(r.p);
    }
    const auto adj = hommel_adjust(ps);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].p_adjusted = adj[i];
    return rows;
}

}  // namespace idcs
