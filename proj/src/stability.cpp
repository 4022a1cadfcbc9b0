#include "idcs/stability.hpp"
#include "idcs/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace idcs {

const char* to_string(CovMode m) noexcept { return m == CovMode::abs_mean ? "abs_mean" : "absolute"; }

CovMode cov_mode_from_string(std::string_view s) {
    if (s == "abs_mean") return CovMode::abs_mean;
    if (s == "absolute") return CovMode::absolute;
    throw std::invalid_argument("unknown CoV mode '" + std::string(s) + "'");
}

std::optional<double> cov_instance(const Matrix& values, CovMode mode) {
    const std::size_t J = values.rows(), P = values.cols();
    if (J < 2) throw std::invalid_argument("cov_instance: need at least two iterations");
    double total = 0.0;
    std::size_t included = 0;
    for (std::size_t p = 0; p < P; ++p) {
        double mean_abs = 0.0, mean = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const double v = mode == CovMode::absolute ? std::abs(values(j, p)) : values(j, p);
            mean_abs += std::abs(v);
            mean += v;
        }
        mean_abs /= static_cast<double>(J);
        mean /= static_cast<double>(J);
        if (mean_abs < kCovMeanGuard) continue;
        double ss = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const double v = mode == CovMode::absolute ? std::abs(values(j, p)) : values(j, p);
            ss += (v - mean) * (v - mean);
        }
        total += std::sqrt(ss / static_cast<double>(J - 1)) / mean_abs;
        ++included;
    }
    if (included == 0) return std::nullopt;
    return total / static_cast<double>(included);
}

double rank_agreement(std::span<const int> ranks) {
    if (ranks.size() < 2) throw std::invalid_argument("rank_agreement: need at least two lists");
    double mean = 0.0;
    for (int r : ranks) mean += r;
    mean /= static_cast<double>(ranks.size());
    double ss = 0.0;
    for (int r : ranks) ss += (r - mean) * (r - mean);
    return ss / static_cast<double>(ranks.size() - 1);
}

double sra(const std::vector<std::vector<int>>& rank_lists, std::size_t depth) {
    const std::size_t L = rank_lists.size();
    if (L < 2) throw std::invalid_argument("sra: need at least two rank lists");
    const std::size_t P = rank_lists.front().size();
    if (depth < 1 || depth > P) throw std::invalid_argument("sra: depth must lie in [1, P]");
    std::vector<int> ranks(L);
    double total = 0.0;
    std::size_t members = 0;
    for (std::size_t p = 0; p < P; ++p) {
        bool in_set = false;
        for (std::size_t l = 0; l < L; ++l) {
            if (rank_lists[l].size() != P) throw std::invalid_argument("sra: rank lists differ in length");
            ranks[l] = rank_lists[l][p];
            in_set = in_set || ranks[l] <= static_cast<int>(depth);
        }
        if (!in_set) continue;
        total += rank_agreement(ranks);
        ++members;
    }
    return members ? total / static_cast<double>(members) : 0.0;
}

double sra_from_values(const Matrix& values, std::size_t depth) {
    std::vector<std::vector<int>> lists;
    lists.reserve(values.rows());
    for (std::size_t j = 0; j < values.rows(); ++j) lists.push_back(rank_features(values.row(j)));
    return sra(lists, depth);
}

const char* to_string(KsAlternative a) noexcept {
    switch (a) {
        case KsAlternative::two_sided: return "two_sided";
        case KsAlternative::first_larger: return "first_larger";
        case KsAlternative::first_smaller: return "first_smaller";
    }
    return "?";
}

KsAlternative ks_alternative_from_string(std::string_view s) {
    if (s == "two_sided") return KsAlternative::two_sided;
    if (s == "first_larger") return KsAlternative::first_larger;
    if (s == "first_smaller") return KsAlternative::first_smaller;
    throw std::invalid_argument("unknown KS alternative '" + std::string(s) + "'");
}

double kolmogorov_sf(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 0.2) return 1.0;  // the series converges too slowly; Q is 1 to double precision here
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * t * t);
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum)) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

struct KsCounts {
    // Largest scaled ECDF gaps, in units of 1 / (n m).
    std::int64_t plus = 0;   // max (i m - j n): F_a above F_b
    std::int64_t minus = 0;  // max (j n - i m): F_b above F_a
};

KsCounts ks_counts(std::span<const double> a, std::span<const double> b) {
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const auto n = static_cast<std::int64_t>(sa.size()), m = static_cast<std::int64_t>(sb.size());
    KsCounts k;
    std::size_t i = 0, j = 0;
    while (i < sa.size() || j < sb.size()) {
        double v;
        if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) v = sa[i];
        else v = sb[j];
        while (i < sa.size() && sa[i] == v) ++i;
        while (j < sb.size() && sb[j] == v) ++j;
        const std::int64_t d = static_cast<std::int64_t>(i) * m - static_cast<std::int64_t>(j) * n;
        k.plus = std::max(k.plus, d);
        k.minus = std::max(k.minus, -d);
    }
    return k;
}

// P(statistic >= K / (n m)) under H0 for a uniformly random merge of the two
// samples, by counting lattice paths that stay strictly inside the band.
double exact_sf(std::int64_t n, std::int64_t m, std::int64_t K, KsAlternative alt) {
    if (K <= 0) return 1.0;
    auto inside = [&](std::int64_t i, std::int64_t j) {
        const std::int64_t d = i * m - j * n;
        switch (alt) {
            case KsAlternative::two_sided: return std::abs(d) < K;
            case KsAlternative::first_smaller: return d < K;
            case KsAlternative::first_larger: return -d < K;
        }
        return false;
    };
    // g[j] holds the probability that a random path reaches (i, j) inside the band.
    std::vector<double> g(static_cast<std::size_t>(m + 1), 0.0);
    g[0] = 1.0;
    for (std::int64_t j = 1; j <= m; ++j) g[static_cast<std::size_t>(j)] = inside(0, j) ? g[static_cast<std::size_t>(j - 1)] : 0.0;
    for (std::int64_t i = 1; i <= n; ++i) {
        g[0] = inside(i, 0) ? g[0] : 0.0;
        for (std::int64_t j = 1; j <= m; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            if (!inside(i, j)) {
                g[ju] = 0.0;
                continue;
            }
            const double total = static_cast<double>(i + j);
            g[ju] = g[ju] * static_cast<double>(i) / total + g[ju - 1] * static_cast<double>(j) / total;
        }
    }
    return std::clamp(1.0 - g[static_cast<std::size_t>(m)], 0.0, 1.0);
}

void check_samples(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: both samples must be nonempty");
}

std::int64_t pick_statistic(const KsCounts& c, KsAlternative alt) {
    switch (alt) {
        case KsAlternative::two_sided: return std::max(c.plus, c.minus);
        case KsAlternative::first_smaller: return c.plus;
        case KsAlternative::first_larger: return c.minus;
    }
    return 0;
}

}  // namespace

KsResult ks_two_sample_asymptotic(std::span<const double> a, std::span<const double> b, KsAlternative alternative) {
    check_samples(a, b);
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    const auto c = ks_counts(a, b);
    KsResult r;
    r.statistic = static_cast<double>(pick_statistic(c, alternative)) / (n * m);
    const double en = std::sqrt(n * m / (n + m));
    if (alternative == KsAlternative::two_sided)
        r.p = kolmogorov_sf((en + 0.12 + 0.11 / en) * r.statistic);
    else
        r.p = std::min(1.0, std::exp(-2.0 * en * en * r.statistic * r.statistic));
    return r;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, KsAlternative alternative) {
    check_samples(a, b);
    if (a.size() * b.size() > kKsExactLimit) return ks_two_sample_asymptotic(a, b, alternative);
    const auto n = static_cast<std::int64_t>(a.size()), m = static_cast<std::int64_t>(b.size());
    const auto c = ks_counts(a, b);
    const auto K = pick_statistic(c, alternative);
    KsResult r;
    r.statistic = static_cast<double>(K) / static_cast<double>(n * m);
    r.p = exact_sf(n, m, K, alternative);
    r.exact = true;
    return r;
}

std::vector<InstanceStability> compute_stability(const ImportanceTensor& t, std::size_t depth, CovMode mode) {
    std::vector<InstanceStability> out;
    const std::size_t d = std::min(depth, t.n_features());
    for (std::size_t pi = 0; pi < t.pis.size(); ++pi) {
        const bool enough = t.effective_iterations(pi) >= 2;
        for (std::size_t i = 0; i < t.n_instances; ++i) {
            InstanceStability s{pi, i, std::nullopt, std::nullopt};
            if (enough && d >= 1) {
                const Matrix m = t.instance_matrix(pi, i);
                s.cov = cov_instance(m, mode);
                s.sra = sra_from_values(m, d);
            }
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace idcs
