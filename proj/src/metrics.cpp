#include "idcs/metrics.hpp"
#include "idcs/losses.hpp"
#include "idcs/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace idcs {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* who) {
    if (a != b) throw std::invalid_argument(std::string(who) + ": length mismatch");
}

}  // namespace

double auc(std::span<const int> y, std::span<const double> s) {
    check_lengths(y.size(), s.size(), "auc");
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });

    // Integer pair counts keep the result exact.
    std::uint64_t concordant = 0, tied = 0, neg_below = 0, n_pos = 0, n_neg = 0;
    for (std::size_t lo = 0; lo < order.size();) {
        std::size_t hi = lo;
        std::uint64_t gp = 0, gn = 0;
        while (hi < order.size() && s[order[hi]] == s[order[lo]]) {
            (y[order[hi]] == 1 ? gp : gn) += 1;
            ++hi;
        }
        concordant += gp * neg_below;
        tied += gp * gn;
        neg_below += gn;
        n_pos += gp;
        n_neg += gn;
        lo = hi;
    }
    if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("auc: both classes must be present");
    return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(std::span<const int> y, std::span<const double> s) {
    check_lengths(y.size(), s.size(), "average_precision");
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    double total = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (y[order[k]] != 1) continue;
        ++hits;
        total += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    if (hits == 0) throw UndefinedMetricError("average_precision: no positives");
    return total / static_cast<double>(hits);
}

double brier(std::span<const int> y, std::span<const double> s) {
    check_lengths(y.size(), s.size(), "brier");
    if (y.empty()) throw UndefinedMetricError("brier: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = s[i] - static_cast<double>(y[i]);
        total += e * e;
    }
    return total / static_cast<double>(y.size());
}

double rel_aec(std::span<const int> y, std::span<const double> s, const CostSet& costs, double pi1) {
    const double model = mean_aec(y, s, costs);
    const std::vector<double> base_scores(y.size(), pi1);
    const double base = mean_aec(y, base_scores, costs);
    if (!(base > 0.0)) throw UndefinedMetricError("rel_aec: baseline AEC is zero");
    return 1.0 - model / base;
}

double baseline_cost(std::span<const int> y, const CostSet& costs) {
    check_lengths(y.size(), costs.size(), "baseline_cost");
    double all_negative = 0.0, all_positive = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1) all_negative += costs.c_fn[i];
        else all_positive += costs.c_fp[i];
    }
    return std::min(all_negative, all_positive);
}

double classification_cost(std::span<const int> y, std::span<const int> y_hat, const CostSet& costs) {
    check_lengths(y.size(), y_hat.size(), "classification_cost");
    check_lengths(y.size(), costs.size(), "classification_cost");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1 && y_hat[i] == 0) total += costs.c_fn[i];
        else if (y[i] == 0 && y_hat[i] == 1) total += costs.c_fp[i];
    }
    return total;
}

double savings_from_cost(double model_cost, double base) {
    if (!(base > 0.0)) throw UndefinedMetricError("savings: baseline cost is zero");
    return 1.0 - model_cost / base;
}

double savings(std::span<const int> y, std::span<const int> y_hat, const CostSet& costs) {
    return savings_from_cost(classification_cost(y, y_hat, costs), baseline_cost(y, costs));
}

const char* to_string(SavingsThreshold t) noexcept { return t == SavingsThreshold::bayes ? "bayes" : "fixed_0.5"; }

SavingsThreshold savings_threshold_from_string(std::string_view s) {
    if (s == "bayes") return SavingsThreshold::bayes;
    if (s == "fixed_0.5" || s == "fixed" || s == "0.5") return SavingsThreshold::fixed_half;
    throw std::invalid_argument("unknown savings threshold '" + std::string(s) + "'");
}

nlohmann::json FoldMetrics::to_json() const {
    return {{"auc", auc}, {"ap", ap}, {"brier", brier}, {"rel_aec", rel_aec}, {"savings", savings}};
}

FoldMetrics evaluate_fold(std::span<const int> y, std::span<const double> s, const CostSet& costs, double pi1,
                          SavingsThreshold threshold) {
    FoldMetrics m;
    m.auc = auc(y, s);
    m.ap = average_precision(y, s);
    m.brier = brier(y, s);
    m.rel_aec = rel_aec(y, s, costs, pi1);
    const auto y_hat = threshold == SavingsThreshold::bayes ? bayes_classify(s, costs) : threshold_classify(s, 0.5);
    m.savings = savings(y, y_hat, costs);
    return m;
}

std::vector<double> null_scores(std::size_t n, double prior) { return std::vector<double>(n, prior); }

MeanSd mean_sd(std::span<const double> v) {
    MeanSd out;
    if (v.empty()) return out;
    out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

MetricReport MetricReport::from_folds(std::string model, std::vector<FoldMetrics> folds) {
    MetricReport r;
    r.model = std::move(model);
    auto summarize = [&](double FoldMetrics::*field) {
        std::vector<double> v;
        for (const auto& f : folds) v.push_back(f.*field);
        return mean_sd(v);
    };
    r.auc = summarize(&FoldMetrics::auc);
    r.ap = summarize(&FoldMetrics::ap);
    r.brier = summarize(&FoldMetrics::brier);
    r.rel_aec = summarize(&FoldMetrics::rel_aec);
    r.savings = summarize(&FoldMetrics::savings);
    r.folds = std::move(folds);
    return r;
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j{{"model", model}};
    for (const auto& name : metric_names()) {
        const auto& ms = metric_summary(*this, name);
        j[name] = {{"mean", ms.mean}, {"sd", ms.sd}};
    }
    auto folds_json = nlohmann::json::array();
    for (const auto& f : folds) folds_json.push_back(f.to_json());
    j["folds"] = std::move(folds_json);
    return j;
}

bool higher_is_better(std::string_view metric) { return metric != "brier"; }

double metric_value(const FoldMetrics& m, std::string_view metric) {
    if (metric == "auc") return m.auc;
    if (metric == "ap") return m.ap;
    if (metric == "brier") return m.brier;
    if (metric == "rel_aec") return m.rel_aec;
    if (metric == "savings") return m.savings;
    throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
}

const MeanSd& metric_summary(const MetricReport& r, std::string_view metric) {
    if (metric == "auc") return r.auc;
    if (metric == "ap") return r.ap;
    if (metric == "brier") return r.brier;
    if (metric == "rel_aec") return r.rel_aec;
    if (metric == "savings") return r.savings;
    throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
}

}  // namespace idcs
