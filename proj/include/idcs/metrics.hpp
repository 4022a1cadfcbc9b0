#pragma once

#include "idcs/costs.hpp"

#include <json.hpp>

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace idcs {

// Raised when a metric is undefined for its input (single class, zero baseline).
struct UndefinedMetricError : std::domain_error {
    using std::domain_error::domain_error;
};

// Mann-Whitney AUC: (concordant + 0.5 tied) / (pos * neg).
double auc(std::span<const int> y, std::span<const double> s);

// Sum of precision at each positive hit, in descending score order with
// ties kept in input order, divided by the number of positives.
double average_precision(std::span<const int> y, std::span<const double> s);

double brier(std::span<const int> y, std::span<const double> s);

// 1 - AEC(s) / AEC(pi1 everywhere).
double rel_aec(std::span<const int> y, std::span<const double> s, const CostSet& costs, double pi1);

// min(sum of c_fn over positives, sum of c_fp over negatives).
double baseline_cost(std::span<const int> y, const CostSet& costs);

double classification_cost(std::span<const int> y, std::span<const int> y_hat, const CostSet& costs);

double savings(std::span<const int> y, std::span<const int> y_hat, const CostSet& costs);
// 1 - model_cost / base; base must be positive.
double savings_from_cost(double model_cost, double base);

enum class SavingsThreshold { bayes, fixed_half };

const char* to_string(SavingsThreshold t) noexcept;
SavingsThreshold savings_threshold_from_string(std::string_view s);

struct FoldMetrics {
    double auc = 0.0;
    double ap = 0.0;
    double brier = 0.0;
    double rel_aec = 0.0;
    double savings = 0.0;

    nlohmann::json to_json() const;
};

// All five metrics for one scored test fold. pi1 is the cost prior used for
// the relAEC baseline.
FoldMetrics evaluate_fold(std::span<const int> y, std::span<const double> s, const CostSet& costs, double pi1,
                          SavingsThreshold threshold = SavingsThreshold::bayes);

// Scores of the null model: the prior default rate for every row.
std::vector<double> null_scores(std::size_t n, double prior);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  // sample sd; 0 for a single value
};

MeanSd mean_sd(std::span<const double> v);

struct MetricReport {
    std::string model;
    MeanSd auc, ap, brier, rel_aec, savings;
    std::vector<FoldMetrics> folds;

    static MetricReport from_folds(std::string model, std::vector<FoldMetrics> folds);
    nlohmann::json to_json() const;
};

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"auc", "ap", "brier", "rel_aec", "savings"};
    return names;
}

// Whether a larger value is better (all except Brier).
bool higher_is_better(std::string_view metric);
double metric_value(const FoldMetrics& m, std::string_view metric);
const MeanSd& metric_summary(const MetricReport& r, std::string_view metric);

// Friedman test over a table with one row per block (dataset) and one column
// per model. Ranks are 1 = best, ties averaged.
struct FriedmanResult {
    std::vector<double> avg_ranks;
    double chi2 = 0.0;
    double p = 1.0;
    std::size_t n_blocks = 0;
};

std::vector<double> rank_row(std::span<const double> values, bool higher_better);
FriedmanResult friedman_and_ranks(const std::vector<std::vector<double>>& table, bool higher_better);
// Friedman statistic from average ranks over n_blocks blocks.
FriedmanResult friedman_from_avg_ranks(std::span<const double> avg_ranks, std::size_t n_blocks);

double chi_square_sf(double x, double dof);

// Hommel step-up adjustment of a family of p-values (returned in input order).
std::vector<double> hommel_adjust(std::span<const double> p);

// Post-hoc comparisons of every model against the best-ranked one: z-test on
// average-rank differences, Hommel adjusted.
struct PosthocRow {
    std::size_t model = 0;
    double z = 0.0;
    double p = 1.0;
    double p_adjusted = 1.0;
};

std::vector<PosthocRow> posthoc_vs_best(std::span<const double> avg_ranks, std::size_t n_blocks);

}  // namespace idcs
