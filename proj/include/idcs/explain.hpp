#pragma once

#include "idcs/data.hpp"
#include "idcs/matrix.hpp"
#include "idcs/models.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace idcs {

// Batched scoring function: fills out[r] with the score of row r.
using ScoreFn = std::function<void(const Matrix& X, std::span<double> out)>;

ScoreFn score_fn(const TrainedModel& model);

// Players of the attribution game. Each original feature owns a group of
// encoded columns (one-hot block, or value + missing indicator), so
// attributions are reported per original feature.
struct FeatureGroups {
    std::vector<std::string> names;
    std::vector<std::vector<std::size_t>> columns;

    std::size_t size() const noexcept { return columns.size(); }
    std::size_t n_columns() const noexcept;

    static FeatureGroups from_dataset(const Dataset& d);
    static FeatureGroups singletons(std::size_t n_columns);
};

enum class Method { shap, lime };

const char* to_string(Method m) noexcept;
Method method_from_string(std::string_view s);

struct Explanation {
    std::size_t instance = 0;
    Method method = Method::shap;
    std::vector<double> values;  // one per feature group
    double base_value = 0.0;     // shap only
    double local_r2 = 0.0;       // lime only
    bool exact = false;          // shap: all permutations enumerated

    nlohmann::json to_json(const FeatureGroups* groups = nullptr) const;
};

struct ShapConfig {
    std::size_t background_size = 100;
    std::size_t n_permutations = 10;  // forward + reverse pairs when sampling
    std::size_t exhaustive_max_features = 6;
    bool force_exhaustive = false;
};

struct LimeConfig {
    std::size_t n_samples = 5000;
    double kernel_width = 0.0;  // 0 = 0.75 * sqrt(number of features)
    double ridge = 1.0;
};

struct ExplainerConfig {
    ShapConfig shap;
    LimeConfig lime;

    nlohmann::json to_json() const;
    static ExplainerConfig from_json(const nlohmann::json& j);
};

// Uniform sample of training rows (without replacement) used as the SHAP
// background. Returns all rows when the training set is smaller.
Matrix sample_background(const Matrix& train, std::size_t size, std::uint64_t seed);

// Permutation SHAP on probabilities. With at most exhaustive_max_features
// groups (or force_exhaustive) every ordering is enumerated once and the
// result is the exact Shapley value of v(S) = E_b[f(x_S, b_rest)];
// otherwise n_permutations random orderings are each walked forward and
// in reverse.
Explanation shap_permutation(const ScoreFn& f, const Matrix& background, std::span<const double> x,
                             const FeatureGroups& groups, const ShapConfig& cfg, std::uint64_t seed);

// Exact Shapley values by enumerating all 2^P coalitions (test oracle and
// --exact path for small P).
std::vector<double> shapley_brute_force(const ScoreFn& f, const Matrix& background, std::span<const double> x,
                                        const FeatureGroups& groups);

// Training-set statistics that drive LIME's perturbations.
struct TrainSummary {
    struct Group {
        FeatureKind kind = FeatureKind::numeric;
        std::size_t value_column = 0;  // numeric
        double mean = 0.0;
        double sd = 1.0;
        std::vector<double> level_freq;  // categorical, one per column in the group
    };
    FeatureGroups groups;
    std::vector<Group> stats;

    static TrainSummary fit(const Dataset& train);
    // Plain numeric columns; used for synthetic data.
    static TrainSummary fit(const Matrix& train);
};

// Weighted ridge regression with an unpenalized intercept.
struct RidgeFit {
    std::vector<double> coef;
    double intercept = 0.0;
    double r2 = 0.0;
    double alpha = 0.0;  // strength actually used
};

RidgeFit weighted_ridge(const Matrix& Z, std::span<const double> target, std::span<const double> weights, double alpha);

struct LimeSample {
    Matrix inputs;   // perturbed rows in model space
    Matrix design;   // interpretable representation, one column per group
    std::vector<double> distance;
};

LimeSample lime_sample(const TrainSummary& summary, std::span<const double> x, std::size_t n_samples,
                       std::uint64_t seed);

// Surrogate fit on a given sample; kernel_width <= 0 selects the default and
// an infinite width gives unit weights.
Explanation lime_fit_surrogate(const LimeSample& sample, std::span<const double> scores, const LimeConfig& cfg);

Explanation lime_explain(const ScoreFn& f, const TrainSummary& summary, std::span<const double> x,
                         const LimeConfig& cfg, std::uint64_t seed);

// Rank 1 = largest |value|; ties go to the lower feature index.
std::vector<int> rank_features(std::span<const double> values);
inline std::vector<int> rank_features(const Explanation& e) { return rank_features(e.values); }

}  // namespace idcs
