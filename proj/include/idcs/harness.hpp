#pragma once

#include "idcs/costs.hpp"
#include "idcs/data.hpp"
#include "idcs/explain.hpp"
#include "idcs/metrics.hpp"
#include "idcs/models.hpp"
#include "idcs/stability.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace idcs {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Candidate hyperparameter lists per family. Fixed values (boost and net
// learning rates) come from the family defaults and are not searched.
struct GridSpec {
    std::vector<Penalty> logit_penalty{Penalty::l1, Penalty::l2};
    std::vector<double> logit_c{0.0, 1e-4, 3e-4, 6e-4, 1e-3, 3e-3, 6e-3, 1e-2, 3e-2, 1e-1};
    std::vector<double> boost_min_child_weight{0.0, 50.0};
    std::vector<int> boost_max_depth{1, 3, 5, 7};
    std::vector<double> boost_colsample{0.8, 1.0};
    std::vector<double> boost_gamma{0.0, 5.0, 10.0};
    std::vector<int> forest_max_depth{0, 3, 5, 10};  // 0 = unlimited
    std::vector<int> forest_n_estimators{20, 50, 100};
    std::vector<int> net_hidden{32, 64, 128};

    // Grid points in deterministic nested-loop order (first key outermost).
    std::vector<Hyperparams> points(Family f) const;

    nlohmann::json to_json() const;
    static GridSpec from_json(const nlohmann::json& j);
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::filesystem::path dataset;
    Schema schema;
    std::vector<std::string> models = all_model_names();
    std::uint64_t seed = 42;
    std::size_t workers = 0;  // 0 = hardware concurrency

    std::size_t outer_folds = 5;
    std::size_t inner_folds = 5;

    double lgd = kDefaultLgd;
    SavingsThreshold savings_threshold = SavingsThreshold::bayes;

    std::vector<double> pis{0.01, 0.03, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
    std::size_t iterations = 25;
    std::size_t n_test = 300;
    std::size_t sra_depth = 10;
    CovMode cov_mode = CovMode::abs_mean;
    std::vector<Method> methods{Method::shap, Method::lime};
    bool fill_majority = true;

    ExplainerConfig explainer;
    GridSpec grid;

    nlohmann::json to_json() const;
    // base_dir resolves relative dataset and schema paths.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    void validate() const;
};

// Defaults merged with the file, then dotted-path overrides ("a.b=value";
// value parsed as JSON, else taken as a string). Unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
nlohmann::json apply_overrides(nlohmann::json tree, const std::vector<std::string>& overrides);

// Runs fn(0..n-1) on up to `workers` threads. Exceptions propagate after all
// tasks finish (the first one by index is rethrown).
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);
std::size_t resolve_workers(std::size_t requested);

struct LoadedData {
    RawDataset raw;
    Dataset encoded;
};

LoadedData load_dataset(const ExperimentConfig& cfg);

// ---- grid search -------------------------------------------------------

struct GridResult {
    std::size_t best = 0;
    Hyperparams best_params;
    std::vector<double> scores;  // mean inner-CV selection metric; NaN for failed points
    std::size_t fits = 0;
};

// Inner stratified k-fold CV over the grid on already-preprocessed data.
// Selection metric: AUC for cross-entropy models, relAEC for AEC models.
GridResult grid_search(Family family, LossKind loss, const Dataset& train, const CostSet& costs,
                       const std::vector<Hyperparams>& grid, std::size_t k, std::uint64_t seed);

std::uint64_t model_index(const std::string& name);

// ---- performance benchmark ---------------------------------------------

struct FoldRecord {
    std::size_t fold = 0;
    std::string model;
    std::optional<FoldMetrics> metrics;  // empty when the fit failed
    nlohmann::json hyperparams;
    std::string error;
    // Fold 0 only: fitted model, preprocessor and row indices, for `explain`.
    nlohmann::json bundle;
};

struct BenchResult {
    std::string dataset;
    std::vector<std::string> models;  // in config order
    std::vector<FoldRecord> records;  // fold-major
    std::vector<MetricReport> reports;  // one per model with at least one successful fold
    MetricReport null_report;
    std::vector<std::string> failures;
    nlohmann::json manifest;

    const MetricReport* report(const std::string& model) const;
};

BenchResult run_performance_bench(const ExperimentConfig& cfg, const Dataset& data);

// ---- stability experiment ----------------------------------------------

struct StabilityRow {
    std::string model;
    std::string method;
    double pi = 0.0;
    std::size_t instance = 0;
    std::optional<double> cov;
    std::optional<double> sra;
};

struct KsRow {
    std::string metric;  // "cov" or "sra"
    std::string method;
    double pi = 0.0;
    std::string model_a;
    std::string model_b;
    KsAlternative alternative = KsAlternative::two_sided;
    KsResult result;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
};

struct StabilityResult {
    std::string dataset;
    std::vector<ImportanceTensor> tensors;  // one per (model, method)
    std::vector<StabilityRow> rows;
    std::vector<KsRow> ks;
    std::vector<std::string> failures;
    std::vector<std::string> skipped;  // infeasible (model, pi) cells
    nlohmann::json hyperparams;        // model -> pi -> theta*
    nlohmann::json manifest;
};

struct StabilityOptions {
    std::filesystem::path checkpoint_dir;  // empty = no checkpoints
    bool resume = false;
};

StabilityResult run_stability_experiment(const ExperimentConfig& cfg, const Dataset& data,
                                         const StabilityOptions& opts = {});

// CoV/SRA rows and KS comparisons from finished tensors.
void summarize_stability(const ExperimentConfig& cfg, StabilityResult& result);

// ---- reports -----------------------------------------------------------

// Shortest round-trip decimal; empty for NaN (gap marker).
std::string format_double(double v);

void write_performance_reports(const BenchResult& r, const std::filesystem::path& out_dir);
void write_stability_reports(const StabilityResult& r, const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
void write_cost_ratio_csv(const std::vector<RatioBucket>& buckets, const std::filesystem::path& path);
void write_manifest(const nlohmann::json& manifest, const std::filesystem::path& out_dir);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

// Table 7-style cross-dataset ranking from several finished benchmarks.
struct RankTable {
    std::vector<std::string> models;
    std::vector<std::string> datasets;
    std::map<std::string, FriedmanResult> by_metric;
    std::map<std::string, std::vector<PosthocRow>> posthoc;
};

RankTable rank_benchmarks(const std::vector<BenchResult>& results);
// Same ranking with the outer folds of a single benchmark as blocks.
RankTable rank_folds(const BenchResult& result);
void write_rank_table(const RankTable& t, const std::filesystem::path& path);

// Reads performance.json written by write_performance_reports.
BenchResult read_performance_json(const std::filesystem::path& path);

}  // namespace idcs
