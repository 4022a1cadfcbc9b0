// idcs: command-line front end for the benchmark and stability harness.

#include "idcs/harness.hpp"
#include "idcs/log.hpp"
#include "idcs/random.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

namespace fs = std::filesystem;
using namespace idcs;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_out) {
    cmd->add_option("-c,--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("-s,--override", c.overrides, "Override a config value: dotted.key=value (repeatable)");
    auto* out = cmd->add_option("-o,--out", c.out, "Output directory");
    if (needs_out) out->required();
}

ExperimentConfig load(const Common& c, std::vector<std::string> extra = {}) {
    auto overrides = c.overrides;
    overrides.insert(overrides.end(), extra.begin(), extra.end());
    return load_config(c.config, overrides);
}

int cmd_validate(const Common& c) {
    const auto cfg = load(c);
    const auto data = load_dataset(cfg);
    const auto params = fit_cost_params(data.encoded, cfg.lgd);
    const auto costs = build_cost_set(data.encoded, params);
    const auto hist = cost_ratio_histogram(data.encoded.y, costs);
    nlohmann::json h = nlohmann::json::array();
    for (const auto& b : hist) h.push_back({{"lower", b.lower}, {"upper", format_double(b.upper)}, {"frequency", b.frequency}});
    const auto s = summarize(data.raw);
    nlohmann::json report{{"dataset", cfg.name},
                          {"rows", s.rows},
                          {"features", s.features},
                          {"encoded_columns", data.encoded.n_columns()},
                          {"pos_rate", s.pos_rate},
                          {"rejected_rows", data.raw.rejected_rows},
                          {"revenue_synthesized", data.raw.revenue_synthesized},
                          {"cost_params", params.to_json()},
                          {"negative_fp_costs_floored", costs.floored},
                          {"fn_fp_ratio_histogram", h}};
    std::cout << report.dump(2) << '\n';
    if (!c.out.empty()) {
        write_cost_ratio_csv(hist, fs::path(c.out) / "cost_ratios.csv");
        write_json(report, fs::path(c.out) / "validate.json");
    }
    return 0;
}

int cmd_bench(const Common& c, const std::string& models) {
    std::vector<std::string> extra;
    if (!models.empty()) extra.push_back("models=" + models);
    const auto cfg = load(c, extra);
    const auto data = load_dataset(cfg);
    const auto result = run_performance_bench(cfg, data.encoded);
    const fs::path out = c.out;
    write_performance_reports(result, out);
    const auto costs = build_cost_set(data.encoded, fit_cost_params(data.encoded, cfg.lgd));
    write_cost_ratio_csv(cost_ratio_histogram(data.encoded.y, costs), out / "cost_ratios.csv");
    std::ifstream perf(out / "performance.csv");
    std::cout << perf.rdbuf();
    if (result.reports.empty()) {
        std::cerr << "every model failed; see " << (out / "failures.log").string() << '\n';
        return 1;
    }
    return 0;
}

int cmd_stability(const Common& c, const std::string& models, const std::string& pis, int iters, bool resume) {
    std::vector<std::string> extra;
    if (!models.empty()) extra.push_back("models=" + models);
    if (!pis.empty()) extra.push_back("stability.pis=" + pis);
    if (iters > 0) extra.push_back("stability.iterations=" + std::to_string(iters));
    const auto cfg = load(c, extra);
    const auto data = load_dataset(cfg);
    const fs::path out = c.out;
    StabilityOptions opts{out / "checkpoints", resume};
    const auto result = run_stability_experiment(cfg, data.encoded, opts);
    write_stability_reports(result, cfg, out);
    std::ifstream ks(out / "ks_summary.csv");
    std::cout << ks.rdbuf();
    if (result.rows.empty()) {
        std::cerr << "no stability cell produced results; see " << (out / "failures.log").string() << '\n';
        return 1;
    }
    return 0;
}

int cmd_explain(const Common& c, const std::string& model_path, std::size_t instance, const std::string& method,
                bool exact) {
    const auto cfg = load(c);
    const auto data = load_dataset(cfg);
    std::ifstream in(model_path);
    if (!in) throw ConfigError("cannot open model bundle " + model_path);
    const auto bundle = nlohmann::json::parse(in);
    const auto model = TrainedModel::from_json(bundle.at("model"));
    const auto pre = Preprocessor::from_json(bundle.at("preprocessor"));
    const auto train_rows = bundle.at("train_rows").get<std::vector<std::size_t>>();
    const auto test_rows = bundle.at("test_rows").get<std::vector<std::size_t>>();
    if (instance >= test_rows.size())
        throw std::out_of_range("instance " + std::to_string(instance) + " out of range (test set has " +
                                std::to_string(test_rows.size()) + " rows)");
    const Dataset train = pre.apply(data.encoded.subset(train_rows));
    const Dataset test = pre.apply(data.encoded.subset(test_rows));
    if (model.n_features() != train.n_columns()) throw ConfigError("model bundle does not match the dataset encoding");

    const auto groups = FeatureGroups::from_dataset(train);
    const auto f = score_fn(model);
    const auto x = test.X.row(instance);
    const double fx = model.predict_one(x);
    nlohmann::json out{{"model", model.name()}, {"instance", instance}, {"row", test_rows[instance]},
                       {"label", test.y[instance]}, {"score", fx}};
    auto ranked = [&](const std::vector<double>& values) {
        const auto ranks = rank_features(values);
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t p = 0; p < values.size(); ++p)
            rows.push_back({{"feature", groups.names[p]}, {"value", values[p]}, {"rank", ranks[p]}});
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a["rank"] < b["rank"]; });
        return rows;
    };
    if (method == "shap" || method == "both") {
        auto shap_cfg = cfg.explainer.shap;
        shap_cfg.force_exhaustive = exact;
        if (exact && groups.size() > 10) throw ConfigError("--exact needs at most 10 features");
        const auto background = sample_background(train.X, shap_cfg.background_size, derive_seed(cfg.seed, "background"));
        const auto e = shap_permutation(f, background, x, groups, shap_cfg, derive_seed(cfg.seed, "explain", {instance}));
        const double total = std::accumulate(e.values.begin(), e.values.end(), e.base_value);
        out["shap"] = {{"base_value", e.base_value},
                       {"exact", e.exact},
                       {"attributions", ranked(e.values)},
                       {"efficiency", {{"sum_plus_base", total}, {"f_x", fx}, {"gap", total - fx}}}};
    }
    if (method == "lime" || method == "both") {
        const auto summary = TrainSummary::fit(train);
        const auto e = lime_explain(f, summary, x, cfg.explainer.lime, derive_seed(cfg.seed, "explain", {instance, 1}));
        out["lime"] = {{"local_r2", e.local_r2}, {"attributions", ranked(e.values)}};
    }
    std::cout << out.dump(2) << '\n';
    if (!c.out.empty()) write_json(out, fs::path(c.out) / ("explain_" + model.name() + "_" + std::to_string(instance) + ".json"));
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<BenchResult> results;
    for (const auto& dir : inputs) {
        fs::path p = dir;
        if (fs::is_directory(p)) p /= "performance.json";
        results.push_back(read_performance_json(p));
    }
    const fs::path out_path = out;
    if (results.size() == 1) write_rank_table(rank_folds(results.front()), out_path);
    else write_rank_table(rank_benchmarks(results), out_path);
    std::ifstream t(out_path);
    std::cout << t.rdbuf();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Instance-dependent cost-sensitive credit scoring: benchmarks and explanation stability"};
    app.require_subcommand(1);
    int verbose = 0;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "More log output (repeat for debug)");
    app.add_flag("-q,--quiet", quiet, "Only errors");

    Common common;
    std::string models, pis, method = "both", model_path, report_out;
    std::vector<std::string> inputs;
    int iters = 0;
    bool resume = false, exact = false;
    std::size_t instance = 0;

    auto* validate = app.add_subcommand("validate", "Load a dataset and print summary and cost diagnostics");
    add_common(validate, common, false);

    auto* bench = app.add_subcommand("bench", "Nested cross-validated performance benchmark");
    add_common(bench, common, true);
    bench->add_option("--models", models, "Comma-separated model subset");

    auto* stability = app.add_subcommand("stability", "Explanation stability under resampled class imbalance");
    add_common(stability, common, true);
    stability->add_option("--models", models, "Comma-separated model subset");
    stability->add_option("--pi", pis, "Comma-separated target default rates");
    stability->add_option("--iters", iters, "Resampling iterations per rate")->check(CLI::Range(2, 100000));
    stability->add_flag("--resume", resume, "Reuse finished cells from the checkpoint directory");

    auto* explain = app.add_subcommand("explain", "SHAP and LIME attributions for one test instance");
    add_common(explain, common, false);
    explain->add_option("-m,--model", model_path, "Model bundle written by bench (models/<name>.json)")
        ->required()
        ->check(CLI::ExistingFile);
    explain->add_option("-i,--instance", instance, "Row of the bundle's test fold");
    explain->add_option("--method", method, "shap, lime or both")->check(CLI::IsMember({"shap", "lime", "both"}));
    explain->add_flag("--exact", exact, "Enumerate every feature ordering (small feature counts only)");

    auto* report = app.add_subcommand("report", "Friedman rank table across benchmark outputs");
    report->add_option("inputs", inputs, "Benchmark output directories or performance.json files")->required();
    report->add_option("-o,--out", report_out, "Rank table CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    log::set_level(quiet ? log::Level::quiet : verbose > 0 ? log::Level::debug : log::Level::info);

    try {
        if (*validate) return cmd_validate(common);
        if (*bench) return cmd_bench(common, models);
        if (*stability) return cmd_stability(common, models, pis, iters, resume);
        if (*explain) return cmd_explain(common, model_path, instance, method, exact);
        if (*report) return cmd_report(inputs, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
