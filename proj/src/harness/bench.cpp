#include "idcs/harness.hpp"
#include "idcs/log.hpp"
#include "idcs/random.hpp"

#include <algorithm>
#include <chrono>

namespace idcs {

namespace {

struct OuterFold {
    Preprocessor pre;
    Dataset train;
    Dataset test;
    CostSet c_train;
    CostSet c_test;
};

OuterFold prepare_fold(const Dataset& data, const Fold& f, double lgd) {
    OuterFold o;
    const Dataset raw_train = data.subset(f.train), raw_test = data.subset(f.test);
    o.pre = Preprocessor::fit(raw_train);
    o.train = o.pre.apply(raw_train);
    o.test = o.pre.apply(raw_test);
    const auto params = fit_cost_params(raw_train, lgd);
    o.c_train = build_cost_set(o.train, params);
    o.c_test = build_cost_set(o.test, params);
    return o;
}

// The null model predicts pi1 everywhere; as a classifier it is the cheaper
// of the two single-class policies, so its savings are zero by construction.
FoldMetrics null_metrics(const OuterFold& o) {
    const double pi1 = o.c_train.params.pi1;
    const auto s = null_scores(o.test.rows(), pi1);
    FoldMetrics m;
    m.auc = auc(o.test.y, s);
    m.ap = average_precision(o.test.y, s);
    m.brier = brier(o.test.y, s);
    m.rel_aec = rel_aec(o.test.y, s, o.c_test, pi1);
    double accept_all = 0.0, reject_all = 0.0;
    for (std::size_t i = 0; i < o.test.rows(); ++i) {
        if (o.test.y[i] == 1) accept_all += o.c_test.c_fn[i];
        else reject_all += o.c_test.c_fp[i];
    }
    const std::vector<int> y_hat(o.test.rows(), reject_all < accept_all ? 1 : 0);
    m.savings = savings(o.test.y, y_hat, o.c_test);
    return m;
}

}  // namespace

const MetricReport* BenchResult::report(const std::string& model) const {
    for (const auto& r : reports)
        if (r.model == model) return &r;
    return nullptr;
}

BenchResult run_performance_bench(const ExperimentConfig& cfg, const Dataset& data) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto folds = stratified_kfold(data.y, cfg.outer_folds, derive_seed(cfg.seed, "outer"));
    std::vector<OuterFold> prepared;
    prepared.reserve(folds.size());
    for (const auto& f : folds) prepared.push_back(prepare_fold(data, f, cfg.lgd));

    BenchResult result;
    result.dataset = cfg.name;
    result.models = cfg.models;
    const std::size_t M = cfg.models.size(), F = folds.size();
    std::vector<FoldRecord> records(F * M);

    parallel_for(F * M, cfg.workers, [&](std::size_t task) {
        const std::size_t f = task / M, m = task % M;
        const auto& name = cfg.models[m];
        const auto& o = prepared[f];
        FoldRecord& rec = records[task];
        rec.fold = f;
        rec.model = name;
        const auto base = parse_model_name(name);
        const auto mid = model_index(name);
        try {
            const auto grid = cfg.grid.points(base.family);
            const auto gr = grid_search(base.family, base.loss, o.train, o.c_train, grid, cfg.inner_folds,
                                        derive_seed(cfg.seed, "grid", {mid, f}));
            ModelSpec spec{base.family, base.loss, gr.best_params, derive_seed(cfg.seed, "model", {mid, f})};
            rec.hyperparams = hyperparams_to_json(gr.best_params);
            const auto model = fit(spec, TrainingSet{o.train.X, o.train.y, &o.c_train});
            const auto s = model.predict_proba(o.test.X);
            rec.metrics = evaluate_fold(o.test.y, s, o.c_test, o.c_train.params.pi1, cfg.savings_threshold);
            if (f == 0)
                rec.bundle = {{"format_version", 1},
                              {"dataset", cfg.name},
                              {"fold", f},
                              {"model", model.to_json()},
                              {"preprocessor", o.pre.to_json()},
                              {"train_rows", folds[f].train},
                              {"test_rows", folds[f].test}};
            log::event("bench_cell", {{"fold", f}, {"model", name}, {"auc", rec.metrics->auc}, {"rel_aec", rec.metrics->rel_aec}});
        } catch (const std::exception& e) {
            rec.error = e.what();
            log::event("bench_cell_failed", {{"fold", f}, {"model", name}, {"error", rec.error}});
        }
    });

    std::vector<FoldMetrics> null_folds;
    for (const auto& o : prepared) null_folds.push_back(null_metrics(o));
    result.null_report = MetricReport::from_folds("null", std::move(null_folds));

    for (std::size_t m = 0; m < M; ++m) {
        std::vector<FoldMetrics> ok;
        for (std::size_t f = 0; f < F; ++f) {
            const auto& rec = records[f * M + m];
            if (rec.metrics) ok.push_back(*rec.metrics);
            else result.failures.push_back("fold " + std::to_string(f) + " model " + rec.model + ": " + rec.error);
        }
        if (!ok.empty()) result.reports.push_back(MetricReport::from_folds(cfg.models[m], std::move(ok)));
    }
    result.records = std::move(records);

    const auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.manifest = {{"kind", "bench"},
                       {"format_version", 1},
                       {"config", cfg.to_json()},
                       {"dataset", summarize(data).to_json()},
                       {"master_seed", cfg.seed},
                       {"decisions",
                        {{"inner_selection_metric", "auc for cross-entropy models, rel_aec for aec models"},
                         {"savings_threshold", to_string(cfg.savings_threshold)},
                         {"csforest_combination", "mean of tree votes"},
                         {"aec_training_scale", "aec objective divided by mean actual-class training cost"},
                         {"null_savings", "cheaper single-class policy"}}},
                       {"failures", result.failures.size()},
                       {"elapsed_seconds", seconds}};
    return result;
}

}  // namespace idcs
