#include "idcs/harness.hpp"
#include "idcs/log.hpp"
#include "idcs/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

namespace idcs {

namespace {

// Integer key of a target rate for seeds and file names, so restricting the
// rate list does not shift any stream.
std::uint64_t pi_key(double pi) { return static_cast<std::uint64_t>(std::llround(pi * 1e6)); }

std::string cell_stem(const std::string& model, double pi) { return model + "_pi" + std::to_string(pi_key(pi)); }

struct Cell {
    std::size_t model = 0;  // position in cfg.models
    std::size_t pi = 0;     // position in cfg.pis
};

struct CellOutcome {
    bool skipped = false;
    bool from_checkpoint = false;
    nlohmann::json hyperparams;
    std::vector<std::string> failures;
};

class Runner {
public:
    Runner(const ExperimentConfig& cfg, const Dataset& data, const StabilityOptions& opts, StabilityResult& out)
        : cfg_(cfg), opts_(opts), out_(out) {
        auto [train, test] = split_stability_test(data, cfg.n_test, derive_seed(cfg.seed, "test_split"));
        train_ = std::move(train);
        test_ = std::move(test);
        const double rate = data.positive_rate();
        priors_ = Priors{1.0 - rate, rate};
        groups_ = FeatureGroups::from_dataset(data);
        for (const auto& m : cfg.models)
            for (auto method : cfg.methods)
                out.tensors.emplace_back(m, to_string(method), cfg.pis, test_.rows(), cfg.iterations, groups_.names);
    }

    CellOutcome run(const Cell& c) {
        const auto& name = cfg_.models[c.model];
        const double pi = cfg_.pis[c.pi];
        if (opts_.resume && !opts_.checkpoint_dir.empty()) {
            if (auto done = load_checkpoint(c)) return *done;
        }
        CellOutcome outcome;
        const auto base = parse_model_name(name);
        const auto mid = model_index(name);
        std::optional<Hyperparams> theta;
        for (std::size_t j = 0; j < cfg_.iterations; ++j) {
            std::vector<std::size_t> idx;
            try {
                idx = resample_indices(train_.y, pi, derive_seed(cfg_.seed, "resample", {pi_key(pi), j}), cfg_.fill_majority);
            } catch (const InfeasibleError& e) {
                log::event("stability_cell_skipped", {{"model", name}, {"pi", pi}, {"reason", e.what()}});
                outcome.skipped = true;
                return outcome;
            }
            const Dataset raw = train_.subset(idx);
            const auto pre = Preprocessor::fit(raw);
            const Dataset tr = pre.apply(raw);
            const Dataset te = pre.apply(test_);
            const auto costs = build_cost_set(tr, fit_cost_params(raw, cfg_.lgd, priors_));
            try {
                if (!theta) {
                    const auto gr = grid_search(base.family, base.loss, tr, costs, cfg_.grid.points(base.family),
                                                cfg_.inner_folds, derive_seed(cfg_.seed, "stability_grid", {mid, pi_key(pi)}));
                    theta = gr.best_params;
                    outcome.hyperparams = hyperparams_to_json(*theta);
                }
                ModelSpec spec{base.family, base.loss, *theta, derive_seed(cfg_.seed, "stability_fit", {mid, pi_key(pi), j})};
                const auto model = fit(spec, TrainingSet{tr.X, tr.y, &costs});
                explain_iteration(c, j, model, tr, te);
            } catch (const std::exception& e) {
                const std::string msg = name + " pi=" + format_double(pi) + " iteration " + std::to_string(j) + ": " + e.what();
                log::event("stability_iteration_failed", {{"model", name}, {"pi", pi}, {"iteration", j}, {"error", e.what()}});
                outcome.failures.push_back(msg);
                if (!theta) return outcome;  // tuning failed, nothing to reuse
            }
        }
        if (!opts_.checkpoint_dir.empty()) save_checkpoint(c, outcome);
        return outcome;
    }

private:
    ImportanceTensor& tensor(std::size_t model, std::size_t method) {
        return out_.tensors[model * cfg_.methods.size() + method];
    }

    void explain_iteration(const Cell& c, std::size_t j, const TrainedModel& model, const Dataset& tr, const Dataset& te) {
        const auto mid = model_index(cfg_.models[c.model]);
        const auto key = pi_key(cfg_.pis[c.pi]);
        const auto f = score_fn(model);
        Matrix background;
        std::optional<TrainSummary> summary;
        for (auto m : cfg_.methods) {
            if (m == Method::shap)
                background = sample_background(tr.X, cfg_.explainer.shap.background_size,
                                               derive_seed(cfg_.seed, "background", {mid, key, j}));
            else
                summary = TrainSummary::fit(tr);
        }
        parallel_for(te.rows(), cfg_.workers, [&](std::size_t i) {
            const auto x = te.X.row(i);
            for (std::size_t k = 0; k < cfg_.methods.size(); ++k) {
                const auto seed = derive_seed(cfg_.seed, "explain", {mid, key, j, i, k});
                const Explanation e = cfg_.methods[k] == Method::shap
                                          ? shap_permutation(f, background, x, groups_, cfg_.explainer.shap, seed)
                                          : lime_explain(f, *summary, x, cfg_.explainer.lime, seed);
                auto& t = tensor(c.model, k);
                for (std::size_t p = 0; p < e.values.size(); ++p) t.at(c.pi, i, j, p) = e.values[p];
            }
        });
        for (std::size_t k = 0; k < cfg_.methods.size(); ++k) tensor(c.model, k).set_present(c.pi, j, true);
        log::event("stability_iteration", {{"model", cfg_.models[c.model]}, {"pi", cfg_.pis[c.pi]}, {"iteration", j}});
    }

    std::filesystem::path status_path(const Cell& c) const {
        return opts_.checkpoint_dir / (cell_stem(cfg_.models[c.model], cfg_.pis[c.pi]) + ".json");
    }
    std::filesystem::path tensor_path(const Cell& c, std::size_t k) const {
        return opts_.checkpoint_dir /
               (cell_stem(cfg_.models[c.model], cfg_.pis[c.pi]) + "_" + to_string(cfg_.methods[k]) + ".imp");
    }

    void save_checkpoint(const Cell& c, const CellOutcome& outcome) {
        std::filesystem::create_directories(opts_.checkpoint_dir);
        for (std::size_t k = 0; k < cfg_.methods.size(); ++k) {
            const auto& full = tensor(c.model, k);
            ImportanceTensor slice(full.model, full.method, {cfg_.pis[c.pi]}, full.n_instances, full.iterations, full.features);
            for (std::size_t j = 0; j < full.iterations; ++j) {
                slice.set_present(0, j, full.iteration_present(c.pi, j));
                for (std::size_t i = 0; i < full.n_instances; ++i)
                    for (std::size_t p = 0; p < full.n_features(); ++p) slice.at(0, i, j, p) = full.at(c.pi, i, j, p);
            }
            slice.write(tensor_path(c, k));
        }
        const nlohmann::json status{{"model", cfg_.models[c.model]},
                                    {"pi", cfg_.pis[c.pi]},
                                    {"seed", cfg_.seed},
                                    {"complete", true},
                                    {"hyperparams", outcome.hyperparams},
                                    {"failures", outcome.failures}};
        const auto path = status_path(c);
        const auto tmp = std::filesystem::path(path.string() + ".tmp");
        {
            std::ofstream o(tmp);
            o << status.dump(2) << '\n';
        }
        std::filesystem::rename(tmp, path);
    }

    std::optional<CellOutcome> load_checkpoint(const Cell& c) {
        const auto path = status_path(c);
        if (!std::filesystem::exists(path)) return std::nullopt;
        try {
            std::ifstream in(path);
            const auto status = nlohmann::json::parse(in);
            if (!status.value("complete", false) || status.value("seed", std::uint64_t{0}) != cfg_.seed) return std::nullopt;
            std::vector<ImportanceTensor> slices;
            for (std::size_t k = 0; k < cfg_.methods.size(); ++k) {
                auto s = ImportanceTensor::read(tensor_path(c, k));
                const auto& full = tensor(c.model, k);
                if (s.n_instances != full.n_instances || s.iterations != full.iterations || s.features != full.features)
                    return std::nullopt;
                slices.push_back(std::move(s));
            }
            for (std::size_t k = 0; k < cfg_.methods.size(); ++k) {
                auto& full = tensor(c.model, k);
                const auto& s = slices[k];
                for (std::size_t j = 0; j < full.iterations; ++j) {
                    full.set_present(c.pi, j, s.iteration_present(0, j));
                    for (std::size_t i = 0; i < full.n_instances; ++i)
                        for (std::size_t p = 0; p < full.n_features(); ++p) full.at(c.pi, i, j, p) = s.at(0, i, j, p);
                }
            }
            CellOutcome o;
            o.from_checkpoint = true;
            o.hyperparams = status.at("hyperparams");
            o.failures = status.at("failures").get<std::vector<std::string>>();
            log::event("stability_cell_resumed", {{"model", cfg_.models[c.model]}, {"pi", cfg_.pis[c.pi]}});
            return o;
        } catch (const std::exception& e) {
            log::event("checkpoint_unreadable", {{"path", path.string()}, {"error", e.what()}});
            return std::nullopt;
        }
    }

    const ExperimentConfig& cfg_;
    const StabilityOptions& opts_;
    StabilityResult& out_;
    Dataset train_, test_;
    Priors priors_;
    FeatureGroups groups_;
};

}  // namespace

StabilityResult run_stability_experiment(const ExperimentConfig& cfg, const Dataset& data, const StabilityOptions& opts) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    StabilityResult result;
    result.dataset = cfg.name;
    result.hyperparams = nlohmann::json::object();
    Runner runner(cfg, data, opts, result);
    std::size_t resumed = 0;
    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
        for (std::size_t q = 0; q < cfg.pis.size(); ++q) {
            const auto outcome = runner.run(Cell{m, q});
            const auto& name = cfg.models[m];
            const auto pi = format_double(cfg.pis[q]);
            if (outcome.skipped) result.skipped.push_back(name + " pi=" + pi);
            if (outcome.from_checkpoint) ++resumed;
            if (!outcome.hyperparams.is_null()) result.hyperparams[name][pi] = outcome.hyperparams;
            result.failures.insert(result.failures.end(), outcome.failures.begin(), outcome.failures.end());
        }
    }
    summarize_stability(cfg, result);
    const auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.manifest = {{"kind", "stability"},
                       {"format_version", 1},
                       {"config", cfg.to_json()},
                       {"dataset", summarize(data).to_json()},
                       {"master_seed", cfg.seed},
                       {"hyperparams", result.hyperparams},
                       {"decisions",
                        {{"cost_priors", "full-dataset default rate, fixed across resamples"},
                         {"resample_fill_majority", cfg.fill_majority},
                         {"resamples_shared_across_models", true},
                         {"tuning", "first resample per (model, rate); reused for later iterations"},
                         {"cov_mode", to_string(cfg.cov_mode)},
                         {"sra_depth", cfg.sra_depth}}},
                       {"skipped", result.skipped},
                       {"failures", result.failures.size()},
                       {"resumed_cells", resumed},
                       {"elapsed_seconds", seconds}};
    return result;
}

void summarize_stability(const ExperimentConfig& cfg, StabilityResult& result) {
    result.rows.clear();
    result.ks.clear();
    struct Series {
        std::vector<double> cov, sra;
    };
    // (model, method, pi) -> present values
    std::map<std::tuple<std::string, std::string, std::size_t>, Series> series;
    for (const auto& t : result.tensors) {
        const std::size_t depth = std::min(cfg.sra_depth, t.n_features());
        for (const auto& s : compute_stability(t, depth, cfg.cov_mode)) {
            if (t.effective_iterations(s.pi_index) == 0) continue;
            result.rows.push_back(StabilityRow{t.model, t.method, t.pis[s.pi_index], s.instance, s.cov, s.sra});
            auto& ser = series[{t.model, t.method, s.pi_index}];
            if (s.cov) ser.cov.push_back(*s.cov);
            if (s.sra) ser.sra.push_back(*s.sra);
        }
    }
    for (auto method : cfg.methods) {
        const std::string mname = to_string(method);
        for (std::size_t q = 0; q < cfg.pis.size(); ++q) {
            for (const auto& ce : cfg.models) {
                if (ce.starts_with("cs")) continue;
                const std::string cs = "cs" + ce;
                if (std::find(cfg.models.begin(), cfg.models.end(), cs) == cfg.models.end()) continue;
                const auto a = series.find({cs, mname, q}), b = series.find({ce, mname, q});
                if (a == series.end() || b == series.end()) continue;
                for (const char* metric : {"cov", "sra"}) {
                    const bool is_cov = std::string_view(metric) == "cov";
                    const auto& va = is_cov ? a->second.cov : a->second.sra;
                    const auto& vb = is_cov ? b->second.cov : b->second.sra;
                    if (va.empty() || vb.empty()) continue;
                    for (auto alt : {KsAlternative::first_larger, KsAlternative::two_sided})
                        result.ks.push_back(KsRow{metric, mname, cfg.pis[q], cs, ce, alt, ks_two_sample(va, vb, alt),
                                                  va.size(), vb.size()});
                }
            }
        }
    }
}

}  // namespace idcs
