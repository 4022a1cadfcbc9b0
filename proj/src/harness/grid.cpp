#include "idcs/harness.hpp"
#include "idcs/log.hpp"
#include "idcs/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace idcs {

std::vector<Hyperparams> GridSpec::points(Family f) const {
    std::vector<Hyperparams> out;
    switch (f) {
        case Family::logit:
            for (auto pen : logit_penalty)
                for (double c : logit_c) {
                    LogitParams p;
                    p.penalty = pen;
                    p.C = c;
                    out.emplace_back(p);
                }
            break;
        case Family::boost:
            for (double mcw : boost_min_child_weight)
                for (int depth : boost_max_depth)
                    for (double cs : boost_colsample)
                        for (double g : boost_gamma) {
                            BoostParams p;
                            p.min_child_weight = mcw;
                            p.max_depth = depth;
                            p.colsample_bytree = cs;
                            p.gamma = g;
                            out.emplace_back(p);
                        }
            break;
        case Family::forest:
            for (int depth : forest_max_depth)
                for (int n : forest_n_estimators) {
                    ForestParams p;
                    p.max_depth = depth;
                    p.n_estimators = n;
                    out.emplace_back(p);
                }
            break;
        case Family::net:
            for (int h : net_hidden) {
                NetParams p;
                p.hidden = h;
                out.emplace_back(p);
            }
            break;
    }
    return out;
}

nlohmann::json GridSpec::to_json() const {
    nlohmann::json pen = nlohmann::json::array();
    for (auto p : logit_penalty) pen.push_back(p == Penalty::l1 ? "l1" : "l2");
    nlohmann::json depth = nlohmann::json::array();
    for (int d : forest_max_depth) depth.push_back(d > 0 ? nlohmann::json(d) : nlohmann::json(nullptr));
    return {{"logit", {{"penalty", pen}, {"C", logit_c}}},
            {"boost",
             {{"min_child_weight", boost_min_child_weight},
              {"max_depth", boost_max_depth},
              {"colsample_bytree", boost_colsample},
              {"gamma", boost_gamma}}},
            {"forest", {{"max_depth", depth}, {"n_estimators", forest_n_estimators}}},
            {"net", {{"hidden", net_hidden}}}};
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
    auto check = [](const nlohmann::json& o, std::initializer_list<const char*> allowed, const std::string& where) {
        if (!o.is_object()) throw ConfigError(where + ": expected an object");
        for (const auto& [k, v] : o.items()) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* s) { return k == s; }))
                throw ConfigError(where + ": unknown key '" + k + "'");
            if (!v.is_array() || v.empty()) throw ConfigError(where + "." + k + ": expected a nonempty list");
        }
    };
    if (!j.is_object()) throw ConfigError("grid: expected an object");
    for (const auto& [k, v] : j.items())
        if (k != "logit" && k != "boost" && k != "forest" && k != "net")
            throw ConfigError("grid: unknown family '" + k + "'");
    GridSpec g;
    try {
        if (j.contains("logit")) {
            const auto& o = j["logit"];
            check(o, {"penalty", "C"}, "grid.logit");
            if (o.contains("penalty")) {
                g.logit_penalty.clear();
                for (const auto& v : o["penalty"]) {
                    const auto s = v.get<std::string>();
                    if (s == "l1" || s == "L1") g.logit_penalty.push_back(Penalty::l1);
                    else if (s == "l2" || s == "L2") g.logit_penalty.push_back(Penalty::l2);
                    else throw ConfigError("grid.logit.penalty: unknown penalty '" + s + "'");
                }
            }
            if (o.contains("C")) g.logit_c = o["C"].get<std::vector<double>>();
        }
        if (j.contains("boost")) {
            const auto& o = j["boost"];
            check(o, {"min_child_weight", "max_depth", "colsample_bytree", "gamma"}, "grid.boost");
            if (o.contains("min_child_weight")) g.boost_min_child_weight = o["min_child_weight"].get<std::vector<double>>();
            if (o.contains("max_depth")) g.boost_max_depth = o["max_depth"].get<std::vector<int>>();
            if (o.contains("colsample_bytree")) g.boost_colsample = o["colsample_bytree"].get<std::vector<double>>();
            if (o.contains("gamma")) g.boost_gamma = o["gamma"].get<std::vector<double>>();
        }
        if (j.contains("forest")) {
            const auto& o = j["forest"];
            check(o, {"max_depth", "n_estimators"}, "grid.forest");
            if (o.contains("max_depth")) {
                g.forest_max_depth.clear();
                for (const auto& v : o["max_depth"]) g.forest_max_depth.push_back(v.is_null() ? 0 : v.get<int>());
            }
            if (o.contains("n_estimators")) g.forest_n_estimators = o["n_estimators"].get<std::vector<int>>();
        }
        if (j.contains("net")) {
            const auto& o = j["net"];
            check(o, {"hidden"}, "grid.net");
            if (o.contains("hidden")) g.net_hidden = o["hidden"].get<std::vector<int>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    return g;
}

std::uint64_t model_index(const std::string& name) {
    const auto& all = all_model_names();
    const auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end()) throw std::invalid_argument("unknown model '" + name + "'");
    return static_cast<std::uint64_t>(it - all.begin());
}

GridResult grid_search(Family family, LossKind loss, const Dataset& train, const CostSet& costs,
                       const std::vector<Hyperparams>& grid, std::size_t k, std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
    const auto folds = stratified_kfold(train.y, k, derive_seed(seed, "inner"));

    struct FoldData {
        Matrix X_train, X_test;
        std::vector<int> y_train, y_test;
        CostSet c_train, c_test;
    };
    std::vector<FoldData> data;
    data.reserve(folds.size());
    for (const auto& f : folds) {
        FoldData d;
        d.X_train = train.X.select_rows(f.train);
        d.X_test = train.X.select_rows(f.test);
        for (auto r : f.train) d.y_train.push_back(train.y[r]);
        for (auto r : f.test) d.y_test.push_back(train.y[r]);
        d.c_train = costs.subset(f.train);
        d.c_test = costs.subset(f.test);
        data.push_back(std::move(d));
    }

    GridResult result;
    result.scores.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double total = 0.0;
        bool ok = true;
        for (std::size_t f = 0; f < data.size() && ok; ++f) {
            const auto& d = data[f];
            try {
                ModelSpec spec{family, loss, grid[g], derive_seed(seed, "inner_fit", {g, f})};
                const auto model = fit(spec, TrainingSet{d.X_train, d.y_train, &d.c_train});
                ++result.fits;
                const auto s = model.predict_proba(d.X_test);
                total += loss == LossKind::aec ? rel_aec(d.y_test, s, d.c_test, costs.params.pi1) : auc(d.y_test, s);
            } catch (const TrainingError& e) {
                log::event("grid_point_failed", {{"family", to_string(family)}, {"point", g}, {"fold", f}, {"error", e.what()}});
                ok = false;
            } catch (const UndefinedMetricError& e) {
                log::event("grid_point_failed", {{"family", to_string(family)}, {"point", g}, {"fold", f}, {"error", e.what()}});
                ok = false;
            }
        }
        if (ok) result.scores[g] = total / static_cast<double>(data.size());
    }

    bool found = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (std::isnan(result.scores[g])) continue;
        if (!found || result.scores[g] > result.scores[result.best]) {
            result.best = g;
            found = true;
        }
    }
    if (!found) throw TrainingError(std::string("grid_search: every grid point failed for ") + to_string(family));
    result.best_params = grid[result.best];
    log::debug("grid_search", {{"family", to_string(family)},
                               {"loss", to_string(loss)},
                               {"best", result.best},
                               {"score", result.scores[result.best]},
                               {"fits", result.fits}});
    return result;
}

}  // namespace idcs
