#include "idcs/explain.hpp"
#include "idcs/random.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace idcs {

ScoreFn score_fn(const TrainedModel& model) {
    return [model](const Matrix& X, std::span<double> out) { model.predict_proba(X, out); };
}

std::size_t FeatureGroups::n_columns() const noexcept {
    std::size_t n = 0;
    for (const auto& c : columns) n += c.size();
    return n;
}

FeatureGroups FeatureGroups::from_dataset(const Dataset& d) {
    FeatureGroups g;
    for (const auto& b : d.blocks) {
        g.names.push_back(b.name);
        g.columns.push_back(b.columns);
    }
    return g;
}

FeatureGroups FeatureGroups::singletons(std::size_t n_columns) {
    FeatureGroups g;
    for (std::size_t c = 0; c < n_columns; ++c) {
        g.names.push_back("x" + std::to_string(c));
        g.columns.push_back({c});
    }
    return g;
}

const char* to_string(Method m) noexcept { return m == Method::shap ? "shap" : "lime"; }

Method method_from_string(std::string_view s) {
    if (s == "shap") return Method::shap;
    if (s == "lime") return Method::lime;
    throw std::invalid_argument("unknown explanation method '" + std::string(s) + "'");
}

nlohmann::json Explanation::to_json(const FeatureGroups* groups) const {
    nlohmann::json j{{"instance", instance}, {"method", to_string(method)}, {"values", values}};
    if (groups) j["features"] = groups->names;
    if (method == Method::shap) {
        j["base_value"] = base_value;
        j["exact"] = exact;
    } else {
        j["local_r2"] = local_r2;
    }
    return j;
}

nlohmann::json ExplainerConfig::to_json() const {
    return {{"shap",
             {{"background_size", shap.background_size},
              {"n_permutations", shap.n_permutations},
              {"exhaustive_max_features", shap.exhaustive_max_features}}},
            {"lime", {{"n_samples", lime.n_samples}, {"kernel_width", lime.kernel_width}, {"ridge", lime.ridge}}}};
}

ExplainerConfig ExplainerConfig::from_json(const nlohmann::json& j) {
    ExplainerConfig c;
    for (const auto& [k, v] : j.items()) {
        if (k == "shap") {
            for (const auto& [sk, sv] : v.items()) {
                if (sk == "background_size") c.shap.background_size = sv.get<std::size_t>();
                else if (sk == "n_permutations") c.shap.n_permutations = sv.get<std::size_t>();
                else if (sk == "exhaustive_max_features") c.shap.exhaustive_max_features = sv.get<std::size_t>();
                else throw std::invalid_argument("explainer.shap: unknown key '" + sk + "'");
            }
        } else if (k == "lime") {
            for (const auto& [lk, lv] : v.items()) {
                if (lk == "n_samples") c.lime.n_samples = lv.get<std::size_t>();
                else if (lk == "kernel_width") c.lime.kernel_width = lv.get<double>();
                else if (lk == "ridge") c.lime.ridge = lv.get<double>();
                else throw std::invalid_argument("explainer.lime: unknown key '" + lk + "'");
            }
        } else {
            throw std::invalid_argument("explainer: unknown key '" + k + "'");
        }
    }
    if (c.shap.background_size == 0) throw std::invalid_argument("explainer.shap.background_size must be positive");
    if (c.lime.n_samples < 2) throw std::invalid_argument("explainer.lime.n_samples must be at least 2");
    return c;
}

Matrix sample_background(const Matrix& train, std::size_t size, std::uint64_t seed) {
    if (train.rows() == 0) throw std::invalid_argument("shap: empty training data for background");
    if (size >= train.rows()) return train;
    std::vector<std::size_t> idx(train.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "background"));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(size);
    std::sort(idx.begin(), idx.end());
    return train.select_rows(idx);
}

namespace {

class CoalitionEvaluator {
public:
    CoalitionEvaluator(const ScoreFn& f, const Matrix& background, std::span<const double> x, const FeatureGroups& groups)
        : f_(f), background_(background), x_(x), groups_(groups), work_(background), scores_(background.rows()) {}

    double mean() {
        f_(work_, scores_);
        double s = 0.0;
        for (double v : scores_) s += v;
        return s / static_cast<double>(scores_.size());
    }
    void switch_on(std::size_t g) {
        for (std::size_t r = 0; r < work_.rows(); ++r)
            for (auto c : groups_.columns[g]) work_(r, c) = x_[c];
    }
    void switch_off(std::size_t g) {
        for (std::size_t r = 0; r < work_.rows(); ++r)
            for (auto c : groups_.columns[g]) work_(r, c) = background_(r, c);
    }
    void reset() { work_ = background_; }

private:
    const ScoreFn& f_;
    const Matrix& background_;
    std::span<const double> x_;
    const FeatureGroups& groups_;
    Matrix work_;
    std::vector<double> scores_;
};

void check_inputs(const Matrix& background, std::span<const double> x, const FeatureGroups& groups) {
    if (background.rows() == 0) throw std::invalid_argument("shap: empty background");
    if (x.size() != background.cols()) throw std::invalid_argument("shap: instance does not match background columns");
    for (const auto& g : groups.columns)
        for (auto c : g)
            if (c >= x.size()) throw std::invalid_argument("shap: feature group column out of range");
}

}  // namespace

Explanation shap_permutation(const ScoreFn& f, const Matrix& background, std::span<const double> x,
                             const FeatureGroups& groups, const ShapConfig& cfg, std::uint64_t seed) {
    check_inputs(background, x, groups);
    const std::size_t P = groups.size();
    CoalitionEvaluator ev(f, background, x, groups);
    Explanation e;
    e.method = Method::shap;
    e.values.assign(P, 0.0);
    e.base_value = ev.mean();
    if (P == 0) return e;

    std::vector<std::size_t> order(P);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t walks = 0;

    if (cfg.force_exhaustive || P <= cfg.exhaustive_max_features) {
        e.exact = true;
        do {
            double prev = e.base_value;
            for (auto g : order) {
                ev.switch_on(g);
                const double cur = ev.mean();
                e.values[g] += cur - prev;
                prev = cur;
            }
            ev.reset();
            ++walks;
        } while (std::next_permutation(order.begin(), order.end()));
    } else {
        Rng rng(derive_seed(seed, "shap"));
        for (std::size_t k = 0; k < cfg.n_permutations; ++k) {
            std::shuffle(order.begin(), order.end(), rng);
            double prev = e.base_value;
            for (auto g : order) {
                ev.switch_on(g);
                const double cur = ev.mean();
                e.values[g] += cur - prev;
                prev = cur;
            }
            // Reverse pass: switching features back off in the same order
            // walks the reversed permutation from the full coalition.
            for (auto g : order) {
                ev.switch_off(g);
                const double cur = g == order.back() ? e.base_value : ev.mean();
                e.values[g] += prev - cur;
                prev = cur;
            }
            walks += 2;
        }
    }
    for (auto& v : e.values) v /= static_cast<double>(walks);
    return e;
}

std::vector<double> shapley_brute_force(const ScoreFn& f, const Matrix& background, std::span<const double> x,
                                        const FeatureGroups& groups) {
    check_inputs(background, x, groups);
    const std::size_t P = groups.size();
    if (P > 20) throw std::invalid_argument("shapley_brute_force: too many features");
    const std::size_t n_sets = std::size_t{1} << P;
    std::vector<double> v(n_sets);
    CoalitionEvaluator ev(f, background, x, groups);
    for (std::size_t mask = 0; mask < n_sets; ++mask) {
        ev.reset();
        for (std::size_t g = 0; g < P; ++g)
            if (mask >> g & 1U) ev.switch_on(g);
        v[mask] = ev.mean();
    }
    std::vector<double> fact(P + 1, 1.0);
    for (std::size_t i = 1; i <= P; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
    std::vector<double> phi(P, 0.0);
    for (std::size_t mask = 0; mask < n_sets; ++mask) {
        const auto s = static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(mask)));
        for (std::size_t g = 0; g < P; ++g) {
            if (mask >> g & 1U) continue;
            const double w = fact[s] * fact[P - s - 1] / fact[P];
            phi[g] += w * (v[mask | (std::size_t{1} << g)] - v[mask]);
        }
    }
    return phi;
}

}  // namespace idcs
