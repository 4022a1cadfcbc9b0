#include "idcs/harness.hpp"
#include "idcs/log.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

namespace idcs {

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; }))
            throw ConfigError(where + ": unknown key '" + k + "'");
    }
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json methods_json = nlohmann::json::array();
    for (auto m : methods) methods_json.push_back(to_string(m));
    return {{"name", name},
            {"seed", seed},
            {"workers", workers},
            {"models", models},
            {"dataset", {{"path", dataset.string()}, {"schema", schema.to_json()}}},
            {"folds", {{"outer", outer_folds}, {"inner", inner_folds}}},
            {"costs", {{"lgd", lgd}}},
            {"metrics", {{"savings_threshold", to_string(savings_threshold)}}},
            {"stability",
             {{"pis", pis},
              {"iterations", iterations},
              {"n_test", n_test},
              {"sra_depth", sra_depth},
              {"cov_mode", to_string(cov_mode)},
              {"methods", methods_json},
              {"fill_majority", fill_majority}}},
            {"explainer", explainer.to_json()},
            {"grid", grid.to_json()}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    check_keys(j, {"name", "seed", "workers", "models", "dataset", "folds", "costs", "metrics", "stability", "explainer", "grid"},
               "config");
    ExperimentConfig c;
    if (j.contains("name")) c.name = get_as<std::string>(j["name"], "name");
    if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
    if (j.contains("workers")) c.workers = get_as<std::size_t>(j["workers"], "workers");
    if (j.contains("models")) {
        c.models = get_as<std::vector<std::string>>(j["models"], "models");
        for (const auto& m : c.models) {
            const auto& all = all_model_names();
            if (std::find(all.begin(), all.end(), m) == all.end()) throw ConfigError("models: unknown model '" + m + "'");
        }
    }
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        check_keys(d, {"path", "schema"}, "dataset");
        if (d.contains("path")) {
            std::filesystem::path p = get_as<std::string>(d["path"], "dataset.path");
            if (!p.empty() && p.is_relative() && !base_dir.empty()) p = base_dir / p;
            c.dataset = p;
        }
        if (d.contains("schema")) {
            const auto& s = d["schema"];
            try {
                if (s.is_string()) {
                    std::filesystem::path p = s.get<std::string>();
                    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
                    c.schema = load_schema(p);
                } else {
                    c.schema = Schema::from_json(s);
                }
            } catch (const SchemaError& e) {
                throw ConfigError(std::string("dataset.schema: ") + e.what());
            }
        }
    }
    if (j.contains("folds")) {
        const auto& f = j["folds"];
        check_keys(f, {"outer", "inner"}, "folds");
        if (f.contains("outer")) c.outer_folds = get_as<std::size_t>(f["outer"], "folds.outer");
        if (f.contains("inner")) c.inner_folds = get_as<std::size_t>(f["inner"], "folds.inner");
    }
    if (j.contains("costs")) {
        const auto& f = j["costs"];
        check_keys(f, {"lgd"}, "costs");
        if (f.contains("lgd")) c.lgd = get_as<double>(f["lgd"], "costs.lgd");
    }
    if (j.contains("metrics")) {
        const auto& f = j["metrics"];
        check_keys(f, {"savings_threshold"}, "metrics");
        try {
            if (f.contains("savings_threshold"))
                c.savings_threshold = savings_threshold_from_string(f["savings_threshold"].get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("metrics.savings_threshold: ") + e.what());
        }
    }
    if (j.contains("stability")) {
        const auto& s = j["stability"];
        check_keys(s, {"pis", "iterations", "n_test", "sra_depth", "cov_mode", "methods", "fill_majority"}, "stability");
        if (s.contains("pis")) c.pis = get_as<std::vector<double>>(s["pis"], "stability.pis");
        if (s.contains("iterations")) c.iterations = get_as<std::size_t>(s["iterations"], "stability.iterations");
        if (s.contains("n_test")) c.n_test = get_as<std::size_t>(s["n_test"], "stability.n_test");
        if (s.contains("sra_depth")) c.sra_depth = get_as<std::size_t>(s["sra_depth"], "stability.sra_depth");
        if (s.contains("fill_majority")) c.fill_majority = get_as<bool>(s["fill_majority"], "stability.fill_majority");
        try {
            if (s.contains("cov_mode")) c.cov_mode = cov_mode_from_string(s["cov_mode"].get<std::string>());
            if (s.contains("methods")) {
                c.methods.clear();
                for (const auto& m : s["methods"]) c.methods.push_back(method_from_string(m.get<std::string>()));
            }
        } catch (const std::exception& e) {
            throw ConfigError(std::string("stability: ") + e.what());
        }
    }
    try {
        if (j.contains("explainer")) c.explainer = ExplainerConfig::from_json(j["explainer"]);
        if (j.contains("grid")) c.grid = GridSpec::from_json(j["grid"]);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    if (outer_folds < 2 || inner_folds < 2) throw ConfigError("folds: outer and inner must be at least 2");
    if (iterations < 2) throw ConfigError("stability.iterations must be at least 2");
    if (n_test == 0) throw ConfigError("stability.n_test must be positive");
    if (sra_depth == 0) throw ConfigError("stability.sra_depth must be positive");
    if (!(lgd > 0.0 && lgd <= 1.0)) throw ConfigError("costs.lgd must lie in (0, 1]");
    for (double p : pis)
        if (!(p > 0.0 && p <= kMaxResampleRate + 1e-12)) throw ConfigError("stability.pis: rates must lie in (0, 0.3]");
    if (models.empty()) throw ConfigError("models: at least one model is required");
    if (methods.empty()) throw ConfigError("stability.methods: at least one method is required");
}

nlohmann::json apply_overrides(nlohmann::json tree, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
        const std::string key = o.substr(0, eq), text = o.substr(eq + 1);
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error&) {
            value = text;
        }
        nlohmann::json* node = &tree;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object() || !node->contains(part)) throw ConfigError("override: unknown key '" + key + "'");
            node = &(*node)[part];
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        // Comma-separated scalars for list-valued keys: models=logit,cslogit.
        if (node->is_array() && value.is_string()) {
            nlohmann::json arr = nlohmann::json::array();
            std::string s = value.get<std::string>();
            std::size_t b = 0;
            while (b <= s.size()) {
                const auto e = s.find(',', b);
                const auto item = s.substr(b, e == std::string::npos ? std::string::npos : e - b);
                try {
                    arr.push_back(nlohmann::json::parse(item));
                } catch (const nlohmann::json::parse_error&) {
                    arr.push_back(item);
                }
                if (e == std::string::npos) break;
                b = e + 1;
            }
            value = std::move(arr);
        }
        *node = std::move(value);
    }
    return tree;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json file;
    try {
        file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config: expected an object");
    const auto base = path.parent_path();
    // Resolve a schema file reference first so overrides can reach its keys.
    if (file.contains("dataset") && file["dataset"].is_object() && file["dataset"].contains("schema") &&
        file["dataset"]["schema"].is_string()) {
        std::filesystem::path p = file["dataset"]["schema"].get<std::string>();
        if (p.is_relative()) p = base / p;
        try {
            file["dataset"]["schema"] = load_schema(p).to_json();
        } catch (const SchemaError& e) {
            throw ConfigError(std::string("dataset.schema: ") + e.what());
        }
    }
    if (file.contains("dataset") && file["dataset"].is_object() && file["dataset"].contains("path") &&
        file["dataset"]["path"].is_string()) {
        std::filesystem::path p = file["dataset"]["path"].get<std::string>();
        if (p.is_relative()) file["dataset"]["path"] = (base / p).lexically_normal().string();
    }
    check_keys(file, {"name", "seed", "workers", "models", "dataset", "folds", "costs", "metrics", "stability", "explainer", "grid"},
               "config");
    nlohmann::json tree = ExperimentConfig{}.to_json();
    tree.merge_patch(file);
    tree = apply_overrides(std::move(tree), overrides);
    return ExperimentConfig::from_json(tree);
}

std::size_t resolve_workers(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::min(resolve_workers(workers), n);
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

LoadedData load_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("dataset.path is required");
    if (cfg.schema.label.empty() || cfg.schema.amount.empty())
        throw ConfigError("dataset.schema must name the label and amount columns");
    LoadedData d;
    d.raw = load_csv(cfg.dataset, cfg.schema);
    d.encoded = one_hot_encode(d.raw);
    d.encoded.validate();
    return d;
}

}  // namespace idcs
