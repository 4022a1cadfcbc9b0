#include "idcs/models.hpp"

#include <algorithm>
#include <cmath>

namespace idcs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* what) {
    if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) == keys.end())
            throw std::invalid_argument(std::string(what) + ": unknown key '" + k + "'");
    }
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

nlohmann::json trees_to_json(const std::vector<Tree>& trees) {
    auto a = nlohmann::json::array();
    for (const auto& t : trees) a.push_back(t.to_json());
    return a;
}

std::vector<Tree> trees_from_json(const nlohmann::json& j) {
    std::vector<Tree> out;
    for (const auto& t : j) out.push_back(Tree::from_json(t));
    return out;
}

}  // namespace

const char* to_string(Family f) noexcept {
    switch (f) {
        case Family::logit: return "logit";
        case Family::boost: return "boost";
        case Family::forest: return "forest";
        case Family::net: return "net";
    }
    return "?";
}

Family family_from_string(std::string_view s) {
    if (s == "logit") return Family::logit;
    if (s == "boost") return Family::boost;
    if (s == "forest") return Family::forest;
    if (s == "net") return Family::net;
    throw std::invalid_argument("unknown model family '" + std::string(s) + "'");
}

Family family_of(const Hyperparams& h) noexcept { return static_cast<Family>(h.index()); }

Hyperparams default_hyperparams(Family f) {
    switch (f) {
        case Family::logit: return LogitParams{};
        case Family::boost: return BoostParams{};
        case Family::forest: return ForestParams{};
        case Family::net: return NetParams{};
    }
    return LogitParams{};
}

nlohmann::json hyperparams_to_json(const Hyperparams& h) {
    return std::visit(
        overloaded{
            [](const LogitParams& p) -> nlohmann::json {
                return {{"penalty", p.penalty == Penalty::l1 ? "l1" : "l2"},
                        {"C", p.C},
                        {"max_epochs", p.max_epochs},
                        {"tolerance", p.tolerance}};
            },
            [](const BoostParams& p) -> nlohmann::json {
                return {{"learning_rate", p.learning_rate},
                        {"min_child_weight", p.min_child_weight},
                        {"max_depth", p.max_depth},
                        {"colsample_bytree", p.colsample_bytree},
                        {"gamma", p.gamma},
                        {"n_rounds", p.n_rounds},
                        {"lambda", p.lambda},
                        {"early_stopping_rounds", p.early_stopping_rounds},
                        {"early_stopping_tolerance", p.early_stopping_tolerance}};
            },
            [](const ForestParams& p) -> nlohmann::json {
                return {{"max_depth", p.max_depth},
                        {"n_estimators", p.n_estimators},
                        {"min_samples_split", p.min_samples_split},
                        {"max_features", p.max_features}};
            },
            [](const NetParams& p) -> nlohmann::json {
                return {{"learning_rate", p.learning_rate},
                        {"hidden", p.hidden},
                        {"momentum", p.momentum},
                        {"batch_size", p.batch_size},
                        {"max_epochs", p.max_epochs},
                        {"patience", p.patience},
                        {"validation_fraction", p.validation_fraction}};
            },
        },
        h);
}

Hyperparams hyperparams_from_json(Family f, const nlohmann::json& j) {
    switch (f) {
        case Family::logit: {
            reject_unknown(j, {"penalty", "C", "max_epochs", "tolerance"}, "logit hyperparameters");
            LogitParams p;
            if (j.contains("penalty")) {
                const auto s = j.at("penalty").get<std::string>();
                if (s == "l1" || s == "L1") p.penalty = Penalty::l1;
                else if (s == "l2" || s == "L2") p.penalty = Penalty::l2;
                else throw std::invalid_argument("logit: unknown penalty '" + s + "'");
            }
            read_opt(j, "C", p.C);
            read_opt(j, "max_epochs", p.max_epochs);
            read_opt(j, "tolerance", p.tolerance);
            if (p.C < 0.0) throw std::invalid_argument("logit: C must be non-negative");
            return p;
        }
        case Family::boost: {
            reject_unknown(j,
                           {"learning_rate", "min_child_weight", "max_depth", "colsample_bytree", "gamma", "n_rounds",
                            "lambda", "early_stopping_rounds", "early_stopping_tolerance"},
                           "boost hyperparameters");
            BoostParams p;
            read_opt(j, "learning_rate", p.learning_rate);
            read_opt(j, "min_child_weight", p.min_child_weight);
            read_opt(j, "max_depth", p.max_depth);
            read_opt(j, "colsample_bytree", p.colsample_bytree);
            read_opt(j, "gamma", p.gamma);
            read_opt(j, "n_rounds", p.n_rounds);
            read_opt(j, "lambda", p.lambda);
            read_opt(j, "early_stopping_rounds", p.early_stopping_rounds);
            read_opt(j, "early_stopping_tolerance", p.early_stopping_tolerance);
            if (!(p.colsample_bytree > 0.0 && p.colsample_bytree <= 1.0))
                throw std::invalid_argument("boost: colsample_bytree must lie in (0, 1]");
            if (p.max_depth < 1) throw std::invalid_argument("boost: max_depth must be at least 1");
            return p;
        }
        case Family::forest: {
            reject_unknown(j, {"max_depth", "n_estimators", "min_samples_split", "max_features"},
                           "forest hyperparameters");
            ForestParams p;
            if (j.contains("max_depth") && j.at("max_depth").is_null()) p.max_depth = 0;
            else read_opt(j, "max_depth", p.max_depth);
            read_opt(j, "n_estimators", p.n_estimators);
            read_opt(j, "min_samples_split", p.min_samples_split);
            read_opt(j, "max_features", p.max_features);
            if (p.n_estimators < 1) throw std::invalid_argument("forest: n_estimators must be positive");
            return p;
        }
        case Family::net: {
            reject_unknown(j,
                           {"learning_rate", "hidden", "momentum", "batch_size", "max_epochs", "patience",
                            "validation_fraction"},
                           "net hyperparameters");
            NetParams p;
            read_opt(j, "learning_rate", p.learning_rate);
            read_opt(j, "hidden", p.hidden);
            read_opt(j, "momentum", p.momentum);
            read_opt(j, "batch_size", p.batch_size);
            read_opt(j, "max_epochs", p.max_epochs);
            read_opt(j, "patience", p.patience);
            read_opt(j, "validation_fraction", p.validation_fraction);
            if (p.hidden < 1) throw std::invalid_argument("net: hidden must be positive");
            return p;
        }
    }
    throw std::invalid_argument("unknown family");
}

std::string model_name(Family f, LossKind loss) {
    return std::string(loss == LossKind::aec ? "cs" : "") + to_string(f);
}

std::string ModelSpec::name() const { return model_name(family, loss); }

ModelSpec parse_model_name(std::string_view name) {
    ModelSpec s;
    if (name.starts_with("cs")) {
        s.loss = LossKind::aec;
        name.remove_prefix(2);
    }
    s.family = family_from_string(name);
    s.hyper = default_hyperparams(s.family);
    return s;
}

const std::vector<std::string>& all_model_names() {
    static const std::vector<std::string> names{"logit", "cslogit", "boost", "csboost",
                                                "forest", "csforest", "net", "csnet"};
    return names;
}

TrainedModel::TrainedModel(ModelSpec spec, std::size_t n_features, ModelState state, std::vector<double> loss_curve)
    : spec_(std::move(spec)),
      n_features_(n_features),
      state_(std::make_shared<const ModelState>(std::move(state))),
      loss_curve_(std::make_shared<const std::vector<double>>(std::move(loss_curve))) {
    if (static_cast<Family>(state_->index()) != spec_.family)
        throw std::invalid_argument("TrainedModel: state does not match model family");
}

double TrainedModel::margin(std::span<const double> x) const {
    if (x.size() != n_features_)
        throw std::invalid_argument("predict: expected " + std::to_string(n_features_) + " features, got " +
                                    std::to_string(x.size()));
    return std::visit(overloaded{
                          [&](const LogitState& s) {
                              double z = s.intercept;
                              for (std::size_t j = 0; j < x.size(); ++j) z += s.weights[j] * x[j];
                              return z;
                          },
                          [&](const BoostState& s) {
                              double z = s.base_margin;
                              for (const auto& t : s.trees) z += s.learning_rate * t.predict(x);
                              return z;
                          },
                          [&](const ForestState& s) {
                              double p = 0.0;
                              for (const auto& t : s.trees) p += t.predict(x);
                              return s.trees.empty() ? 0.0 : p / static_cast<double>(s.trees.size());
                          },
                          [&](const NetState& s) {
                              double z = s.b2;
                              for (std::size_t h = 0; h < s.hidden; ++h) {
                                  double a = s.b1[h];
                                  for (std::size_t j = 0; j < s.inputs; ++j) a += x[j] * s.w1[j * s.hidden + h];
                                  if (a > 0.0) z += a * s.w2[h];
                              }
                              return z;
                          },
                      },
                      *state_);
}

double TrainedModel::predict_one(std::span<const double> x) const {
    const double m = margin(x);
    if (spec_.family == Family::forest) return std::clamp(m, 0.0, 1.0);
    return logistic(m);
}

void TrainedModel::predict_proba(const Matrix& X, std::span<double> out) const {
    if (out.size() != X.rows()) throw std::invalid_argument("predict: output length mismatch");
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_one(X.row(r));
}

std::vector<double> TrainedModel::predict_proba(const Matrix& X) const {
    std::vector<double> out(X.rows());
    predict_proba(X, out);
    return out;
}

nlohmann::json TrainedModel::to_json() const {
    nlohmann::json state = std::visit(
        overloaded{
            [](const LogitState& s) -> nlohmann::json { return {{"weights", s.weights}, {"intercept", s.intercept}}; },
            [](const BoostState& s) -> nlohmann::json {
                return {{"base_margin", s.base_margin}, {"learning_rate", s.learning_rate}, {"trees", trees_to_json(s.trees)}};
            },
            [](const ForestState& s) -> nlohmann::json { return {{"trees", trees_to_json(s.trees)}}; },
            [](const NetState& s) -> nlohmann::json {
                return {{"inputs", s.inputs}, {"hidden", s.hidden}, {"w1", s.w1}, {"b1", s.b1}, {"w2", s.w2}, {"b2", s.b2}};
            },
        },
        *state_);
    return {{"format_version", kModelFormatVersion},
            {"family", to_string(spec_.family)},
            {"loss", to_string(spec_.loss)},
            {"seed", spec_.seed},
            {"hyperparameters", hyperparams_to_json(spec_.hyper)},
            {"n_features", n_features_},
            {"loss_curve", *loss_curve_},
            {"state", std::move(state)}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
        throw std::invalid_argument("model file format version " + std::to_string(version) + " is not supported");
    ModelSpec spec;
    spec.family = family_from_string(j.at("family").get<std::string>());
    spec.loss = loss_from_string(j.at("loss").get<std::string>());
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.hyper = hyperparams_from_json(spec.family, j.at("hyperparameters"));
    const auto& s = j.at("state");
    ModelState state;
    switch (spec.family) {
        case Family::logit:
            state = LogitState{s.at("weights").get<std::vector<double>>(), s.at("intercept").get<double>()};
            break;
        case Family::boost:
            state = BoostState{s.at("base_margin").get<double>(), s.at("learning_rate").get<double>(),
                               trees_from_json(s.at("trees"))};
            break;
        case Family::forest: state = ForestState{trees_from_json(s.at("trees"))}; break;
        case Family::net:
            state = NetState{s.at("inputs").get<std::size_t>(), s.at("hidden").get<std::size_t>(),
                             s.at("w1").get<std::vector<double>>(),  s.at("b1").get<std::vector<double>>(),
                             s.at("w2").get<std::vector<double>>(),  s.at("b2").get<double>()};
            break;
    }
    return TrainedModel(std::move(spec), j.at("n_features").get<std::size_t>(), std::move(state),
                        j.value("loss_curve", std::vector<double>{}));
}

TrainedModel fit(const ModelSpec& spec, const TrainingSet& data) {
    if (family_of(spec.hyper) != spec.family) throw std::invalid_argument("fit: hyperparameters do not match family");
    if (data.X.rows() != data.y.size()) throw std::invalid_argument("fit: X and y lengths differ");
    if (spec.loss == LossKind::aec && (!data.costs || data.costs->size() != data.y.size()))
        throw std::invalid_argument("fit: the AEC loss needs a cost set aligned with the labels");
    switch (spec.family) {
        case Family::logit: return fit_logit(data, std::get<LogitParams>(spec.hyper), spec.loss, spec.seed);
        case Family::boost: return fit_boost(data, std::get<BoostParams>(spec.hyper), spec.loss, spec.seed);
        case Family::forest: return fit_forest(data, std::get<ForestParams>(spec.hyper), spec.loss, spec.seed);
        case Family::net: return fit_net(data, std::get<NetParams>(spec.hyper), spec.loss, spec.seed);
    }
    throw std::invalid_argument("fit: unknown family");
}

double bayes_threshold(double c_fn, double c_fp) noexcept {
    const double total = c_fn + c_fp;
    return total > 0.0 ? c_fp / total : 0.5;
}

std::vector<int> bayes_classify(std::span<const double> s, const CostSet& costs) {
    if (s.size() != costs.size()) throw std::invalid_argument("bayes_classify: length mismatch");
    std::vector<int> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] > bayes_threshold(costs.c_fn[i], costs.c_fp[i]) ? 1 : 0;
    return out;
}

std::vector<int> threshold_classify(std::span<const double> s, double threshold) {
    std::vector<int> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] > threshold ? 1 : 0;
    return out;
}

}  // namespace idcs
