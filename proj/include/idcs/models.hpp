#pragma once

#include "idcs/costs.hpp"
#include "idcs/losses.hpp"
#include "idcs/matrix.hpp"
#include "idcs/trees.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace idcs {

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Family { logit, boost, forest, net };

const char* to_string(Family f) noexcept;
Family family_from_string(std::string_view s);

enum class Penalty { l1, l2 };

struct LogitParams {
    Penalty penalty = Penalty::l2;
    // Inverse regularization strength; the objective is
    // mean loss + penalty(w) / (C * n), i.e. C * sum(loss) + penalty(w)
    // rescaled by 1/(C n). C = 0 pins every weight at zero.
    double C = 1.0;
    int max_epochs = 1000;
    double tolerance = 1e-6;
};

struct BoostParams {
    double learning_rate = 0.3;
    double min_child_weight = 1.0;
    int max_depth = 3;
    double colsample_bytree = 1.0;
    double gamma = 0.0;
    int n_rounds = 100;
    double lambda = 1.0;
    int early_stopping_rounds = 10;
    double early_stopping_tolerance = 1e-6;
};

inline constexpr int kUnlimitedDepthCap = 64;

struct ForestParams {
    int max_depth = 0;  // 0 = unlimited (capped at kUnlimitedDepthCap)
    int n_estimators = 100;
    int min_samples_split = 2;
    int max_features = 0;  // 0 = floor(sqrt(D))
};

struct NetParams {
    double learning_rate = 0.005;
    int hidden = 32;
    double momentum = 0.9;
    int batch_size = 128;
    int max_epochs = 200;
    int patience = 10;
    double validation_fraction = 0.1;
};

using Hyperparams = std::variant<LogitParams, BoostParams, ForestParams, NetParams>;

Family family_of(const Hyperparams& h) noexcept;
Hyperparams default_hyperparams(Family f);
nlohmann::json hyperparams_to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(Family f, const nlohmann::json& j);

struct ModelSpec {
    Family family = Family::logit;
    LossKind loss = LossKind::cross_entropy;
    Hyperparams hyper = LogitParams{};
    std::uint64_t seed = 0;

    // "logit", "cslogit", "boost", "csboost", ...
    std::string name() const;
};

std::string model_name(Family f, LossKind loss);
// Parses "csboost" etc. into family + loss with default hyperparameters.
ModelSpec parse_model_name(std::string_view name);
const std::vector<std::string>& all_model_names();

struct LogitState {
    std::vector<double> weights;
    double intercept = 0.0;
};

struct BoostState {
    double base_margin = 0.0;
    double learning_rate = 0.3;
    std::vector<Tree> trees;
};

struct ForestState {
    std::vector<Tree> trees;
};

struct NetState {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::vector<double> w1;  // inputs x hidden, row-major
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;

    std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + 1; }
};

using ModelState = std::variant<LogitState, BoostState, ForestState, NetState>;

// Immutable fitted classifier. Copies share state.
class TrainedModel {
public:
    TrainedModel(ModelSpec spec, std::size_t n_features, ModelState state, std::vector<double> loss_curve = {});

    Family family() const noexcept { return spec_.family; }
    LossKind loss() const noexcept { return spec_.loss; }
    const ModelSpec& spec() const noexcept { return spec_; }
    std::string name() const { return spec_.name(); }
    std::size_t n_features() const noexcept { return n_features_; }
    const std::vector<double>& loss_curve() const noexcept { return *loss_curve_; }
    const ModelState& state() const noexcept { return *state_; }

    // Raw score before the logistic link (logit, boost, net); forests return
    // the probability itself.
    double margin(std::span<const double> x) const;
    double predict_one(std::span<const double> x) const;
    std::vector<double> predict_proba(const Matrix& X) const;
    void predict_proba(const Matrix& X, std::span<double> out) const;

    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);

private:
    ModelSpec spec_;
    std::size_t n_features_ = 0;
    std::shared_ptr<const ModelState> state_;
    std::shared_ptr<const std::vector<double>> loss_curve_;
};

inline constexpr int kModelFormatVersion = 1;

// Training inputs. costs is required when loss == aec and is aligned with y.
struct TrainingSet {
    const Matrix& X;
    std::span<const int> y;
    const CostSet* costs = nullptr;
};

TrainedModel fit_logit(const TrainingSet& data, const LogitParams& params, LossKind loss, std::uint64_t seed);
TrainedModel fit_boost(const TrainingSet& data, const BoostParams& params, LossKind loss, std::uint64_t seed);
TrainedModel fit_forest(const TrainingSet& data, const ForestParams& params, LossKind loss, std::uint64_t seed);
TrainedModel fit_net(const TrainingSet& data, const NetParams& params, LossKind loss, std::uint64_t seed);

TrainedModel fit(const ModelSpec& spec, const TrainingSet& data);

// Expected-cost-minimizing threshold c_fp / (c_fp + c_fn); 0.5 when both are 0.
double bayes_threshold(double c_fn, double c_fp) noexcept;
// y_hat = 1 iff s > threshold_i.
std::vector<int> bayes_classify(std::span<const double> s, const CostSet& costs);
std::vector<int> threshold_classify(std::span<const double> s, double threshold);

}  // namespace idcs
