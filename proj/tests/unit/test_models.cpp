#include "helpers.hpp"

#include "idcs/metrics.hpp"
#include "idcs/models.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace idcs;

namespace {

Dataset separable() {
    Dataset d;
    d.X = Matrix(8, 2);
    const double pts[8][2] = {{-2, -1}, {-1.5, -2}, {-1, -1.5}, {-2.5, -0.5}, {1, 2}, {2, 1}, {1.5, 1.5}, {0.5, 2.5}};
    for (std::size_t i = 0; i < 8; ++i) {
        d.X(i, 0) = pts[i][0];
        d.X(i, 1) = pts[i][1];
        d.y.push_back(i >= 4 ? 1 : 0);
        d.amount.push_back(100);
        d.revenue.push_back(10);
    }
    return d;
}

CostSet flat_costs(std::size_t n, double fn = 1.0, double fp = 1.0) {
    CostSet c;
    c.c_fn.assign(n, fn);
    c.c_fp.assign(n, fp);
    return c;
}

double accuracy(const TrainedModel& m, const Matrix& X, const std::vector<int>& y) {
    const auto s = m.predict_proba(X);
    double ok = 0;
    for (std::size_t i = 0; i < y.size(); ++i) ok += ((s[i] > 0.5) == (y[i] == 1));
    return ok / static_cast<double>(y.size());
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size()), mean = (n - 1) / 2;
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - mean) * (rb[i] - mean);
        da += (ra[i] - mean) * (ra[i] - mean);
        db += (rb[i] - mean) * (rb[i] - mean);
    }
    return num / std::sqrt(da * db);
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("model names") {
    CHECK(all_model_names().size() == 8);
    const auto s = parse_model_name("csboost");
    CHECK(s.family == Family::boost);
    CHECK(s.loss == LossKind::aec);
    CHECK(model_name(Family::net, LossKind::cross_entropy) == "net");
    CHECK_THROWS(parse_model_name("svm"));
}

TEST_CASE("logit separates a separable toy set") {
    const auto d = separable();
    LogitParams p;
    p.C = 1e6;
    const auto m = fit_logit(TrainingSet{d.X, d.y}, p, LossKind::cross_entropy, 1);
    CHECK(accuracy(m, d.X, d.y) == 1.0);
}

TEST_CASE("expensive defaulter gets a higher score under the AEC fit") {
    auto d = testing::synthetic(200, 3, 12, 0.8);
    auto costs = flat_costs(d.rows());
    std::size_t target = 0;
    while (d.y[target] != 1) ++target;
    costs.c_fn[target] *= 100.0;
    LogitParams p;
    p.C = 10.0;
    const auto ce = fit_logit(TrainingSet{d.X, d.y, &costs}, p, LossKind::cross_entropy, 1);
    const auto aec = fit_logit(TrainingSet{d.X, d.y, &costs}, p, LossKind::aec, 1);
    CHECK(aec.predict_one(d.X.row(target)) > ce.predict_one(d.X.row(target)));
}

TEST_CASE("strong L2 penalty shrinks the weights") {
    const auto d = testing::synthetic(200, 4, 3);
    LogitParams p;
    p.C = 1e-7;
    const auto m = fit_logit(TrainingSet{d.X, d.y}, p, LossKind::cross_entropy, 1);
    for (double w : std::get<LogitState>(m.state()).weights) CHECK(std::abs(w) < 1e-3);
    p.C = 0.0;
    const auto z = fit_logit(TrainingSet{d.X, d.y}, p, LossKind::cross_entropy, 1);
    for (double w : std::get<LogitState>(z.state()).weights) CHECK(w == 0.0);
}

TEST_CASE("logit and net loss curves never increase") {
    const auto d = testing::synthetic(300, 4, 9);
    const auto costs = testing::costs_for(d);
    for (auto loss : {LossKind::cross_entropy, LossKind::aec}) {
        LogitParams lp;
        lp.penalty = Penalty::l1;
        lp.C = 0.1;
        const auto m = fit_logit(TrainingSet{d.X, d.y, &costs}, lp, loss, 1);
        const auto& c = m.loss_curve();
        for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] <= c[i - 1] + 1e-12);
        NetParams np;
        np.max_epochs = 30;
        const auto n = fit_net(TrainingSet{d.X, d.y, &costs}, np, loss, 1);
        const auto& nc = n.loss_curve();
        for (std::size_t i = 1; i < nc.size(); ++i) CHECK(nc[i] <= nc[i - 1] + 1e-12);
    }
}

TEST_CASE("zero-weight logit scores 0.5") {
    const auto d = testing::synthetic(10, 3, 1);
    TrainedModel m(ModelSpec{Family::logit, LossKind::cross_entropy, LogitParams{}, 0}, 3,
                   LogitState{std::vector<double>(3, 0.0), 0.0});
    for (double s : m.predict_proba(d.X)) CHECK(s == 0.5);
}

TEST_CASE("single boosting round matches the hand-computed Newton step") {
    Matrix X(4, 1);
    for (std::size_t i = 0; i < 4; ++i) X(i, 0) = static_cast<double>(i);
    const std::vector<int> y{0, 0, 1, 1};
    BoostParams p;
    p.n_rounds = 1;
    p.max_depth = 1;
    p.min_child_weight = 0;
    const auto m = fit_boost(TrainingSet{X, y}, p, LossKind::cross_entropy, 1);
    // base logit(0.5) = 0; g = s - y = +-0.5, h = 0.25; leaf = -G/(H + 1) = -+1/1.5
    const double leaf = 1.0 / 1.5;
    CHECK(m.margin(X.row(0)) == doctest::Approx(-0.3 * leaf).epsilon(1e-12));
    CHECK(m.margin(X.row(3)) == doctest::Approx(0.3 * leaf).epsilon(1e-12));
}

TEST_CASE("boosting margins are additive over trees") {
    const auto d = testing::synthetic(300, 4, 4);
    BoostParams p;
    p.n_rounds = 20;
    const auto m = fit_boost(TrainingSet{d.X, d.y}, p, LossKind::cross_entropy, 7);
    const auto& st = std::get<BoostState>(m.state());
    for (std::size_t i = 0; i < 20; ++i) {
        double z = st.base_margin;
        for (const auto& t : st.trees) z += st.learning_rate * t.predict(d.X.row(i));
        CHECK(m.margin(d.X.row(i)) == z);
    }
}

TEST_CASE("boosting memorizes the sgcs training data") {
    const auto schema = load_schema(testing::source_path("data/sgcs.schema.json"));
    auto d = one_hot_encode(load_csv(testing::source_path("data/sgcs.csv"), schema));
    d = Preprocessor::fit(d).apply(d);
    BoostParams p;
    p.max_depth = 3;
    p.n_rounds = 50;
    p.early_stopping_rounds = 50;
    const auto m = fit_boost(TrainingSet{d.X, d.y}, p, LossKind::cross_entropy, 1);
    CHECK(auc(d.y, m.predict_proba(d.X)) > 0.9);
}

TEST_CASE("higher gamma prunes at least as much") {
    const auto d = testing::synthetic(300, 5, 21);
    auto splits = [&](double gamma) {
        BoostParams p;
        p.gamma = gamma;
        p.n_rounds = 30;
        const auto m = fit_boost(TrainingSet{d.X, d.y}, p, LossKind::cross_entropy, 3);
        std::size_t n = 0;
        for (const auto& t : std::get<BoostState>(m.state()).trees) n += t.n_splits() > 0;
        return n;
    };
    CHECK(splits(10.0) <= splits(0.0));
}

TEST_CASE("forest bagging") {
    const auto d = testing::synthetic(300, 5, 31);
    const auto costs = testing::costs_for(d);
    for (auto loss : {LossKind::cross_entropy, LossKind::aec}) {
        ForestParams small, big;
        small.n_estimators = 20;
        big.n_estimators = 100;
        const auto a = fit_forest(TrainingSet{d.X, d.y, &costs}, small, loss, 5);
        const auto b = fit_forest(TrainingSet{d.X, d.y, &costs}, big, loss, 5);
        const auto sa = a.predict_proba(d.X), sb = b.predict_proba(d.X);
        CHECK(sa != sb);
        for (double v : sa) CHECK((v >= 0.0 && v <= 1.0));
        for (double v : sb) CHECK((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("forest depth cap") {
    const auto d = testing::synthetic(200, 4, 2);
    ForestParams p;
    p.max_depth = 3;
    p.n_estimators = 5;
    const auto m = fit_forest(TrainingSet{d.X, d.y}, p, LossKind::cross_entropy, 1);
    for (const auto& t : std::get<ForestState>(m.state()).trees) CHECK(t.depth() <= 3);
}

TEST_CASE("net learns XOR") {
    Dataset d;
    d.X = Matrix(400, 2);
    Rng rng(3);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (std::size_t i = 0; i < 400; ++i) {
        const int a = static_cast<int>(i % 2), b = static_cast<int>((i / 2) % 2);
        d.X(i, 0) = (a ? 1.0 : -1.0) + noise(rng);
        d.X(i, 1) = (b ? 1.0 : -1.0) + noise(rng);
        d.y.push_back(a ^ b);
    }
    NetParams p;
    p.hidden = 32;
    p.learning_rate = 0.05;
    p.max_epochs = 500;
    p.patience = 50;
    const auto m = fit_net(TrainingSet{d.X, d.y}, p, LossKind::cross_entropy, 1);
    CHECK(accuracy(m, d.X, d.y) == 1.0);
}

TEST_CASE("net with equal costs ranks like the cross-entropy fit") {
    const auto d = testing::synthetic(400, 3, 44);
    const auto costs = flat_costs(d.rows(), 1.0, 1.0);
    NetParams p;
    p.max_epochs = 100;
    const auto ce = fit_net(TrainingSet{d.X, d.y, &costs}, p, LossKind::cross_entropy, 2);
    const auto aec = fit_net(TrainingSet{d.X, d.y, &costs}, p, LossKind::aec, 2);
    CHECK(spearman(ce.predict_proba(d.X), aec.predict_proba(d.X)) > 0.9);
}

TEST_CASE("net parameter count") {
    const auto d = testing::synthetic(100, 7, 1);
    NetParams p;
    p.hidden = 128;
    p.max_epochs = 2;
    const auto m = fit_net(TrainingSet{d.X, d.y}, p, LossKind::cross_entropy, 1);
    CHECK(std::get<NetState>(m.state()).parameter_count() == 7 * 128 + 128 + 128 + 1);
}

TEST_CASE("fits are deterministic and survive serialization") {
    const auto d = testing::synthetic(250, 4, 6);
    const auto costs = testing::costs_for(d);
    for (const auto& name : all_model_names()) {
        auto spec = parse_model_name(name);
        spec.seed = 99;
        if (spec.family == Family::net) std::get<NetParams>(spec.hyper).max_epochs = 20;
        if (spec.family == Family::forest) std::get<ForestParams>(spec.hyper).n_estimators = 10;
        const auto a = fit(spec, TrainingSet{d.X, d.y, &costs});
        const auto b = fit(spec, TrainingSet{d.X, d.y, &costs});
        const auto sa = a.predict_proba(d.X);
        CHECK_MESSAGE(sa == b.predict_proba(d.X), name);
        CHECK(a.to_json() == b.to_json());
        const auto c = TrainedModel::from_json(nlohmann::json::parse(a.to_json().dump()));
        CHECK_MESSAGE(c.predict_proba(d.X) == sa, name);
        CHECK(sa.size() == d.rows());
    }
}

TEST_CASE("bayes threshold classification") {
    CHECK(bayes_threshold(10, 10) == 0.5);
    CHECK(bayes_threshold(75, 25) == doctest::Approx(0.25));
    CostSet c;
    c.c_fn = {75};
    c.c_fp = {25};
    CHECK(bayes_classify(std::vector<double>{0.3}, c) == std::vector<int>{1});
    CHECK(bayes_classify(std::vector<double>{0.2}, c) == std::vector<int>{0});
}

TEST_CASE("hyperparameter json rejects unknown keys") {
    CHECK_THROWS(hyperparams_from_json(Family::boost, {{"depth", 3}}));
    const auto h = hyperparams_from_json(Family::forest, {{"max_depth", nullptr}, {"n_estimators", 20}});
    CHECK(std::get<ForestParams>(h).max_depth == 0);
}

}  // TEST_SUITE
