#include "common.hpp"

#include "idcs/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace idcs {

namespace {

using MatrixXdR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Params {
    MatrixXdR w1;            // inputs x hidden
    Eigen::RowVectorXd b1;   // hidden
    Eigen::VectorXd w2;      // hidden
    double b2 = 0.0;
};

struct Velocity {
    MatrixXdR w1;
    Eigen::RowVectorXd b1;
    Eigen::VectorXd w2;
    double b2 = 0.0;

    void reset(const Params& p) {
        w1 = MatrixXdR::Zero(p.w1.rows(), p.w1.cols());
        b1 = Eigen::RowVectorXd::Zero(p.b1.size());
        w2 = Eigen::VectorXd::Zero(p.w2.size());
        b2 = 0.0;
    }
};

Eigen::VectorXd forward(const Params& p, const MatrixXdR& X, MatrixXdR* hidden_pre) {
    MatrixXdR z1 = X * p.w1;
    z1.rowwise() += p.b1;
    Eigen::VectorXd out = z1.cwiseMax(0.0) * p.w2;
    out.array() += p.b2;
    if (hidden_pre) *hidden_pre = std::move(z1);
    return out;
}

// Mean objective over the given rows of the training set.
double evaluate(const Params& p, const MatrixXdR& X, std::span<const std::size_t> rows, std::span<const int> y,
                const Objective& obj) {
    if (rows.empty()) return 0.0;
    MatrixXdR sub(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(rows[k]));
    const auto z = forward(p, sub, nullptr);
    double total = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) total += obj.value(rows[k], y[rows[k]], z(static_cast<Eigen::Index>(k)));
    return total / static_cast<double>(rows.size());
}

// Stratified validation slice; empty when either class is too small to spare a row.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> validation_split(std::span<const int> y, double fraction,
                                                                               Rng& rng) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos : neg).push_back(i);
    const std::size_t vp = round_half_up(fraction * static_cast<double>(pos.size()));
    const std::size_t vn = round_half_up(fraction * static_cast<double>(neg.size()));
    std::vector<std::size_t> train(y.size());
    std::iota(train.begin(), train.end(), std::size_t{0});
    if (fraction <= 0.0 || vp < 1 || vn < 1 || vp >= pos.size() || vn >= neg.size()) return {train, {}};
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::vector<std::size_t> val(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(vp));
    val.insert(val.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(vn));
    std::sort(val.begin(), val.end());
    train.clear();
    std::size_t k = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (k < val.size() && val[k] == i) {
            ++k;
            continue;
        }
        train.push_back(i);
    }
    return {train, val};
}

}  // namespace

TrainedModel fit_net(const TrainingSet& data, const NetParams& params, LossKind loss, std::uint64_t seed) {
    detail::check_training_set(data, "fit_net");
    if (params.hidden < 1) throw std::invalid_argument("fit_net: hidden must be positive");
    if (params.batch_size < 1) throw std::invalid_argument("fit_net: batch_size must be positive");
    const auto obj = detail::make_objective(data, loss);
    const std::size_t n = data.X.rows(), d = data.X.cols(), hdim = static_cast<std::size_t>(params.hidden);
    const auto D = static_cast<Eigen::Index>(d), H = static_cast<Eigen::Index>(hdim);

    const MatrixXdR X = Eigen::Map<const MatrixXdR>(data.X.data().data(), static_cast<Eigen::Index>(n), D);

    Rng init_rng(derive_seed(seed, "net_init"));
    Rng split_rng(derive_seed(seed, "net_validation"));
    Rng batch_rng(derive_seed(seed, "net_batches"));

    Params p;
    {
        std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(d, 1))));
        std::normal_distribution<double> out(0.0, std::sqrt(1.0 / static_cast<double>(hdim)));
        p.w1.resize(D, H);
        for (Eigen::Index i = 0; i < D; ++i)
            for (Eigen::Index j = 0; j < H; ++j) p.w1(i, j) = he(init_rng);
        p.b1 = Eigen::RowVectorXd::Zero(H);
        p.w2.resize(H);
        for (Eigen::Index j = 0; j < H; ++j) p.w2(j) = out(init_rng);
        p.b2 = detail::base_margin(data, loss);
    }

    auto [train_rows, val_rows] = validation_split(data.y, params.validation_fraction, split_rng);
    const bool use_val = !val_rows.empty();

    const double initial = evaluate(p, X, train_rows, data.y, obj);
    if (!std::isfinite(initial)) throw TrainingError("fit_net: non-finite initial loss");
    std::vector<double> curve{initial};
    double accepted_loss = initial;

    double lr = params.learning_rate;
    Velocity v;
    v.reset(p);
    Params best = p;
    double best_score = use_val ? evaluate(p, X, val_rows, data.y, obj) : initial;
    int stale = 0;

    std::vector<std::size_t> order = train_rows;
    const std::size_t B = static_cast<std::size_t>(params.batch_size);
    MatrixXdR xb, z1;
    for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
        const Params start = p;
        std::shuffle(order.begin(), order.end(), batch_rng);
        for (std::size_t lo = 0; lo < order.size(); lo += B) {
            const std::size_t hi = std::min(order.size(), lo + B);
            const auto m = static_cast<Eigen::Index>(hi - lo);
            xb.resize(m, D);
            for (Eigen::Index k = 0; k < m; ++k) xb.row(k) = X.row(static_cast<Eigen::Index>(order[lo + static_cast<std::size_t>(k)]));
            const Eigen::VectorXd z = forward(p, xb, &z1);
            Eigen::VectorXd g(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                const auto r = order[lo + static_cast<std::size_t>(k)];
                g(k) = obj.grad_hess(r, data.y[r], z(k)).grad / static_cast<double>(m);
            }
            const MatrixXdR act = z1.cwiseMax(0.0);
            const Eigen::VectorXd gw2 = act.transpose() * g;
            const double gb2 = g.sum();
            MatrixXdR dz1 = g * p.w2.transpose();
            dz1.array() *= (z1.array() > 0.0).cast<double>();
            const MatrixXdR gw1 = xb.transpose() * dz1;
            const Eigen::RowVectorXd gb1 = dz1.colwise().sum();

            v.w1 = params.momentum * v.w1 - lr * gw1;
            v.b1 = params.momentum * v.b1 - lr * gb1;
            v.w2 = params.momentum * v.w2 - lr * gw2;
            v.b2 = params.momentum * v.b2 - lr * gb2;
            p.w1 += v.w1;
            p.b1 += v.b1;
            p.w2 += v.w2;
            p.b2 += v.b2;
        }

        const double loss_now = evaluate(p, X, train_rows, data.y, obj);
        if (!std::isfinite(loss_now) || loss_now > 1e3 * std::max(initial, 1e-12))
            throw TrainingError("fit_net: training diverged at epoch " + std::to_string(epoch) + " (loss " +
                                std::to_string(loss_now) + ", initial " + std::to_string(initial) + ")");
        if (loss_now > accepted_loss) {
            // Rejected epoch: roll back and continue with a smaller step.
            p = start;
            v.reset(p);
            lr *= 0.5;
            if (lr < 1e-10) break;
            continue;
        }
        accepted_loss = loss_now;
        curve.push_back(loss_now);

        const double score = use_val ? evaluate(p, X, val_rows, data.y, obj) : loss_now;
        if (score < best_score - 1e-12) {
            best_score = score;
            best = p;
            stale = 0;
        } else if (++stale >= params.patience) {
            break;
        }
    }
    if (use_val) p = best;

    NetState state;
    state.inputs = d;
    state.hidden = hdim;
    state.w1.assign(p.w1.data(), p.w1.data() + p.w1.size());
    state.b1.assign(p.b1.data(), p.b1.data() + p.b1.size());
    state.w2.assign(p.w2.data(), p.w2.data() + p.w2.size());
    state.b2 = p.b2;

    ModelSpec spec{Family::net, loss, params, seed};
    return TrainedModel(std::move(spec), d, std::move(state), std::move(curve));
}

}  // namespace idcs
