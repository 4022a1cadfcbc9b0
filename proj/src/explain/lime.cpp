#include "idcs/explain.hpp"
#include "idcs/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace idcs {

namespace {

double column_sd(const Matrix& X, std::size_t c, double mean) {
    const std::size_t n = X.rows();
    if (n < 2) return 1.0;
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (X(r, c) - mean) * (X(r, c) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    return sd > 1e-12 ? sd : 1.0;
}

double column_mean(const Matrix& X, std::size_t c) {
    double s = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) s += X(r, c);
    return X.rows() ? s / static_cast<double>(X.rows()) : 0.0;
}

// Index within the group of x's active one-hot column, or -1 when none is set.
int active_level(std::span<const double> x, const std::vector<std::size_t>& cols) {
    for (std::size_t k = 0; k < cols.size(); ++k)
        if (x[cols[k]] > 0.5) return static_cast<int>(k);
    return -1;
}

}  // namespace

TrainSummary TrainSummary::fit(const Dataset& train) {
    if (train.rows() == 0) throw std::invalid_argument("lime: empty training data");
    TrainSummary s;
    s.groups = FeatureGroups::from_dataset(train);
    for (const auto& b : train.blocks) {
        Group g;
        g.kind = b.kind;
        if (b.kind == FeatureKind::numeric) {
            g.value_column = b.value_column();
            g.mean = column_mean(train.X, g.value_column);
            g.sd = column_sd(train.X, g.value_column, g.mean);
        } else {
            double total = 0.0;
            for (auto c : b.columns) {
                g.level_freq.push_back(column_mean(train.X, c));
                total += g.level_freq.back();
            }
            if (total > 0.0)
                for (auto& f : g.level_freq) f /= total;
        }
        s.stats.push_back(std::move(g));
    }
    return s;
}

TrainSummary TrainSummary::fit(const Matrix& train) {
    if (train.rows() == 0) throw std::invalid_argument("lime: empty training data");
    TrainSummary s;
    s.groups = FeatureGroups::singletons(train.cols());
    for (std::size_t c = 0; c < train.cols(); ++c) {
        Group g;
        g.value_column = c;
        g.mean = column_mean(train, c);
        g.sd = column_sd(train, c, g.mean);
        s.stats.push_back(g);
    }
    return s;
}

RidgeFit weighted_ridge(const Matrix& Z, std::span<const double> target, std::span<const double> weights,
                        double alpha) {
    const std::size_t n = Z.rows(), p = Z.cols();
    if (target.size() != n || weights.size() != n) throw std::invalid_argument("ridge: length mismatch");
    double wsum = 0.0, ybar = 0.0;
    std::vector<double> zbar(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        wsum += weights[i];
        ybar += weights[i] * target[i];
        for (std::size_t j = 0; j < p; ++j) zbar[j] += weights[i] * Z(i, j);
    }
    if (!(wsum > 0.0)) throw std::invalid_argument("ridge: weights sum to zero");
    ybar /= wsum;
    for (auto& v : zbar) v /= wsum;

    const auto P = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(P, P);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(P);
    Eigen::VectorXd zc(P);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) zc(static_cast<Eigen::Index>(j)) = Z(i, j) - zbar[j];
        A.selfadjointView<Eigen::Lower>().rankUpdate(zc, weights[i]);
        b += weights[i] * (target[i] - ybar) * zc;
    }
    A = A.selfadjointView<Eigen::Lower>();

    RidgeFit fit;
    Eigen::VectorXd coef;
    bool solved = false;
    for (int attempt = 0; attempt < 2 && !solved; ++attempt) {
        const double a = attempt == 0 ? alpha : alpha * 10.0;
        Eigen::MatrixXd M = A;
        M.diagonal().array() += a;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
        const double min_pivot = ldlt.vectorD().size() ? ldlt.vectorD().minCoeff() : 1.0;
        if (!(min_pivot > 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff()))) continue;
        coef = ldlt.solve(b);
        if (!coef.allFinite()) continue;
        fit.alpha = a;
        solved = true;
    }
    if (!solved) throw std::runtime_error("ridge: system is singular even after increasing the ridge strength");

    fit.coef.assign(coef.data(), coef.data() + coef.size());
    fit.intercept = ybar;
    for (std::size_t j = 0; j < p; ++j) fit.intercept -= fit.coef[j] * zbar[j];

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = fit.intercept;
        for (std::size_t j = 0; j < p; ++j) pred += fit.coef[j] * Z(i, j);
        ss_res += weights[i] * (target[i] - pred) * (target[i] - pred);
        ss_tot += weights[i] * (target[i] - ybar) * (target[i] - ybar);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res > 0.0 ? 0.0 : 1.0);
    return fit;
}

LimeSample lime_sample(const TrainSummary& summary, std::span<const double> x, std::size_t n_samples,
                       std::uint64_t seed) {
    const std::size_t P = summary.groups.size();
    if (n_samples < 1) throw std::invalid_argument("lime: n_samples must be positive");
    for (const auto& g : summary.groups.columns)
        for (auto c : g)
            if (c >= x.size()) throw std::invalid_argument("lime: instance does not match the training schema");

    LimeSample s;
    s.inputs = Matrix(n_samples, x.size());
    s.design = Matrix(n_samples, P);
    s.distance.assign(n_samples, 0.0);

    std::vector<double> design_x(P);
    std::vector<int> x_level(P, -1);
    for (std::size_t g = 0; g < P; ++g) {
        const auto& st = summary.stats[g];
        if (st.kind == FeatureKind::numeric) {
            design_x[g] = (x[st.value_column] - st.mean) / st.sd;
        } else {
            design_x[g] = 1.0;
            x_level[g] = active_level(x, summary.groups.columns[g]);
        }
    }

    Rng rng(derive_seed(seed, "lime"));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::discrete_distribution<int>> level_dist;
    for (const auto& st : summary.stats) {
        if (st.kind == FeatureKind::categorical && !st.level_freq.empty())
            level_dist.emplace_back(st.level_freq.begin(), st.level_freq.end());
        else
            level_dist.emplace_back();
    }

    for (std::size_t i = 0; i < n_samples; ++i) {
        auto row = s.inputs.row(i);
        std::copy(x.begin(), x.end(), row.begin());
        double d2 = 0.0;
        for (std::size_t g = 0; g < P; ++g) {
            const auto& st = summary.stats[g];
            double z = design_x[g];
            if (i > 0) {
                if (st.kind == FeatureKind::numeric) {
                    const double v = x[st.value_column] + st.sd * normal(rng);
                    row[st.value_column] = v;
                    z = (v - st.mean) / st.sd;
                } else if (!st.level_freq.empty()) {
                    const auto& cols = summary.groups.columns[g];
                    const int level = level_dist[g](rng);
                    for (std::size_t k = 0; k < cols.size(); ++k) row[cols[k]] = static_cast<int>(k) == level ? 1.0 : 0.0;
                    z = level == x_level[g] ? 1.0 : 0.0;
                }
            }
            s.design(i, g) = z;
            d2 += (z - design_x[g]) * (z - design_x[g]);
        }
        s.distance[i] = std::sqrt(d2);
    }
    return s;
}

Explanation lime_fit_surrogate(const LimeSample& sample, std::span<const double> scores, const LimeConfig& cfg) {
    const std::size_t n = sample.design.rows(), P = sample.design.cols();
    if (scores.size() != n) throw std::invalid_argument("lime: score count does not match the sample");
    const double width = cfg.kernel_width > 0.0 ? cfg.kernel_width : 0.75 * std::sqrt(static_cast<double>(std::max<std::size_t>(P, 1)));
    std::vector<double> w(n, 1.0);
    if (std::isfinite(width))
        for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(-sample.distance[i] * sample.distance[i] / (width * width));
    const auto fit = weighted_ridge(sample.design, scores, w, cfg.ridge);
    Explanation e;
    e.method = Method::lime;
    e.values = fit.coef;
    e.local_r2 = fit.r2;
    return e;
}

Explanation lime_explain(const ScoreFn& f, const TrainSummary& summary, std::span<const double> x,
                         const LimeConfig& cfg, std::uint64_t seed) {
    const auto sample = lime_sample(summary, x, cfg.n_samples, seed);
    std::vector<double> scores(sample.inputs.rows());
    f(sample.inputs, scores);
    return lime_fit_surrogate(sample, scores, cfg);
}

}  // namespace idcs
