#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace idcs {

namespace {

struct LogitProblem {
    const TrainingSet& data;
    const Objective& obj;
    Penalty penalty;
    double inv_c;    // 1 / C
    bool frozen;     // C = 0: weights stay at zero

    std::size_t dim() const { return data.X.cols(); }

    // Smooth part: mean loss, plus the L2 term when used.
    double smooth(const std::vector<double>& w, double b, std::vector<double>* gw, double* gb) const {
        const std::size_t n = data.X.rows(), d = dim();
        if (gw) gw->assign(d, 0.0);
        if (gb) *gb = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = data.X.row(i);
            double z = b;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
            total += obj.value(i, data.y[i], z);
            if (gw) {
                const double g = obj.grad_hess(i, data.y[i], z).grad;
                for (std::size_t j = 0; j < d; ++j) (*gw)[j] += g * x[j];
                *gb += g;
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        double f = total * inv_n;
        if (gw) {
            for (auto& g : *gw) g *= inv_n;
            *gb *= inv_n;
        }
        if (penalty == Penalty::l2 && !frozen) {
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                sq += w[j] * w[j];
                if (gw) (*gw)[j] += inv_c * w[j];
            }
            f += 0.5 * inv_c * sq;
        }
        if (frozen && gw) std::fill(gw->begin(), gw->end(), 0.0);
        return f;
    }

    double nonsmooth(const std::vector<double>& w) const {
        if (penalty != Penalty::l1 || frozen) return 0.0;
        double s = 0.0;
        for (double v : w) s += std::abs(v);
        return inv_c * s;
    }

    void prox(std::vector<double>& w, double step) const {
        if (frozen) {
            std::fill(w.begin(), w.end(), 0.0);
            return;
        }
        if (penalty != Penalty::l1) return;
        const double t = step * inv_c;
        for (auto& v : w) v = std::copysign(std::max(std::abs(v) - t, 0.0), v);
    }
};

}  // namespace

TrainedModel fit_logit(const TrainingSet& data, const LogitParams& params, LossKind loss, std::uint64_t seed) {
    detail::check_training_set(data, "fit_logit");
    if (params.C < 0.0) throw std::invalid_argument("fit_logit: C must be non-negative");
    const auto obj = detail::make_objective(data, loss);
    const bool frozen = params.C == 0.0;
    // Penalty weight 1/(C n): the per-row form of C * sum(loss) + penalty.
    const double n = static_cast<double>(data.y.size());
    const LogitProblem prob{data, obj, params.penalty, frozen ? 0.0 : 1.0 / (params.C * n), frozen};

    const std::size_t d = data.X.cols();
    std::vector<double> w(d, 0.0), gw, w_new(d), gw_new;
    double b = detail::base_margin(data, loss), gb = 0.0, gb_new = 0.0;

    double f = prob.smooth(w, b, &gw, &gb);
    if (!std::isfinite(f)) throw TrainingError("fit_logit: non-finite initial loss");
    std::vector<double> curve{f + prob.nonsmooth(w)};

    double step = 1.0;
    for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
        bool accepted = false;
        double f_new = 0.0, b_new = 0.0, moved = 0.0;
        for (int tries = 0; tries < 60; ++tries) {
            for (std::size_t j = 0; j < d; ++j) w_new[j] = w[j] - step * gw[j];
            prob.prox(w_new, step);
            b_new = b - step * gb;
            f_new = prob.smooth(w_new, b_new, nullptr, nullptr);
            if (!std::isfinite(f_new)) {
                step *= 0.5;
                continue;
            }
            // Sufficient decrease for a proximal step; it also guarantees the
            // full objective does not increase.
            double lin = gb * (b_new - b), sq = (b_new - b) * (b_new - b);
            for (std::size_t j = 0; j < d; ++j) {
                const double dj = w_new[j] - w[j];
                lin += gw[j] * dj;
                sq += dj * dj;
            }
            if (f_new <= f + lin + sq / (2.0 * step) + 1e-15 * std::abs(f)) {
                accepted = true;
                moved = std::sqrt(sq);
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        f_new = prob.smooth(w_new, b_new, &gw_new, &gb_new);
        if (!std::isfinite(f_new))
            throw TrainingError("fit_logit: non-finite loss at epoch " + std::to_string(epoch));
        const double mapping_norm = moved / step;

        // Barzilai-Borwein step for the next iteration.
        double sy = (b_new - b) * (gb_new - gb), ss = (b_new - b) * (b_new - b);
        for (std::size_t j = 0; j < d; ++j) {
            const double s = w_new[j] - w[j];
            sy += s * (gw_new[j] - gw[j]);
            ss += s * s;
        }
        w.swap(w_new);
        gw.swap(gw_new);
        b = b_new;
        gb = gb_new;
        f = f_new;
        curve.push_back(f + prob.nonsmooth(w));

        if (mapping_norm < params.tolerance) break;
        step = sy > 0.0 ? std::clamp(ss / sy, 1e-6, 1e6) : std::min(step * 2.0, 1e6);
    }

    ModelSpec spec{Family::logit, loss, params, seed};
    return TrainedModel(std::move(spec), d, LogitState{std::move(w), b}, std::move(curve));
}

}  // namespace idcs
