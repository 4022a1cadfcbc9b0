#include "idcs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace idcs {

const char* to_string(LossKind kind) noexcept { return kind == LossKind::aec ? "aec" : "cross_entropy"; }

LossKind loss_from_string(std::string_view s) {
    if (s == "aec") return LossKind::aec;
    if (s == "cross_entropy" || s == "ce") return LossKind::cross_entropy;
    throw std::invalid_argument("unknown loss '" + std::string(s) + "'");
}

double logistic(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) noexcept {
    p = std::clamp(p, kLogClamp, 1.0 - kLogClamp);
    return std::log(p / (1.0 - p));
}

double aec_instance(int y, double s, double c_fn, double c_fp) noexcept {
    return y == 1 ? (1.0 - s) * c_fn : s * c_fp;
}

GradHess aec_grad_hess(int y, double z, double c_fn, double c_fp) noexcept {
    const double s = logistic(z);
    const double w = y == 1 ? -c_fn : c_fp;
    const double ds = s * (1.0 - s);
    return {w * ds, w * ds * (1.0 - 2.0 * s)};
}

double floored_hessian(double h, double floor) noexcept { return std::max(std::abs(h), floor); }

double cross_entropy(int y, double s) noexcept {
    s = std::clamp(s, kLogClamp, 1.0 - kLogClamp);
    return y == 1 ? -std::log(s) : -std::log(1.0 - s);
}

GradHess ce_grad_hess(int y, double z) noexcept {
    const double s = logistic(z);
    return {s - static_cast<double>(y), s * (1.0 - s)};
}

double mean_aec(std::span<const int> y, std::span<const double> s, const CostSet& costs) {
    if (y.size() != s.size() || y.size() != costs.size()) throw std::invalid_argument("mean_aec: length mismatch");
    if (y.empty()) throw std::invalid_argument("mean_aec: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += aec_instance(y[i], s[i], costs.c_fn[i], costs.c_fp[i]);
    return total / static_cast<double>(y.size());
}

Objective Objective::cross_entropy() { return Objective{}; }

Objective Objective::aec(std::span<const int> y, const CostSet& costs) {
    if (y.size() != costs.size()) throw std::invalid_argument("objective: cost set does not match labels");
    Objective o;
    o.kind_ = LossKind::aec;
    o.c_fn_ = costs.c_fn;
    o.c_fp_ = costs.c_fp;
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += y[i] == 1 ? costs.c_fn[i] : costs.c_fp[i];
    const double mean = y.empty() ? 0.0 : total / static_cast<double>(y.size());
    o.scale_ = mean > 0.0 ? mean : 1.0;
    return o;
}

double Objective::value(std::size_t row, int y, double z) const noexcept {
    const double s = logistic(z);
    if (kind_ == LossKind::cross_entropy) return idcs::cross_entropy(y, s);
    return aec_instance(y, s, c_fn_[row], c_fp_[row]) / scale_;
}

GradHess Objective::grad_hess(std::size_t row, int y, double z) const noexcept {
    if (kind_ == LossKind::cross_entropy) return ce_grad_hess(y, z);
    auto gh = aec_grad_hess(y, z, c_fn_[row], c_fp_[row]);
    return {gh.grad / scale_, gh.hess / scale_};
}

Objective Objective::subset(std::span<const std::size_t> rows) const {
    Objective o;
    o.kind_ = kind_;
    o.scale_ = scale_;
    if (kind_ == LossKind::aec) {
        o.c_fn_.reserve(rows.size());
        o.c_fp_.reserve(rows.size());
        for (auto r : rows) {
            o.c_fn_.push_back(c_fn_[r]);
            o.c_fp_.push_back(c_fp_[r]);
        }
    }
    return o;
}

}  // namespace idcs
