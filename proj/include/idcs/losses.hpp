#pragma once

#include "idcs/costs.hpp"

#include <span>
#include <string_view>

namespace idcs {

enum class LossKind { cross_entropy, aec };

const char* to_string(LossKind kind) noexcept;
LossKind loss_from_string(std::string_view s);

struct GradHess {
    double grad = 0.0;
    double hess = 0.0;
};

inline constexpr double kHessianFloor = 1e-6;
inline constexpr double kLogClamp = 1e-12;

// Numerically stable logistic function.
double logistic(double z) noexcept;
double logit(double p) noexcept;

// Expected cost of one instance with zero cost on the diagonal:
// y (1 - s) c_fn + (1 - y) s c_fp.
double aec_instance(int y, double s, double c_fn, double c_fp) noexcept;

// Derivatives of aec_instance(y, logistic(z)) with respect to the margin z.
// The hessian is the exact one and changes sign at s = 0.5.
GradHess aec_grad_hess(int y, double z, double c_fn, double c_fp) noexcept;

// Curvature safe for Newton steps: max(|h|, floor).
double floored_hessian(double h, double floor = kHessianFloor) noexcept;

double cross_entropy(int y, double s) noexcept;
GradHess ce_grad_hess(int y, double z) noexcept;

double mean_aec(std::span<const int> y, std::span<const double> s, const CostSet& costs);

// Per-row objective shared by the trainers. The AEC objective is divided by
// the mean actual-class cost of the rows it is built on, so both objectives
// are dimensionless and training is invariant to the currency scale.
class Objective {
public:
    static Objective cross_entropy();
    static Objective aec(std::span<const int> y, const CostSet& costs);

    LossKind kind() const noexcept { return kind_; }
    double scale() const noexcept { return scale_; }

    double value(std::size_t row, int y, double z) const noexcept;
    GradHess grad_hess(std::size_t row, int y, double z) const noexcept;

    // Restricts the per-row costs to a subset of rows (scale is kept).
    Objective subset(std::span<const std::size_t> rows) const;

private:
    LossKind kind_ = LossKind::cross_entropy;
    std::vector<double> c_fn_;
    std::vector<double> c_fp_;
    double scale_ = 1.0;
};

}  // namespace idcs
