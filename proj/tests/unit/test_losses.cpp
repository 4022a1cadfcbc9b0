#include "helpers.hpp"

#include "idcs/losses.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace idcs;

namespace {

double aec_of_margin(int y, double z, double c_fn, double c_fp) {
    return aec_instance(y, 1.0 / (1.0 + std::exp(-z)), c_fn, c_fp);
}

double ce_of_margin(int y, double z) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    return -(y * std::log(s) + (1 - y) * std::log(1 - s));
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("aec instance values") {
    CHECK(aec_instance(1, 0.2, 75, 3) == doctest::Approx(60));
    CHECK(aec_instance(0, 0.0, 75, 3) == 0.0);
    CHECK(aec_instance(1, 1.0, 75, 3) == 0.0);
}

TEST_CASE("aec gradient") {
    CHECK(aec_grad_hess(0, 0.0, 10, 4).grad == doctest::Approx(1.0));
    for (double z = -8; z <= 8; z += 0.5) CHECK(aec_grad_hess(1, z, 5, 2).grad <= 0.0);
}

TEST_CASE("aec and ce derivatives match finite differences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> zd(-4, 4), cd(0.1, 100);
    for (int t = 0; t < 200; ++t) {
        const int y = t % 2;
        const double z = zd(rng), cfn = cd(rng), cfp = cd(rng), h = 1e-5;
        const auto gh = aec_grad_hess(y, z, cfn, cfp);
        const double g = (aec_of_margin(y, z + h, cfn, cfp) - aec_of_margin(y, z - h, cfn, cfp)) / (2 * h);
        CHECK(gh.grad == doctest::Approx(g).epsilon(1e-5).scale(1e-6));
        const auto ce = ce_grad_hess(y, z);
        CHECK(ce.grad == doctest::Approx((ce_of_margin(y, z + h) - ce_of_margin(y, z - h)) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("cross-entropy derivatives") {
    const auto gh = ce_grad_hess(0, 0.0);
    CHECK(gh.grad == doctest::Approx(0.5));
    CHECK(gh.hess == doctest::Approx(0.25));
    CHECK(std::abs(ce_grad_hess(1, 40.0).grad) < 1e-12);
}

TEST_CASE("aec hessian changes sign at s = 0.5 and the floor keeps it positive") {
    const auto lo = aec_grad_hess(1, -1.0, 10, 10), hi = aec_grad_hess(1, 1.0, 10, 10);
    CHECK(lo.hess * hi.hess < 0.0);
    CHECK(floored_hessian(-0.3) == doctest::Approx(0.3));
    CHECK(floored_hessian(0.0) == kHessianFloor);
}

TEST_CASE("mean aec") {
    CostSet cs;
    cs.c_fn = {75, 0};
    cs.c_fp = {0, 4};
    const std::vector<int> y{1, 0};
    const std::vector<double> s{0.2, 0.5};
    CHECK(mean_aec(y, s, cs) == doctest::Approx(31));
    CHECK(mean_aec(y, std::vector<double>{1.0, 0.0}, cs) == 0.0);
}

TEST_CASE("objective scaling leaves the minimizer unchanged") {
    const auto d = testing::synthetic(50, 2, 1);
    const auto cs = testing::costs_for(d);
    const auto obj = Objective::aec(d.y, cs);
    CHECK(obj.scale() > 0.0);
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const double raw = aec_of_margin(d.y[i], 0.3, cs.c_fn[i], cs.c_fp[i]);
        CHECK(obj.value(i, d.y[i], 0.3) * obj.scale() == doctest::Approx(raw));
    }
}

}  // TEST_SUITE
