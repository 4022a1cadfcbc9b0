#include "helpers.hpp"

#include "idcs/costs.hpp"

#include <doctest.h>

#include <cmath>

using namespace idcs;

TEST_SUITE("costs") {

TEST_CASE("alternative customer cost") {
    CHECK(alternative_customer_cost(0.75, 0.2, 100, 10) == doctest::Approx(7.0));
    CHECK(alternative_customer_cost(0.75, 0.0, 100, 10) == doctest::Approx(-10.0));
    const auto p = make_cost_params(0.75, 0.2, 100, 10);
    CHECK(p.pi0 + p.pi1 == 1.0);
    CHECK(p.c_alt == doctest::Approx(-p.r_bar * p.pi0 + p.a_bar * p.lgd * p.pi1));
    CHECK_THROWS(make_cost_params(0.0, 0.2, 100, 10));
}

TEST_CASE("cost parameters come from training rows") {
    Dataset d;
    d.y = {1, 0, 0, 0};
    d.amount = {100, 200, 300, 400};
    d.revenue = {10, 20, 30, 40};
    const auto p = fit_cost_params(d, 0.75);
    CHECK(p.pi1 == doctest::Approx(0.25));
    CHECK(p.a_bar == doctest::Approx(250));
    CHECK(p.r_bar == doctest::Approx(25));
    CHECK(p.c_alt == doctest::Approx(-25 * 0.75 + 250 * 0.75 * 0.25));
}

TEST_CASE("fixed priors keep C_alt constant across resampled sets") {
    const auto full = testing::synthetic(2000, 4, 3);
    const Priors priors{1.0 - full.positive_rate(), full.positive_rate()};
    const auto a = resample_to_rate(full, 0.01, 1, true);
    const auto b = resample_to_rate(full, 0.3, 1, true);
    const auto pa = fit_cost_params(a, 0.75, priors), pb = fit_cost_params(b, 0.75, priors);
    CHECK(pa.pi1 == pb.pi1);
    // same priors; amounts differ only through the sampled rows
    CHECK(pa.c_alt == doctest::Approx(-pa.r_bar * pa.pi0 + pa.a_bar * 0.75 * pa.pi1));
    CHECK_THROWS(fit_cost_params(a, 0.75, Priors{0.5, 0.6}));
}

TEST_CASE("per-row costs") {
    CostParams p = make_cost_params(0.75, 0.2, 100, 10);  // C_alt = 7
    const std::vector<double> amount{200, 50}, revenue{5, 0};
    const auto cs = build_cost_set(amount, revenue, p);
    CHECK(cs.c_fn[0] == doctest::Approx(150));
    CHECK(cs.c_fp[0] == doctest::Approx(12));
    CHECK(cs.c_fp[1] == doctest::Approx(7));
}

TEST_CASE("negative false-positive costs are floored or rejected") {
    CostParams p = make_cost_params(0.75, 0.0, 100, 10);  // C_alt = -10
    const std::vector<double> amount{200, 50}, revenue{5, 20};
    const auto cs = build_cost_set(amount, revenue, p);
    CHECK(cs.c_fp[0] == 0.0);
    CHECK(cs.c_fp[1] == doctest::Approx(10));
    CHECK(cs.floored == 1);
    CHECK_THROWS_AS(build_cost_set(amount, revenue, p, false), ValidationError);
}

TEST_CASE("cost ratio histogram covers every defaulter") {
    const auto d = testing::synthetic(500, 3, 8);
    const auto cs = testing::costs_for(d);
    const auto h = cost_ratio_histogram(d.y, cs, 10);
    REQUIRE(h.size() == 11);
    double total = 0;
    std::size_t count = 0;
    for (const auto& b : h) {
        total += b.frequency;
        count += b.count;
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(count == d.positives());
    CHECK(std::isinf(h.back().upper));
}

}  // TEST_SUITE
