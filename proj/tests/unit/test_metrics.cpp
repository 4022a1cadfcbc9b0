#include "helpers.hpp"

#include "idcs/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace idcs;

namespace {

double auc_pairs(const std::vector<int>& y, const std::vector<double>& s) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                den += 1;
                num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return num / den;
}

CostSet make_costs(std::vector<double> fn, std::vector<double> fp) {
    CostSet c;
    c.c_fn = std::move(fn);
    c.c_fp = std::move(fp);
    return c;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("auc examples") {
    CHECK(auc(std::vector<int>{0, 0, 1, 1}, std::vector<double>{0.1, 0.4, 0.35, 0.8}) == 0.75);
    CHECK(auc(std::vector<int>{0, 1}, std::vector<double>{0.3, 0.3}) == 0.5);
    CHECK(auc(std::vector<int>{0, 1, 1}, std::vector<double>{0.9, 0.2, 0.1}) == 0.0);
    CHECK_THROWS_AS(auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), UndefinedMetricError);
}

TEST_CASE("auc equals pair counting with ties") {
    Rng rng(5);
    std::uniform_int_distribution<int> level(0, 9);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> y;
        std::vector<double> s;
        for (int i = 0; i < 60; ++i) {
            y.push_back(level(rng) < 3);
            s.push_back(level(rng) / 10.0);
        }
        y[0] = 1;
        y[1] = 0;
        CHECK(auc(y, s) == doctest::Approx(auc_pairs(y, s)).epsilon(1e-14));
    }
}

TEST_CASE("average precision") {
    // hits at ranks 1 and 3: (1 + 2/3) / 2
    CHECK(average_precision(std::vector<int>{1, 0, 1, 0}, std::vector<double>{0.9, 0.8, 0.7, 0.1}) ==
          doctest::Approx(5.0 / 6.0));
    CHECK(average_precision(std::vector<int>{0, 1}, std::vector<double>{0.9, 0.1}) == 0.5);
    CHECK_THROWS_AS(average_precision(std::vector<int>{0, 0}, std::vector<double>{0.9, 0.1}), UndefinedMetricError);
}

TEST_CASE("brier") {
    CHECK(brier(std::vector<int>{1, 0}, std::vector<double>{0.8, 0.4}) == doctest::Approx((0.04 + 0.16) / 2));
    const std::vector<int> y{1, 0, 0, 0};
    CHECK(brier(y, null_scores(4, 0.25)) == doctest::Approx(0.25 * 0.75));
}

TEST_CASE("relative aec") {
    const std::vector<int> y{1, 0};
    const auto c = make_costs({10, 10}, {2, 2});
    // baseline at pi1 = 0.5: (0.5 * 10 + 0.5 * 2) / 2 = 3
    CHECK(rel_aec(y, std::vector<double>{0.5, 0.5}, c, 0.5) == doctest::Approx(0.0));
    CHECK(rel_aec(y, std::vector<double>{1.0, 0.0}, c, 0.5) == doctest::Approx(1.0));
    CHECK(rel_aec(y, std::vector<double>{0.0, 1.0}, c, 0.5) == doctest::Approx(1.0 - 6.0 / 3.0));
}

TEST_CASE("savings on the three-applicant scenario") {
    const std::vector<int> y{1, 0, 0};
    const auto c = make_costs({10, 0, 0}, {0, 1, 5});
    CHECK(baseline_cost(y, c) == 6.0);
    CHECK(savings_from_cost(3.0, 6.0) == 0.5);
    CHECK(classification_cost(y, std::vector<int>{1, 1, 0}, c) == 1.0);
    CHECK(savings(y, std::vector<int>{1, 1, 0}, c) == doctest::Approx(5.0 / 6.0));
    CHECK(savings(y, std::vector<int>{0, 1, 1}, c) == doctest::Approx(1.0 - 16.0 / 6.0));
    CHECK_THROWS_AS(savings_from_cost(1.0, 0.0), UndefinedMetricError);
}

TEST_CASE("null model metrics") {
    const auto d = testing::synthetic(500, 3, 77);
    const auto costs = testing::costs_for(d);
    const double p = d.positive_rate();
    const auto s = null_scores(d.rows(), p);
    CHECK(auc(d.y, s) == 0.5);
    CHECK(rel_aec(d.y, s, costs, p) == 0.0);
    CHECK(brier(d.y, s) == doctest::Approx(p * (1 - p)).epsilon(1e-12));
}

TEST_CASE("mean and sample sd") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto m = mean_sd(v);
    CHECK(m.mean == 2.5);
    CHECK(m.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(mean_sd(std::vector<double>{7}).sd == 0.0);
}

TEST_CASE("ranks with ties") {
    CHECK(rank_row(std::vector<double>{0.9, 0.7, 0.7, 0.5}, true) == std::vector<double>{1, 2.5, 2.5, 4});
    CHECK(rank_row(std::vector<double>{0.1, 0.3, 0.2}, false) == std::vector<double>{1, 3, 2});
}

TEST_CASE("friedman statistic") {
    SUBCASE("identical orderings over four blocks") {
        std::vector<std::vector<double>> table(4);
        for (auto& row : table)
            for (int m = 0; m < 8; ++m) row.push_back(1.0 - m * 0.1);
        const auto f = friedman_and_ranks(table, true);
        CHECK(f.chi2 == doctest::Approx(28.0));
        CHECK(f.p == doctest::Approx(0.00021989245684579596).epsilon(1e-9));
        CHECK(f.avg_ranks[7] == 8.0);
    }
    SUBCASE("average ranks from the literature") {
        const std::vector<double> r{2.25, 5.5, 6, 7.5, 3.25, 3.25, 2.5, 5.75};
        const auto f = friedman_from_avg_ranks(r, 4);
        CHECK(f.chi2 == doctest::Approx(17.3333333).epsilon(1e-6));
        CHECK(f.p == doctest::Approx(0.015368716591163895).epsilon(1e-4));
    }
    SUBCASE("three models, two blocks") {
        // ranks (1,2,3), (2,1,3): avg (1.5,1.5,3); 12*2/(3*4) * (2.25+2.25+9) - 3*2*4 = 3
        const auto f = friedman_and_ranks({{3, 2, 1}, {2, 3, 1}}, true);
        CHECK(f.chi2 == doctest::Approx(3.0));
    }
}

TEST_CASE("chi-square survival function") {
    CHECK(chi_square_sf(17.3333333333, 7) == doctest::Approx(0.015368716591163895).epsilon(1e-6));
    CHECK(chi_square_sf(28, 7) == doctest::Approx(0.00021989245684579596).epsilon(1e-9));
    CHECK(chi_square_sf(3.5, 2) == doctest::Approx(0.1737739434504451).epsilon(1e-12));
    CHECK(chi_square_sf(0, 3) == 1.0);
}

TEST_CASE("hommel adjustment") {
    auto check = [](std::vector<double> p, std::vector<double> expect) {
        const auto a = hommel_adjust(p);
        REQUIRE(a.size() == expect.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    };
    check({0.01, 0.02, 0.03, 0.04, 0.05}, {0.05, 0.05, 0.05, 0.05, 0.05});
    check({0.001, 0.04, 0.03, 0.2, 0.5, 0.012, 0.3}, {0.007, 0.16, 0.12, 0.45, 0.5, 0.072, 0.5});
    check({0.5, 0.2, 0.045, 0.01}, {0.5, 0.4, 0.135, 0.04});
    check({0.3}, {0.3});
}

TEST_CASE("posthoc comparisons against the best model") {
    const std::vector<double> r{2.25, 5.5, 6, 7.5, 3.25, 3.25, 2.5, 5.75};
    const auto rows = posthoc_vs_best(r, 4);
    CHECK(rows.size() == 7);
    const double se = std::sqrt(8.0 * 9.0 / (6.0 * 4.0));
    for (const auto& row : rows) {
        CHECK(row.model != 0);
        CHECK(row.z == doctest::Approx((r[row.model] - 2.25) / se));
        CHECK(row.p_adjusted >= row.p);
    }
}

TEST_CASE("fold evaluation and report") {
    const std::vector<int> y{1, 0, 0, 1};
    const std::vector<double> s{0.9, 0.2, 0.6, 0.4};
    const auto c = make_costs({10, 10, 10, 10}, {1, 1, 1, 1});
    const auto m = evaluate_fold(y, s, c, 0.5);
    CHECK(m.auc == 0.75);
    // bayes threshold 1/11: everyone is rejected, cost 2 vs baseline 2
    CHECK(m.savings == doctest::Approx(0.0));
    const auto half = evaluate_fold(y, s, c, 0.5, SavingsThreshold::fixed_half);
    CHECK(half.savings == doctest::Approx(1.0 - 11.0 / 2.0));
    const auto r = MetricReport::from_folds("x", {m, half});
    CHECK(r.auc.mean == 0.75);
    CHECK(r.auc.sd == 0.0);
    CHECK(higher_is_better("auc"));
    CHECK_FALSE(higher_is_better("brier"));
}

}  // TEST_SUITE
