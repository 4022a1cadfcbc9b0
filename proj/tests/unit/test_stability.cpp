#include "helpers.hpp"

#include "idcs/explain.hpp"
#include "idcs/stability.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

using namespace idcs;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix M(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) M(r, c) = rows[r][c];
    return M;
}

// Three importance lists over features A..E.
Matrix worked_example() {
    return from_rows({{.20, .84, .55, .93, .12}, {.21, .22, .33, .65, .10}, {.36, .28, .89, .77, .11}});
}

std::vector<std::vector<int>> rank_lists(const Matrix& M) {
    std::vector<std::vector<int>> out;
    for (std::size_t r = 0; r < M.rows(); ++r) out.push_back(rank_features(M.row(r)));
    return out;
}

// Monte Carlo permutation p-value of the two-sided statistic.
double permutation_p(const std::vector<double>& a, const std::vector<double>& b, int reps, std::uint64_t seed) {
    std::vector<double> pool = a;
    pool.insert(pool.end(), b.begin(), b.end());
    const double d0 = ks_two_sample(a, b).statistic;
    Rng rng(seed);
    int hits = 0;
    for (int r = 0; r < reps; ++r) {
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::span<const double> pa(pool.data(), a.size()), pb(pool.data() + a.size(), b.size());
        hits += ks_two_sample(pa, pb).statistic >= d0 - 1e-12;
    }
    return static_cast<double>(hits) / reps;
}

}  // namespace

TEST_SUITE("stability") {

TEST_CASE("coefficient of variation") {
    CHECK(cov_instance(from_rows({{1}, {2}, {3}})).value() == doctest::Approx(0.5));
    CHECK(cov_instance(from_rows({{0.4, 1}, {0.4, 1}})).value() == 0.0);
    // feature CoVs 0.5 and 0.1
    CHECK(cov_instance(from_rows({{1, 9}, {2, 10}, {3, 11}})).value() == doctest::Approx(0.3));
    CHECK_FALSE(cov_instance(from_rows({{0, 0}, {0, 0}})).has_value());
    // features with zero mean are left out
    CHECK(cov_instance(from_rows({{1, 0}, {2, 0}, {3, 0}})).value() == doctest::Approx(0.5));
    // signed values: sd of the signed values over the mean absolute value
    CHECK(cov_instance(from_rows({{-1}, {1}})).value() == doctest::Approx(std::sqrt(2.0)));
    CHECK(cov_instance(from_rows({{-1}, {1}}), CovMode::absolute).value() == 0.0);
}

TEST_CASE("cov is scale invariant per feature") {
    const Matrix a = from_rows({{1, 5}, {2, 7}, {4, 6}});
    Matrix b = a;
    for (std::size_t r = 0; r < 3; ++r) b(r, 1) *= 13.0;
    CHECK(cov_instance(a).value() == doctest::Approx(cov_instance(b).value()).epsilon(1e-12));
}

TEST_CASE("rank agreement") {
    CHECK(rank_agreement(std::vector<int>{4, 4, 3}) == doctest::Approx(1.0 / 3.0));
    CHECK(rank_agreement(std::vector<int>{2, 3, 4}) == 1.0);
    CHECK(rank_agreement(std::vector<int>{5, 5, 5}) == 0.0);
}

TEST_CASE("worked example: agreement and sra by depth") {
    const auto lists = rank_lists(worked_example());
    const std::vector<double> a_hat{1.0 / 3, 1, 1, 1.0 / 3, 0};
    for (std::size_t p = 0; p < 5; ++p) {
        std::vector<int> r;
        for (const auto& l : lists) r.push_back(l[p]);
        CHECK(rank_agreement(r) == doctest::Approx(a_hat[p]).epsilon(1e-12));
    }
    // S(1)={C,D}, S(2)={B,C,D}, S(3)=S(4)={A,B,C,D}, S(5)=all
    const std::vector<double> expect{(1 + 1.0 / 3) / 2, (1 + 1 + 1.0 / 3) / 3, (2 + 2.0 / 3) / 4, (2 + 2.0 / 3) / 4,
                                     (2 + 2.0 / 3) / 5};
    for (std::size_t d = 1; d <= 5; ++d) {
        CHECK(sra(lists, d) == doctest::Approx(expect[d - 1]).epsilon(1e-12));
        CHECK(sra_from_values(worked_example(), d) == doctest::Approx(expect[d - 1]).epsilon(1e-12));
    }
    CHECK_THROWS(sra(lists, 6));
    CHECK_THROWS(sra(lists, 0));
}

TEST_CASE("sra properties") {
    const std::vector<int> base{1, 2, 3, 4, 5, 6};
    CHECK(sra({base, base, base}, 6) == 0.0);
    auto swapped = base;
    std::swap(swapped[2], swapped[3]);
    CHECK(sra({base, swapped}, 6) == doctest::Approx(2 * 0.5 / 6));

    // relabeling features leaves sra unchanged
    const auto lists = rank_lists(worked_example());
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<std::vector<int>> relabeled;
    for (const auto& l : lists) {
        std::vector<int> r(5);
        for (std::size_t p = 0; p < 5; ++p) r[perm[p]] = l[p];
        relabeled.push_back(r);
    }
    for (std::size_t d = 1; d <= 5; ++d) CHECK(sra(relabeled, d) == doctest::Approx(sra(lists, d)));
    CHECK_THROWS(sra({base}, 3));
}

TEST_CASE("ks statistic and exact p-values") {
    const std::vector<double> a{0.1, 0.4, 0.7, 1.3, 2.2}, b{0.3, 0.5, 0.9, 1.1, 1.8, 2.5, 3.0};
    const auto two = ks_two_sample(a, b);
    CHECK(two.exact);
    CHECK(two.statistic == doctest::Approx(0.3142857142857143).epsilon(1e-12));
    CHECK(two.p == doctest::Approx(0.8383838383838382).epsilon(1e-9));
    const auto larger = ks_two_sample(a, b, KsAlternative::first_larger);
    CHECK(larger.statistic == 0.0);
    CHECK(larger.p == doctest::Approx(1.0));
    const auto smaller = ks_two_sample(a, b, KsAlternative::first_smaller);
    CHECK(smaller.statistic == doctest::Approx(0.3142857142857143).epsilon(1e-12));
    CHECK(smaller.p == doctest::Approx(0.44065656565656564).epsilon(1e-9));
}

TEST_CASE("ks on unequal samples") {
    const std::vector<double> x{0.301, 0.599, 0.026, -0.591, -0.155, -0.692, 0.36, 1.64, -0.192, -0.32,
                                0.79, 0.657, 0.405, -0.63, 0.271, 0.995, -1.044, -0.158, -1.601, -0.99,
                                -1.542, 0.065, -0.967, 0.571, 0.457, 0.113, -2.217, -0.239, 0.251, 0.413,
                                -1.23, -0.178, -0.679, -0.509, 1.361, -0.508, 0.267, 1.184, -0.284, 0.188};
    const std::vector<double> y{0.11, 0.064, -1.225, 0.076, 1.359, -1.547, 0.859, 0.119, -0.641, 2.0, 0.762, -1.199,
                                0.075, 0.577, -0.189, 0.683, -0.067, 0.667, 1.439, -0.676, 0.203, -0.463, 0.127,
                                -1.187, -0.579, -0.196, 0.899, 1.145, -1.324, -0.795, 0.647, -1.992, -0.463, -0.097,
                                1.257};
    const auto two = ks_two_sample(x, y);
    CHECK(two.statistic == doctest::Approx(0.16785714285714284).epsilon(1e-12));
    CHECK(two.p == doctest::Approx(0.6019831104035994).epsilon(1e-8));
    const auto larger = ks_two_sample(x, y, KsAlternative::first_larger);
    CHECK(larger.statistic == doctest::Approx(0.07142857142857142).epsilon(1e-12));
    CHECK(larger.p == doctest::Approx(0.7821700513205434).epsilon(1e-8));
    const auto smaller = ks_two_sample(x, y, KsAlternative::first_smaller);
    CHECK(smaller.p == doctest::Approx(0.3095820607086113).epsilon(1e-8));
    const auto asym = ks_two_sample_asymptotic(x, y);
    CHECK_FALSE(asym.exact);
    CHECK(asym.statistic == two.statistic);
    // Kolmogorov limit with the small-sample correction (en + 0.12 + 0.11 / en) D
    CHECK(asym.p == doctest::Approx(0.6277693228279875).epsilon(1e-10));
}

TEST_CASE("ks edge cases") {
    std::vector<double> a(100), b(100);
    std::iota(a.begin(), a.end(), 0.0);
    std::iota(b.begin(), b.end(), 100.0);
    CHECK(ks_two_sample(a, b).statistic == 1.0);
    CHECK(ks_two_sample(b, a, KsAlternative::first_larger).statistic == 1.0);
    CHECK(ks_two_sample(b, a, KsAlternative::first_larger).p < 1e-10);
    const auto same = ks_two_sample(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p == 1.0);
    CHECK_THROWS(ks_two_sample(std::vector<double>{}, a));
}

TEST_CASE("ks p-value agrees with a permutation test") {
    Rng rng(21);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> a(50), b(50);
    for (auto& v : a) v = z(rng);
    for (auto& v : b) v = z(rng) + 0.4;
    const double p = ks_two_sample(a, b).p;
    CHECK(std::abs(p - permutation_p(a, b, 4000, 5)) < 0.02);
}

TEST_CASE("kolmogorov survival function") {
    CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-12));
    CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-12));
    CHECK(kolmogorov_sf(0.0) == 1.0);
}

TEST_CASE("importance tensor") {
    ImportanceTensor t("cslogit", "shap", {0.05, 0.3}, 3, 4, {"a", "b"});
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                t.at(k, i, j, 0) = 1.0 + static_cast<double>(j);
                t.at(k, i, j, 1) = static_cast<double>(i) - 0.5 * static_cast<double>(j);
                t.set_present(k, j, true);
            }
    t.set_present(1, 2, false);
    CHECK(t.effective_iterations(0) == 4);
    CHECK(t.effective_iterations(1) == 3);
    CHECK(t.instance_matrix(1, 0).rows() == 3);

    const auto path = std::filesystem::temp_directory_path() / "idcs_tensor_test.imp";
    t.write(path);
    const auto r = ImportanceTensor::read(path);
    std::filesystem::remove(path);
    CHECK(r.model == "cslogit");
    CHECK(r.pis == t.pis);
    CHECK(r.features == t.features);
    CHECK(r.values == t.values);
    CHECK(r.present == t.present);

    const auto st = compute_stability(t, 2);
    CHECK(st.size() == 6);
    CHECK(st[0].cov.has_value());
    CHECK(st[0].sra.has_value());
}

TEST_CASE("stability needs two iterations") {
    ImportanceTensor t("logit", "lime", {0.1}, 1, 2, {"a"});
    t.at(0, 0, 0, 0) = 1;
    t.at(0, 0, 1, 0) = 2;
    t.set_present(0, 0, true);
    const auto st = compute_stability(t, 1);
    REQUIRE(st.size() == 1);
    CHECK_FALSE(st[0].cov.has_value());
    CHECK_FALSE(st[0].sra.has_value());
}

}  // TEST_SUITE
