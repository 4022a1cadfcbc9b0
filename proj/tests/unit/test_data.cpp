#include "helpers.hpp"

#include "idcs/data.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

using namespace idcs;

namespace {

Schema basic_schema() {
    Schema s;
    s.label = "y";
    s.amount = "amount";
    s.categoricals = {"color"};
    return s;
}

RawDataset parse(const std::string& text, const Schema& s = basic_schema()) {
    std::istringstream in(text);
    return parse_csv(in, s);
}

std::vector<int> labels(std::size_t pos, std::size_t neg) {
    std::vector<int> y(pos, 1);
    y.insert(y.end(), neg, 0);
    return y;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("csv loader reads roles, synthesizes revenue and rejects incomplete rows") {
    const auto d = parse("y,amount,age,color\n1,1000,30,red\n0,2000,40,blue\n,500,20,red\n0,,22,blue\n1,300,50,red\n");
    CHECK(d.rows() == 3);
    CHECK(d.rejected_rows == 2);
    CHECK(d.features.size() == 3);  // amount stays a predictor
    CHECK(d.revenue_synthesized);
    CHECK(d.revenue[1] == doctest::Approx(2000 * 0.2644));
    CHECK(d.positive_rate() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("non-binary label is a validation error") {
    CHECK_THROWS_AS(parse("y,amount,age,color\n2,1000,30,red\n0,2000,40,blue\n"), ValidationError);
}

TEST_CASE("missing amount column is a schema error naming the column") {
    try {
        parse("y,loan,age,color\n1,1000,30,red\n");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("amount") != std::string::npos);
    }
}

TEST_CASE("positive label mapping") {
    auto s = basic_schema();
    s.positive_label = "bad";
    const auto d = parse("y,amount,age,color\nbad,1000,30,red\ngood,2000,40,blue\n", s);
    CHECK(d.y == std::vector<int>{1, 0});
}

TEST_CASE("sgcs file matches the dataset roster") {
    const auto schema = load_schema(testing::source_path("data/sgcs.schema.json"));
    const auto d = load_csv(testing::source_path("data/sgcs.csv"), schema);
    CHECK(d.rows() == 1000);
    CHECK(d.features.size() == 20);
    CHECK(d.positive_rate() == doctest::Approx(0.30));
}

TEST_CASE("one-hot encoding") {
    const auto d = parse("y,amount,age,color\n1,1000,30,red\n0,2000,40,blue\n1,300,50,red\n");
    const auto enc = OneHotEncoder::fit(d);
    const auto ds = enc.transform(d);
    // amount, age, color_red, color_blue
    REQUIRE(ds.n_columns() == 4);
    REQUIRE(ds.blocks.size() == 3);
    const auto& color = ds.blocks[2];
    REQUIRE(color.columns.size() == 2);
    const std::vector<std::vector<double>> expect{{1, 0}, {0, 1}, {1, 0}};
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(ds.X(i, color.columns[0]) == expect[i][0]);
        CHECK(ds.X(i, color.columns[1]) == expect[i][1]);
    }
    SUBCASE("round trip through the stored map") {
        const auto again = OneHotEncoder::from_json(enc.to_json()).transform(d);
        CHECK(again.X == ds.X);
    }
    SUBCASE("unseen level becomes an all-zero block") {
        const auto test = parse("y,amount,age,color\n1,1000,30,green\n");
        EncodeReport report;
        const auto t = enc.transform(test, &report);
        CHECK(report.unseen_levels == 1);
        CHECK(t.X(0, color.columns[0]) == 0.0);
        CHECK(t.X(0, color.columns[1]) == 0.0);
    }
}

TEST_CASE("three-level block partitions every row") {
    const auto d = parse("y,amount,age,color\n1,1,1,a\n0,2,2,b\n1,3,3,c\n0,4,4,b\n");
    const auto ds = one_hot_encode(d);
    const auto& b = ds.blocks[2];
    REQUIRE(b.columns.size() == 3);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        double s = 0;
        for (auto c : b.columns) s += ds.X(i, c);
        CHECK(s == 1.0);
    }
}

TEST_CASE("no categoricals: encoding is the identity") {
    Schema s;
    s.label = "y";
    s.amount = "amount";
    const auto d = parse("y,amount,age\n1,10,3\n0,20,4\n", s);
    const auto ds = one_hot_encode(d);
    CHECK(ds.n_columns() == 2);
    CHECK(ds.X(1, 0) == 20);
    CHECK(ds.X(1, 1) == 4);
}

TEST_CASE("standardization uses training statistics") {
    Dataset train;
    train.X = Matrix(3, 2);
    const double a[3] = {1, 2, 3}, c[3] = {5, 5, 5};
    for (std::size_t i = 0; i < 3; ++i) {
        train.X(i, 0) = a[i];
        train.X(i, 1) = c[i];
    }
    train.blocks = {FeatureBlock{"a", FeatureKind::numeric, {0}, {}, false}, FeatureBlock{"c", FeatureKind::numeric, {1}, {}, false}};
    train.column_names = {"a", "c"};
    train.y = {0, 1, 0};
    train.amount = {1, 1, 1};
    train.revenue = {0, 0, 0};
    Dataset test = train.subset(std::vector<std::size_t>{0});
    test.X(0, 0) = 4;
    auto [tr, others] = standardize(train, {test});
    CHECK(tr.X(0, 0) == doctest::Approx(-1));
    CHECK(tr.X(1, 0) == doctest::Approx(0));
    CHECK(tr.X(2, 0) == doctest::Approx(1));
    for (std::size_t i = 0; i < 3; ++i) CHECK(tr.X(i, 1) == 0.0);
    CHECK(others[0].X(0, 0) == doctest::Approx(2));
}

TEST_CASE("missing numeric values: median imputation with indicator") {
    const auto d = parse("y,amount,age,color\n1,1,1,a\n0,2,,b\n1,3,5,c\n0,4,3,b\n");
    const auto ds = one_hot_encode(d);
    const auto& age = ds.blocks[1];
    REQUIRE(age.has_missing_indicator);
    REQUIRE(age.columns.size() == 2);
    CHECK(ds.X(1, age.columns[1]) == 1.0);
    const auto pre = Preprocessor::fit(ds);
    const auto out = pre.apply(ds);
    // median of {1, 5, 3} is 3, which standardizes to the column centre
    for (std::size_t i = 0; i < out.rows(); ++i) CHECK(std::isfinite(out.X(i, age.columns[0])));
    CHECK(out.X(1, age.columns[0]) == doctest::Approx(out.X(3, age.columns[0])));
    CHECK(out.X(1, age.columns[1]) == 1.0);
}

TEST_CASE("stratified k-fold") {
    SUBCASE("10 rows, 3 positives, k=5") {
        const auto y = labels(3, 7);
        const auto folds = stratified_kfold(y, 5, 11);
        REQUIRE(folds.size() == 5);
        std::size_t pos_total = 0;
        std::set<std::size_t> seen;
        for (const auto& f : folds) {
            CHECK(f.test.size() == 2);
            std::size_t p = 0;
            for (auto i : f.test) {
                p += static_cast<std::size_t>(y[i]);
                CHECK(seen.insert(i).second);
            }
            CHECK(p <= 1);
            pos_total += p;
            CHECK(f.train.size() + f.test.size() == y.size());
        }
        CHECK(pos_total == 3);
        CHECK(seen.size() == 10);
    }
    SUBCASE("deterministic") {
        const auto y = labels(30, 70);
        const auto a = stratified_kfold(y, 5, 3), b = stratified_kfold(y, 5, 3);
        for (std::size_t f = 0; f < 5; ++f) CHECK(a[f].test == b[f].test);
    }
    SUBCASE("feasibility boundary") {
        CHECK_NOTHROW(stratified_kfold(labels(4, 30), 5, 1));
        CHECK_THROWS_AS(stratified_kfold(labels(2, 30), 5, 1), InfeasibleError);
    }
    SUBCASE("stratification bound holds for every fold") {
        const auto y = labels(137, 463);
        const double rate = 137.0 / 600.0;
        for (const auto& f : stratified_kfold(y, 5, 99)) {
            double p = 0;
            for (auto i : f.test) p += y[i];
            CHECK(std::abs(p / f.test.size() - rate) <= 1.0 / f.test.size() + 1e-12);
        }
    }
}

TEST_CASE("stability test split") {
    const auto y = labels(300, 700);
    const auto f = stratified_holdout(y, 300, 5);
    std::size_t p = 0;
    for (auto i : f.test) p += static_cast<std::size_t>(y[i]);
    CHECK(f.test.size() == 300);
    CHECK(p == 90);
    CHECK(f.train.size() == 700);
    CHECK_THROWS(stratified_holdout(y, 0, 5));
    CHECK_THROWS_AS(stratified_holdout(y, 1000, 5), InfeasibleError);

    const auto h = labels(1189, 5960 - 1189);
    const auto g = stratified_holdout(h, 300, 5);
    std::size_t q = 0;
    for (auto i : g.test) q += static_cast<std::size_t>(h[i]);
    CHECK((q == 59 || q == 60));
}

TEST_CASE("resampling to a target default rate") {
    const auto y = labels(210, 2000);
    for (double pi : {0.01, 0.05, 0.1, 0.2, 0.3}) {
        const auto idx = resample_indices(y, pi, 17);
        CHECK(idx.size() == 700);
        std::size_t pos = 0;
        for (auto i : idx) pos += static_cast<std::size_t>(y[i]);
        CHECK(pos == round_half_up(pi * 700));
        if (pi == 0.01) CHECK(pos == 7);
        if (pi == 0.3) CHECK(pos == 210);
        CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());  // without replacement
    }
    CHECK_THROWS_AS(resample_indices(y, 0.5, 1), std::invalid_argument);
    CHECK(resample_indices(y, 0.1, 4) == resample_indices(y, 0.1, 4));
}

TEST_CASE("resampling on a 30% dataset needs the majority fill") {
    const auto y = labels(210, 490);
    CHECK_THROWS_AS(resample_indices(y, 0.05, 1), InfeasibleError);
    const auto idx = resample_indices(y, 0.05, 1, true);
    CHECK(idx.size() == 700);
    std::size_t pos = 0;
    std::set<std::size_t> distinct_neg;
    for (auto i : idx) {
        pos += static_cast<std::size_t>(y[i]);
        if (y[i] == 0) distinct_neg.insert(i);
    }
    CHECK(pos == 35);
    CHECK(distinct_neg.size() == 490);
}

}  // TEST_SUITE
