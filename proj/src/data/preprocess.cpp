#include "idcs/data.hpp"

#include <algorithm>
#include <cmath>

namespace idcs {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace

Preprocessor Preprocessor::fit(const Dataset& train) {
    if (train.rows() == 0) throw ValidationError("preprocess: empty training set");
    Preprocessor p;
    for (const auto& b : train.blocks)
        if (b.kind == FeatureKind::numeric) p.columns_.push_back(b.value_column());

    const std::size_t n = train.rows();
    for (auto c : p.columns_) {
        std::vector<double> present;
        present.reserve(n);
        for (std::size_t r = 0; r < n; ++r)
            if (!std::isnan(train.X(r, c))) present.push_back(train.X(r, c));
        const double med = median_of(present);

        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double v = train.X(r, c);
            sum += std::isnan(v) ? med : v;
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double v = std::isnan(train.X(r, c)) ? med : train.X(r, c);
            ss += (v - mean) * (v - mean);
        }
        double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) sd = 1.0;

        p.medians_.push_back(med);
        p.means_.push_back(mean);
        p.scales_.push_back(sd);
    }
    return p;
}

void Preprocessor::apply_inplace(Matrix& X) const {
    for (std::size_t k = 0; k < columns_.size(); ++k) {
        const auto c = columns_[k];
        if (c >= X.cols()) throw SchemaError("preprocess: column index out of range");
        for (std::size_t r = 0; r < X.rows(); ++r) {
            double v = X(r, c);
            if (std::isnan(v)) v = medians_[k];
            X(r, c) = (v - means_[k]) / scales_[k];
        }
    }
}

Dataset Preprocessor::apply(const Dataset& d) const {
    Dataset out = d;
    apply_inplace(out.X);
    return out;
}

nlohmann::json Preprocessor::to_json() const {
    return {{"columns", columns_}, {"medians", medians_}, {"means", means_}, {"scales", scales_}};
}

Preprocessor Preprocessor::from_json(const nlohmann::json& j) {
    Preprocessor p;
    p.columns_ = j.at("columns").get<std::vector<std::size_t>>();
    p.medians_ = j.at("medians").get<std::vector<double>>();
    p.means_ = j.at("means").get<std::vector<double>>();
    p.scales_ = j.at("scales").get<std::vector<double>>();
    return p;
}

std::pair<Dataset, std::vector<Dataset>> standardize(const Dataset& train, const std::vector<Dataset>& others) {
    const auto p = Preprocessor::fit(train);
    std::vector<Dataset> out;
    out.reserve(others.size());
    for (const auto& o : others) out.push_back(p.apply(o));
    return {p.apply(train), std::move(out)};
}

}  // namespace idcs
