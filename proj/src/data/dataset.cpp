#include "idcs/data.hpp"
#include "idcs/log.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace idcs {

std::size_t RawDataset::positives() const noexcept {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

double RawDataset::positive_rate() const noexcept {
    return y.empty() ? 0.0 : static_cast<double>(positives()) / static_cast<double>(y.size());
}

std::size_t Dataset::positives() const noexcept {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

double Dataset::positive_rate() const noexcept {
    return y.empty() ? 0.0 : static_cast<double>(positives()) / static_cast<double>(y.size());
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.X = X.select_rows(idx);
    out.column_names = column_names;
    out.blocks = blocks;
    out.y.reserve(idx.size());
    out.amount.reserve(idx.size());
    out.revenue.reserve(idx.size());
    for (auto i : idx) {
        out.y.push_back(y[i]);
        out.amount.push_back(amount[i]);
        out.revenue.push_back(revenue[i]);
    }
    return out;
}

void Dataset::validate() const {
    if (X.rows() != y.size() || amount.size() != y.size() || revenue.size() != y.size())
        throw ValidationError("dataset: row count mismatch between matrix, labels and costs");
    if (column_names.size() != X.cols()) throw ValidationError("dataset: column name count mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1)
            throw ValidationError("dataset: row " + std::to_string(i) + " has non-binary label");
        if (!(amount[i] > 0.0))
            throw ValidationError("dataset: row " + std::to_string(i) + " has non-positive amount");
        if (!(revenue[i] >= 0.0))
            throw ValidationError("dataset: row " + std::to_string(i) + " has negative revenue");
    }
}

nlohmann::json DatasetSummary::to_json() const {
    return {{"rows", rows}, {"D", features}, {"columns", columns}, {"pos_rate", pos_rate}};
}

DatasetSummary summarize(const RawDataset& d) {
    return {d.rows(), d.features.size(), 0, d.positive_rate()};
}

DatasetSummary summarize(const Dataset& d) {
    return {d.rows(), d.n_features(), d.n_columns(), d.positive_rate()};
}

OneHotEncoder OneHotEncoder::fit(const RawDataset& d) {
    OneHotEncoder enc;
    for (const auto& f : d.features) {
        FeatureMap m;
        m.name = f.name;
        m.kind = f.kind;
        if (f.kind == FeatureKind::categorical) {
            for (const auto& v : f.categorical)
                if (std::find(m.levels.begin(), m.levels.end(), v) == m.levels.end()) m.levels.push_back(v);
        } else {
            m.missing_indicator = std::any_of(f.numeric.begin(), f.numeric.end(), [](double v) { return std::isnan(v); });
        }
        enc.features_.push_back(std::move(m));
    }
    return enc;
}

Dataset OneHotEncoder::transform(const RawDataset& d, EncodeReport* report) const {
    if (d.features.size() != features_.size())
        throw SchemaError("encoder: dataset has " + std::to_string(d.features.size()) + " features, encoder expects " +
                          std::to_string(features_.size()));
    Dataset out;
    std::size_t col = 0;
    for (std::size_t f = 0; f < features_.size(); ++f) {
        const auto& m = features_[f];
        if (d.features[f].name != m.name || d.features[f].kind != m.kind)
            throw SchemaError("encoder: feature '" + d.features[f].name + "' does not match fitted feature '" + m.name + "'");
        FeatureBlock b;
        b.name = m.name;
        b.kind = m.kind;
        if (m.kind == FeatureKind::numeric) {
            b.columns.push_back(col++);
            out.column_names.push_back(m.name);
            if (m.missing_indicator) {
                b.columns.push_back(col++);
                b.has_missing_indicator = true;
                out.column_names.push_back(m.name + "__missing");
            }
        } else {
            b.levels = m.levels;
            for (const auto& level : m.levels) {
                b.columns.push_back(col++);
                out.column_names.push_back(m.name + "=" + level);
            }
        }
        out.blocks.push_back(std::move(b));
    }

    const std::size_t n = d.rows();
    out.X = Matrix(n, col, 0.0);
    std::size_t unseen = 0;
    for (std::size_t f = 0; f < features_.size(); ++f) {
        const auto& b = out.blocks[f];
        const auto& raw = d.features[f];
        if (b.kind == FeatureKind::numeric) {
            for (std::size_t r = 0; r < n; ++r) {
                const double v = raw.numeric[r];
                out.X(r, b.columns[0]) = v;
                if (b.has_missing_indicator) out.X(r, b.columns[1]) = std::isnan(v) ? 1.0 : 0.0;
            }
        } else {
            std::unordered_map<std::string, std::size_t> level_index;
            for (std::size_t l = 0; l < b.levels.size(); ++l) level_index.emplace(b.levels[l], l);
            for (std::size_t r = 0; r < n; ++r) {
                auto it = level_index.find(raw.categorical[r]);
                if (it == level_index.end()) {
                    ++unseen;
                    continue;
                }
                out.X(r, b.columns[it->second]) = 1.0;
            }
        }
    }
    if (unseen > 0) log::event("unseen_category", {{"count", unseen}});
    if (report) report->unseen_levels = unseen;

    out.y = d.y;
    out.amount = d.amount;
    out.revenue = d.revenue;
    return out;
}

nlohmann::json OneHotEncoder::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : features_)
        arr.push_back({{"name", m.name},
                       {"kind", to_string(m.kind)},
                       {"levels", m.levels},
                       {"missing_indicator", m.missing_indicator}});
    return arr;
}

OneHotEncoder OneHotEncoder::from_json(const nlohmann::json& j) {
    OneHotEncoder enc;
    for (const auto& e : j) {
        FeatureMap m;
        m.name = e.at("name").get<std::string>();
        m.kind = e.at("kind").get<std::string>() == "numeric" ? FeatureKind::numeric : FeatureKind::categorical;
        m.levels = e.at("levels").get<std::vector<std::string>>();
        m.missing_indicator = e.at("missing_indicator").get<bool>();
        enc.features_.push_back(std::move(m));
    }
    return enc;
}

Dataset one_hot_encode(const RawDataset& d) { return OneHotEncoder::fit(d).transform(d); }

}  // namespace idcs
