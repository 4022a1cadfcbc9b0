#include "idcs/data.hpp"
#include "idcs/log.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace idcs {

namespace {

// RFC 4180 record reader: quoted fields may contain delimiters, doubled
// quotes and newlines.
bool read_record(std::istream& in, char delim, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == delim) {
            out.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            out.push_back(std::move(field));
            return true;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!any) return false;
    out.push_back(std::move(field));
    return true;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "?" || s == "null";
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

}  // namespace

const char* to_string(FeatureKind kind) noexcept {
    return kind == FeatureKind::numeric ? "numeric" : "categorical";
}

Schema Schema::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("schema: expected an object");
    static const std::vector<std::string> known = {"label",  "positive_label", "amount", "revenue",
                                                   "categoricals", "drop", "amount_is_feature",
                                                   "delimiter", "profit_rate"};
    for (auto& [k, _] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw SchemaError("schema: unknown key '" + k + "'");
    Schema s;
    if (!j.contains("label") || !j["label"].is_string()) throw SchemaError("schema: 'label' column is required");
    if (!j.contains("amount") || !j["amount"].is_string()) throw SchemaError("schema: 'amount' column is required");
    s.label = j["label"].get<std::string>();
    s.amount = j["amount"].get<std::string>();
    if (j.contains("positive_label") && !j["positive_label"].is_null()) {
        const auto& p = j["positive_label"];
        s.positive_label = p.is_string() ? p.get<std::string>() : p.dump();
    }
    if (j.contains("revenue") && !j["revenue"].is_null()) s.revenue = j["revenue"].get<std::string>();
    if (j.contains("categoricals")) s.categoricals = j["categoricals"].get<std::vector<std::string>>();
    if (j.contains("drop")) s.drop = j["drop"].get<std::vector<std::string>>();
    if (j.contains("amount_is_feature")) s.amount_is_feature = j["amount_is_feature"].get<bool>();
    if (j.contains("delimiter")) {
        auto d = j["delimiter"].get<std::string>();
        if (d.size() != 1) throw SchemaError("schema: delimiter must be a single character");
        s.delimiter = d[0];
    }
    if (j.contains("profit_rate")) s.profit_rate = j["profit_rate"].get<double>();
    if (!(s.profit_rate >= 0.0)) throw SchemaError("schema: profit_rate must be non-negative");
    return s;
}

nlohmann::json Schema::to_json() const {
    nlohmann::json j;
    j["label"] = label;
    j["positive_label"] = positive_label ? nlohmann::json(*positive_label) : nlohmann::json(nullptr);
    j["amount"] = amount;
    j["revenue"] = revenue ? nlohmann::json(*revenue) : nlohmann::json(nullptr);
    j["categoricals"] = categoricals;
    j["drop"] = drop;
    j["amount_is_feature"] = amount_is_feature;
    j["delimiter"] = std::string(1, delimiter);
    j["profit_rate"] = profit_rate;
    return j;
}

Schema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("schema " + path.string() + ": " + e.what());
    }
    return Schema::from_json(j);
}

RawDataset parse_csv(std::istream& in, const Schema& schema, const std::string& source) {
    std::vector<std::string> header;
    if (!read_record(in, schema.delimiter, header)) throw SchemaError(source + ": empty file");
    for (auto& h : header) h = trim(h);
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < header.size(); ++c) index.emplace(header[c], c);
    auto require = [&](const std::string& name, const char* role) {
        auto it = index.find(name);
        if (it == index.end())
            throw SchemaError(source + ": missing required " + std::string(role) + " column '" + name + "'");
        return it->second;
    };
    const std::size_t label_col = require(schema.label, "label");
    const std::size_t amount_col = require(schema.amount, "amount");
    std::optional<std::size_t> revenue_col;
    if (schema.revenue) revenue_col = require(*schema.revenue, "revenue");
    for (const auto& c : schema.categoricals) require(c, "categorical");
    for (const auto& c : schema.drop) require(c, "dropped");

    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& name = header[c];
        if (c == label_col || (revenue_col && c == *revenue_col)) continue;
        if (c == amount_col && !schema.amount_is_feature) continue;
        if (std::find(schema.drop.begin(), schema.drop.end(), name) != schema.drop.end()) continue;
        feature_cols.push_back(c);
    }

    std::vector<std::vector<std::string>> cells(feature_cols.size());
    RawDataset d;
    std::vector<std::string> rec;
    std::size_t line = 1;
    while (read_record(in, schema.delimiter, rec)) {
        ++line;
        if (rec.size() == 1 && trim(rec[0]).empty()) continue;
        if (rec.size() != header.size())
            throw ValidationError(source + ": line " + std::to_string(line) + " has " + std::to_string(rec.size()) +
                                  " fields, expected " + std::to_string(header.size()));
        const std::string label = trim(rec[label_col]);
        const std::string amount = trim(rec[amount_col]);
        if (is_missing_token(label) || is_missing_token(amount)) {
            ++d.rejected_rows;
            continue;
        }
        int y = 0;
        if (schema.positive_label) {
            y = label == *schema.positive_label ? 1 : 0;
        } else {
            auto v = parse_double(label);
            if (!v || (*v != 0.0 && *v != 1.0))
                throw ValidationError(source + ": line " + std::to_string(line) + ": label column '" + schema.label +
                                      "' has non-binary value '" + label + "'");
            y = static_cast<int>(*v);
        }
        auto a = parse_double(amount);
        if (!a || !std::isfinite(*a))
            throw ValidationError(source + ": line " + std::to_string(line) + ": amount column '" + schema.amount +
                                  "' is not numeric ('" + amount + "')");
        if (*a <= 0.0)
            throw ValidationError(source + ": line " + std::to_string(line) + ": amount must be positive, got " +
                                  amount);
        double r = *a * schema.profit_rate;
        if (revenue_col) {
            auto rv = parse_double(trim(rec[*revenue_col]));
            if (!rv || *rv < 0.0)
                throw ValidationError(source + ": line " + std::to_string(line) + ": revenue must be a non-negative number");
            r = *rv;
        }
        d.y.push_back(y);
        d.amount.push_back(*a);
        d.revenue.push_back(r);
        for (std::size_t f = 0; f < feature_cols.size(); ++f) cells[f].push_back(trim(rec[feature_cols[f]]));
    }
    d.revenue_synthesized = !revenue_col.has_value();
    if (d.rows() == 0) throw ValidationError(source + ": no usable rows");

    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
        RawFeature feat;
        feat.name = header[feature_cols[f]];
        const bool forced_cat =
            std::find(schema.categoricals.begin(), schema.categoricals.end(), feat.name) != schema.categoricals.end();
        std::vector<double> values(cells[f].size(), std::numeric_limits<double>::quiet_NaN());
        bool numeric = !forced_cat;
        for (std::size_t r = 0; numeric && r < cells[f].size(); ++r) {
            if (is_missing_token(cells[f][r])) continue;
            auto v = parse_double(cells[f][r]);
            if (!v) numeric = false;
            else values[r] = *v;
        }
        if (numeric) {
            feat.kind = FeatureKind::numeric;
            feat.numeric = std::move(values);
        } else {
            feat.kind = FeatureKind::categorical;
            feat.categorical = std::move(cells[f]);
            for (auto& s : feat.categorical)
                if (is_missing_token(s)) s = kMissingLevel;
        }
        d.features.push_back(std::move(feat));
    }
    return d;
}

RawDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open data file " + path.string());
    RawDataset d = parse_csv(in, schema, path.string());
    auto j = summarize(d).to_json();
    j.erase("columns");  // not known before encoding
    j["source"] = path.string();
    j["rejected_rows"] = d.rejected_rows;
    j["revenue_synthesized"] = d.revenue_synthesized;
    log::event("dataset_loaded", j);
    return d;
}

}  // namespace idcs
