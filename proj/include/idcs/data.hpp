#pragma once

#include "idcs/matrix.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace idcs {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class FeatureKind { numeric, categorical };

const char* to_string(FeatureKind kind) noexcept;

// Column roles for a credit dataset file.
struct Schema {
    std::string label;
    // Label value that denotes default. When unset, labels must already be 0/1.
    std::optional<std::string> positive_label;
    std::string amount;
    // When unset, revenue is synthesized as amount * profit_rate.
    std::optional<std::string> revenue;
    std::vector<std::string> categoricals;
    std::vector<std::string> drop;
    bool amount_is_feature = true;
    char delimiter = ',';
    double profit_rate = 0.2644;

    static Schema from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

Schema load_schema(const std::filesystem::path& path);

// One predictor as read from the file, before encoding. Numeric missing
// values are NaN; categorical missing values are the level "<missing>".
struct RawFeature {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<double> numeric;
    std::vector<std::string> categorical;
};

struct RawDataset {
    std::vector<RawFeature> features;
    std::vector<int> y;
    std::vector<double> amount;
    std::vector<double> revenue;
    bool revenue_synthesized = false;
    std::size_t rejected_rows = 0;

    std::size_t rows() const noexcept { return y.size(); }
    std::size_t positives() const noexcept;
    double positive_rate() const noexcept;
};

inline constexpr const char* kMissingLevel = "<missing>";

RawDataset load_csv(const std::filesystem::path& path, const Schema& schema);
RawDataset parse_csv(std::istream& in, const Schema& schema, const std::string& source = "<stream>");

// A feature after encoding: the matrix columns it owns.
struct FeatureBlock {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    // numeric: {value} or {value, missing indicator}; categorical: one column per level.
    std::vector<std::size_t> columns;
    std::vector<std::string> levels;
    bool has_missing_indicator = false;

    std::size_t value_column() const { return columns.front(); }
};

// Encoded, all-numeric dataset.
struct Dataset {
    Matrix X;
    std::vector<std::string> column_names;
    std::vector<FeatureBlock> blocks;
    std::vector<int> y;
    std::vector<double> amount;
    std::vector<double> revenue;

    std::size_t rows() const noexcept { return y.size(); }
    std::size_t n_features() const noexcept { return blocks.size(); }
    std::size_t n_columns() const noexcept { return X.cols(); }
    std::size_t positives() const noexcept;
    double positive_rate() const noexcept;

    Dataset subset(std::span<const std::size_t> rows) const;
    // Checks the row-level invariants (binary labels, positive amounts, ...).
    void validate() const;
};

struct DatasetSummary {
    std::size_t rows = 0;
    std::size_t features = 0;
    std::size_t columns = 0;
    double pos_rate = 0.0;

    nlohmann::json to_json() const;
};

DatasetSummary summarize(const RawDataset& d);
DatasetSummary summarize(const Dataset& d);

struct EncodeReport {
    std::size_t unseen_levels = 0;
};

// Full indicator block per categorical feature (no reference level dropped).
// Levels are kept in order of first appearance in the fitted data.
class OneHotEncoder {
public:
    static OneHotEncoder fit(const RawDataset& d);
    Dataset transform(const RawDataset& d, EncodeReport* report = nullptr) const;

    nlohmann::json to_json() const;
    static OneHotEncoder from_json(const nlohmann::json& j);

    struct FeatureMap {
        std::string name;
        FeatureKind kind = FeatureKind::numeric;
        std::vector<std::string> levels;
        bool missing_indicator = false;
    };
    const std::vector<FeatureMap>& features() const noexcept { return features_; }

private:
    std::vector<FeatureMap> features_;
};

Dataset one_hot_encode(const RawDataset& d);

// Affine map fitted on training data: median imputation of missing numeric
// values followed by centering and scaling by the sample standard deviation.
// Indicator columns are left untouched.
class Preprocessor {
public:
    static Preprocessor fit(const Dataset& train);
    Dataset apply(const Dataset& d) const;
    void apply_inplace(Matrix& X) const;

    const std::vector<std::size_t>& numeric_columns() const noexcept { return columns_; }
    const std::vector<double>& medians() const noexcept { return medians_; }
    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<double>& scales() const noexcept { return scales_; }

    nlohmann::json to_json() const;
    static Preprocessor from_json(const nlohmann::json& j);

private:
    std::vector<std::size_t> columns_;
    std::vector<double> medians_;
    std::vector<double> means_;
    std::vector<double> scales_;
};

std::pair<Dataset, std::vector<Dataset>> standardize(const Dataset& train, const std::vector<Dataset>& others);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct SplitPlan {
    enum class Kind { stratified_kfold, stratified_holdout } kind = Kind::stratified_kfold;
    std::size_t k = 5;          // folds, or holdout size for stratified_holdout
    std::uint64_t seed = 0;
};

std::vector<Fold> make_splits(std::span<const int> y, const SplitPlan& plan);

std::vector<Fold> stratified_kfold(std::span<const int> y, std::size_t k, std::uint64_t seed);
inline std::vector<Fold> stratified_kfold(const Dataset& d, std::size_t k, std::uint64_t seed) {
    return stratified_kfold(d.y, k, seed);
}

Fold stratified_holdout(std::span<const int> y, std::size_t n_test, std::uint64_t seed);
std::pair<Dataset, Dataset> split_stability_test(const Dataset& d, std::size_t n_test, std::uint64_t seed);

inline constexpr double kMaxResampleRate = 0.3;

std::size_t resampled_size(std::size_t n_defaults) noexcept;
// Without fill_majority, a majority pool too small for the fixed size is an
// InfeasibleError. With it, every majority row is used once and the
// shortfall is drawn with replacement.
std::vector<std::size_t> resample_indices(std::span<const int> y, double pi, std::uint64_t seed,
                                          bool fill_majority = false);
Dataset resample_to_rate(const Dataset& train, double pi, std::uint64_t seed, bool fill_majority = false);

// Round half up with a small tolerance for representation error.
std::size_t round_half_up(double x) noexcept;

}  // namespace idcs
