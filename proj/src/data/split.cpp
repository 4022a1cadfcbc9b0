#include "idcs/data.hpp"
#include "idcs/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace idcs {

namespace {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> class_pools(std::span<const int> y) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos : neg).push_back(i);
    return {std::move(pos), std::move(neg)};
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& sorted_subset) {
    std::vector<std::size_t> out;
    out.reserve(n - sorted_subset.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (k < sorted_subset.size() && sorted_subset[k] == i) {
            ++k;
            continue;
        }
        out.push_back(i);
    }
    return out;
}

}  // namespace

std::size_t round_half_up(double x) noexcept {
    if (!(x > 0.0)) return 0;
    return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

std::vector<Fold> stratified_kfold(std::span<const int> y, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_kfold: k must be at least 2");
    if (k > y.size()) throw InfeasibleError("stratified_kfold: more folds than rows");
    auto [pos, neg] = class_pools(y);
    // A class must reach at least half of the test folds.
    const std::size_t min_members = (k + 1) / 2;
    if (pos.size() < min_members || neg.size() < min_members)
        throw InfeasibleError("stratified_kfold: a class has " + std::to_string(std::min(pos.size(), neg.size())) +
                              " members, need at least " + std::to_string(min_members) + " for k=" + std::to_string(k));

    Rng rng(derive_seed(seed, "kfold"));
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    std::vector<std::vector<std::size_t>> test(k);
    std::size_t slot = 0;
    for (auto i : pos) test[slot++ % k].push_back(i);
    for (auto i : neg) test[slot++ % k].push_back(i);

    std::vector<Fold> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        std::sort(test[f].begin(), test[f].end());
        folds[f].train = complement(y.size(), test[f]);
        folds[f].test = std::move(test[f]);
    }
    return folds;
}

Fold stratified_holdout(std::span<const int> y, std::size_t n_test, std::uint64_t seed) {
    if (n_test == 0) throw std::invalid_argument("stratified_holdout: n_test must be positive");
    if (n_test >= y.size())
        throw InfeasibleError("stratified_holdout: n_test=" + std::to_string(n_test) + " is not smaller than " +
                              std::to_string(y.size()) + " rows");
    auto [pos, neg] = class_pools(y);
    if (pos.empty() || neg.empty()) throw InfeasibleError("stratified_holdout: both classes must be present");

    const double rate = static_cast<double>(pos.size()) / static_cast<double>(y.size());
    std::size_t n_pos = round_half_up(rate * static_cast<double>(n_test));
    n_pos = std::min(n_pos, pos.size());
    const std::size_t n_neg = n_test - n_pos;
    if (n_neg > neg.size()) throw InfeasibleError("stratified_holdout: not enough negatives");

    Rng rng(derive_seed(seed, "holdout"));
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    Fold f;
    f.test.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
    f.test.insert(f.test.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg));
    std::sort(f.test.begin(), f.test.end());
    f.train = complement(y.size(), f.test);
    return f;
}

std::vector<Fold> make_splits(std::span<const int> y, const SplitPlan& plan) {
    if (plan.kind == SplitPlan::Kind::stratified_kfold) return stratified_kfold(y, plan.k, plan.seed);
    return {stratified_holdout(y, plan.k, plan.seed)};
}

std::pair<Dataset, Dataset> split_stability_test(const Dataset& d, std::size_t n_test, std::uint64_t seed) {
    auto f = stratified_holdout(d.y, n_test, seed);
    return {d.subset(f.train), d.subset(f.test)};
}

std::size_t resampled_size(std::size_t n_defaults) noexcept {
    // floor(n / 0.3) in exact integer arithmetic.
    return n_defaults * 10 / 3;
}

std::vector<std::size_t> resample_indices(std::span<const int> y, double pi, std::uint64_t seed, bool fill_majority) {
    if (!(pi > 0.0) || pi > kMaxResampleRate + 1e-12)
        throw std::invalid_argument("resample: target rate must lie in (0, 0.3], got " + std::to_string(pi));
    auto [pos, neg] = class_pools(y);
    if (pos.empty()) throw InfeasibleError("resample: training data has no defaults");
    const std::size_t size = resampled_size(pos.size());
    std::size_t n_pos = round_half_up(pi * static_cast<double>(size));
    n_pos = std::clamp<std::size_t>(n_pos, 1, pos.size());
    const std::size_t n_neg = size - n_pos;
    if (n_neg > neg.size() && (!fill_majority || neg.empty()))
        throw InfeasibleError("resample: need " + std::to_string(n_neg) + " non-defaults at rate " + std::to_string(pi) +
                              ", only " + std::to_string(neg.size()) + " available");

    Rng rng(derive_seed(seed, "resample"));
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::vector<std::size_t> out(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
    const std::size_t unique_neg = std::min(n_neg, neg.size());
    out.insert(out.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(unique_neg));
    std::uniform_int_distribution<std::size_t> pick(0, neg.empty() ? 0 : neg.size() - 1);
    for (std::size_t k = unique_neg; k < n_neg; ++k) out.push_back(neg[pick(rng)]);
    std::sort(out.begin(), out.end());
    return out;
}

Dataset resample_to_rate(const Dataset& train, double pi, std::uint64_t seed, bool fill_majority) {
    auto idx = resample_indices(train.y, pi, seed, fill_majority);
    return train.subset(idx);
}

}  // namespace idcs
