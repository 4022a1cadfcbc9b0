#pragma once

#include "idcs/matrix.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace idcs {

// CoV denominators: abs_mean divides the sd of the signed importances by the
// mean absolute importance; absolute uses |importance| throughout.
enum class CovMode { abs_mean, absolute };

const char* to_string(CovMode m) noexcept;
CovMode cov_mode_from_string(std::string_view s);

inline constexpr double kCovMeanGuard = 1e-12;

// values: J iterations x P features for one instance. Features whose mean
// absolute importance is below kCovMeanGuard are left out; nullopt when all are.
std::optional<double> cov_instance(const Matrix& values, CovMode mode = CovMode::abs_mean);

// Sample variance (denominator L - 1) of one feature's ranks across L lists.
double rank_agreement(std::span<const int> ranks);

// Mean of rank_agreement over the features that reach the top `depth` in at
// least one list. rank_lists[l][p] is the rank of feature p in list l.
double sra(const std::vector<std::vector<int>>& rank_lists, std::size_t depth);

// SRA of the importance lists in the rows of values (ranked by |value|).
double sra_from_values(const Matrix& values, std::size_t depth);

enum class KsAlternative { two_sided, first_larger, first_smaller };

const char* to_string(KsAlternative a) noexcept;
KsAlternative ks_alternative_from_string(std::string_view s);

struct KsResult {
    double statistic = 0.0;
    double p = 1.0;
    bool exact = false;
};

// Two-sample Kolmogorov-Smirnov test. first_larger tests whether a is
// stochastically larger than b (its ECDF lies below b's), using
// sup(F_b - F_a). p-values come from exact lattice-path counting when
// n * m <= kKsExactLimit and from the asymptotic distribution otherwise.
inline constexpr std::size_t kKsExactLimit = 250000;
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                       KsAlternative alternative = KsAlternative::two_sided);
KsResult ks_two_sample_asymptotic(std::span<const double> a, std::span<const double> b,
                                  KsAlternative alternative = KsAlternative::two_sided);

// Kolmogorov survival function Q(t) = 2 sum (-1)^(k-1) exp(-2 k^2 t^2).
double kolmogorov_sf(double t);

// Importance values indexed by (rate, instance, iteration, feature) for one
// (model, method) pair. Iterations that failed are marked absent.
struct ImportanceTensor {
    std::string model;
    std::string method;
    std::vector<double> pis;
    std::size_t n_instances = 0;
    std::size_t iterations = 0;
    std::vector<std::string> features;
    std::vector<double> values;
    std::vector<unsigned char> present;  // per (rate, iteration)

    ImportanceTensor() = default;
    ImportanceTensor(std::string model, std::string method, std::vector<double> pis, std::size_t n_instances,
                     std::size_t iterations, std::vector<std::string> features);

    std::size_t n_features() const noexcept { return features.size(); }
    std::size_t index(std::size_t pi, std::size_t i, std::size_t j, std::size_t p) const noexcept {
        return ((pi * n_instances + i) * iterations + j) * features.size() + p;
    }
    double& at(std::size_t pi, std::size_t i, std::size_t j, std::size_t p) noexcept { return values[index(pi, i, j, p)]; }
    double at(std::size_t pi, std::size_t i, std::size_t j, std::size_t p) const noexcept {
        return values[index(pi, i, j, p)];
    }
    bool iteration_present(std::size_t pi, std::size_t j) const noexcept { return present[pi * iterations + j] != 0; }
    void set_present(std::size_t pi, std::size_t j, bool v) noexcept { present[pi * iterations + j] = v ? 1 : 0; }

    // J_effective x P matrix of one instance's importances at one rate.
    Matrix instance_matrix(std::size_t pi, std::size_t i) const;
    std::size_t effective_iterations(std::size_t pi) const noexcept;

    void write(const std::filesystem::path& path) const;
    static ImportanceTensor read(const std::filesystem::path& path);
};

struct InstanceStability {
    std::size_t pi_index = 0;
    std::size_t instance = 0;
    std::optional<double> cov;
    std::optional<double> sra;
};

// Per-(rate, instance) CoV and SRA; metrics stay empty when fewer than two
// iterations are present.
std::vector<InstanceStability> compute_stability(const ImportanceTensor& t, std::size_t depth,
                                                 CovMode mode = CovMode::abs_mean);

}  // namespace idcs
