#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dualstate::stats {

double mean(std::span<const double> x);
// Unbiased; 0 for fewer than two values.
double sample_variance(std::span<const double> x);

// Empty when either side has zero variance or sizes differ / n < 2.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Average ranks for ties, 1-based.
std::vector<double> ranks(std::span<const double> x);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

double normal_sf(double z);
double student_t_quantile(double p, double dof);

// Two-sided level `alpha` half-width t_{1-alpha/2, n-1} * s / sqrt(n); 0 when n < 2.
double student_half_width(std::span<const double> runs, double alpha = 0.10);

// Two-sided p-value of H0: rho1 == rho2 for independent samples. Empty if undefined.
std::optional<double> fisher_z_p(double r1, std::size_t n1, double r2, std::size_t n2);

struct PairSample {
    std::vector<double> x;
    std::vector<double> y;
};

// Permutation test of equal Spearman correlations in two independent samples.
// x is replaced by within-sample normalized ranks before pooling so samples
// measured on different scales remain exchangeable under H0.
std::optional<double> spearman_permutation_p(const PairSample& a, const PairSample& b, int draws,
                                             std::uint64_t seed);

}  // namespace dualstate::stats
