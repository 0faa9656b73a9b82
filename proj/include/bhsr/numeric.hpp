#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace bhsr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Pairwise (cascade) summation; the error grows like log n instead of n.
double pairwise_sum(std::span<const double> xs);

inline double mean(std::span<const double> xs) {
    return xs.empty() ? 0.0 : pairwise_sum(xs) / static_cast<double>(xs.size());
}

struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Mean and standard error. With `antithetic` set, consecutive pairs are
/// averaged first and the error is computed over pair means.
SampleStats sample_stats(std::span<const double> xs, bool antithetic);

/// Nodes and weights of the probabilists' Gauss-Hermite rule (weights sum to 1).
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};
Quadrature gauss_hermite(int n);

/// Kolmogorov-Smirnov two-sample statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Seed for an independent generator stream (splitmix64 of seed and stream).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// 64-bit FNV-1a over raw bytes, hex encoded.
std::string fnv1a_hex(std::span<const char> bytes);

}  // namespace bhsr
