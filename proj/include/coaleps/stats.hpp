#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace coaleps {

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;      // sample standard error of the mean
    std::size_t count = 0;
};

MeanSE mean_se(const std::vector<double>& xs);

double median(std::vector<double> xs);

/// Two-sided one-sample Kolmogorov–Smirnov distance to U(0,1).
/// All samples must lie in [0,1].
double ks_uniform(const std::vector<double>& samples);

/// Two-sided one-sample KS distance to Exp(1).
double ks_exp1(const std::vector<double>& samples);

/// Two-sample Kolmogorov–Smirnov statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic one-sample KS critical value at significance alpha=0.01.
inline double ks_critical_1pct(std::size_t m) {
    return 1.628 / std::sqrt(static_cast<double>(m));
}

/// Two-sample KS critical value at alpha=0.01.
inline double ks_two_sample_critical_1pct(std::size_t m, std::size_t n) {
    const double mm = static_cast<double>(m), nn = static_cast<double>(n);
    return 1.628 * std::sqrt((mm + nn) / (mm * nn));
}

}  // namespace coaleps
