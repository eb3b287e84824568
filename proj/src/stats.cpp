#include "coaleps/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coaleps {

MeanSE mean_se(const std::vector<double>& xs) {
    MeanSE r;
    r.count = xs.size();
    if (xs.empty()) return r;
    double sum = 0.0;
    for (double x : xs) sum += x;
    r.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return r;
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - r.mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(xs.size() - 1);
    r.se = std::sqrt(var / static_cast<double>(xs.size()));
    return r;
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median of empty sample");
    const std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
    double hi = xs[mid];
    if (xs.size() % 2 == 1) return hi;
    double lo = *std::max_element(xs.begin(), xs.begin() + mid);
    return 0.5 * (lo + hi);
}

namespace {

template <typename Cdf>
double ks_one_sample(std::vector<double> sorted, Cdf cdf) {
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        const double lo = f - static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n - f;
        d = std::max(d, std::max(lo, hi));
    }
    return d;
}

}  // namespace

double ks_uniform(const std::vector<double>& samples) {
    if (samples.size() < 100)
        throw std::invalid_argument("ks_uniform needs at least 100 samples");
    for (double x : samples)
        if (x < 0.0 || x > 1.0)
            throw std::invalid_argument("ks_uniform: sample outside [0,1]");
    return ks_one_sample(samples, [](double x) { return x; });
}

double ks_exp1(const std::vector<double>& samples) {
    if (samples.empty()) throw std::invalid_argument("ks_exp1: empty sample");
    return ks_one_sample(samples, [](double x) { return 1.0 - std::exp(-x); });
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace coaleps
