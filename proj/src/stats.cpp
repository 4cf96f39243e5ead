#include "polyalpha/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "polyalpha/errors.hpp"

namespace polyalpha {

MeanEstimate estimate_mean(std::span<const double> xs) {
    MeanEstimate e;
    e.n = xs.size();
    if (xs.empty()) return e;
    double sum = 0.0;
    for (double x : xs) sum += x;
    e.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - e.mean) * (x - e.mean);
        const double var = ss / static_cast<double>(xs.size() - 1);
        e.se = std::sqrt(var / static_cast<double>(xs.size()));
    }
    return e;
}

MeanEstimate estimate_paired_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("paired samples must have equal length");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return estimate_mean(diff);
}

VarianceEstimate estimate_variance(std::span<const double> xs) {
    VarianceEstimate e;
    e.n = xs.size();
    if (xs.size() < 2) return e;
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d2 = (x - mean) * (x - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    e.variance = m2 * n / (n - 1.0);
    e.se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
    return e;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    const double low = successes == 0 ? 0.0 : std::max(0.0, center - half);
    const double high = successes == trials ? 1.0 : std::min(1.0, center + half);
    return {low, high};
}

double proportion_se(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) return 0.0;
    const double p = static_cast<double>(successes) / static_cast<double>(trials);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace polyalpha
