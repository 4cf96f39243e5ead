#pragma once

#include <cstdint>
#include <span>

namespace polyalpha {

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;  ///< sample standard deviation / sqrt(n)
    std::uint64_t n = 0;
};

/// Sample mean and its standard error. Summation runs in index order.
MeanEstimate estimate_mean(std::span<const double> xs);

/// Mean of a - b over paired samples (common random numbers).
MeanEstimate estimate_paired_difference(std::span<const double> a, std::span<const double> b);

struct VarianceEstimate {
    double variance = 0.0;  ///< unbiased sample variance
    double se = 0.0;        ///< large-sample standard error from the fourth central moment
    std::uint64_t n = 0;
};

VarianceEstimate estimate_variance(std::span<const double> xs);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Wilson score interval for a binomial proportion at normal quantile z.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

/// Standard error of a binomial proportion estimate.
double proportion_se(std::uint64_t successes, std::uint64_t trials);

}  // namespace polyalpha
