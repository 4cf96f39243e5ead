#include "polyalpha/asymptotics.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "polyalpha/errors.hpp"

namespace polyalpha {

namespace {

// Bisection to the resolution of double precision. `lo` and `hi` must bracket a sign change.
double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double f_lo = f(lo);
    for (int i = 0; i < 400; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    // pick whichever endpoint has the smaller residual
    return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

double golden_section_min(const std::function<double(double)>& f, double lo, double hi) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-12 * (1.0 + std::abs(a))) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

double rate_function(double lambda, double alpha) {
    if (!(lambda > 0.0)) {
        std::ostringstream os;
        os << "rate function is defined for lambda > 0, got " << lambda;
        throw DomainError(os.str());
    }
    return (1.0 + alpha) * lambda * std::log(lambda) - (1.0 + alpha) * lambda +
           std::pow(lambda, -alpha);
}

RateRoots rate_roots(double alpha) {
    if (!(alpha >= 0.0)) throw DomainError("alpha must be >= 0");
    if (alpha == 0.0) return {1.0, 1.0};
    const auto f = [alpha](double x) { return rate_function(x, alpha); };
    // f is strictly convex on (0, inf), so the minimizer splits the two roots.
    const double lo = 1e-6;
    const double argmin = golden_section_min(f, lo, 10.0 * (1.0 + alpha));
    if (!(f(argmin) < 0.0)) {
        std::ostringstream os;
        os << "rate function has no negative minimum for alpha = " << alpha;
        throw NumericalError(os.str());
    }
    double hi = 2.0 * argmin;
    while (f(hi) <= 0.0) hi *= 2.0;
    return {bisect(f, lo, argmin), bisect(f, argmin, hi)};
}

double growth_constant(double alpha) { return std::pow(1.0 + alpha, 1.0 / (1.0 + alpha)); }

double fluid_path(double u, double alpha) {
    if (!(u >= 0.0)) throw DomainError("fluid path is defined for u >= 0");
    return std::pow((1.0 + alpha) * u, 1.0 / (1.0 + alpha));
}

RateFunctionReport rate_function_report(double alpha) {
    const RateRoots roots = rate_roots(alpha);
    return {alpha, roots.lambda_minus, roots.lambda_plus, growth_constant(alpha)};
}

std::optional<double> tail_bound(double lambda, double alpha, std::uint64_t t, double epsilon) {
    if (t < 1) throw DomainError("tail bound requires t >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
    const RateRoots roots = rate_roots(alpha);
    if (lambda >= roots.lambda_minus && lambda <= roots.lambda_plus) return std::nullopt;
    const double scale = std::pow(static_cast<double>(t), 1.0 / (1.0 + alpha));
    return std::exp(-(1.0 - epsilon) * rate_function(lambda, alpha) * scale);
}

double split_lambda(double theta) {
    if (!(theta > 0.0 && theta < 0.5)) throw DomainError("split fraction must lie in (0, 1/2)");
    const double entropy_gap =
        std::log(2.0) + theta * std::log(theta) + (1.0 - theta) * std::log1p(-theta);
    return std::sqrt(theta / (2.0 * (1.0 - theta) * entropy_gap));
}

double split_exponent(double theta) {
    const double lambda = split_lambda(theta);
    return 2.0 * lambda * std::log(lambda) - 2.0 * lambda + 1.0 / (2.0 * lambda) +
           1.0 / (2.0 * (1.0 - theta) * lambda);
}

ImprovedBoundsReport improved_bounds_alpha1() {
    constexpr int kGrid = 4000;
    constexpr double kEdge = 1e-6;
    std::vector<std::pair<double, double>> brackets;
    double prev_x = kEdge;
    double prev_g = split_exponent(prev_x);
    for (int i = 1; i <= kGrid; ++i) {
        const double x = kEdge + (0.5 - 2.0 * kEdge) * i / kGrid;
        const double g = split_exponent(x);
        if ((g > 0.0) != (prev_g > 0.0)) brackets.emplace_back(prev_x, x);
        prev_x = x;
        prev_g = g;
    }
    if (brackets.size() != 2) {
        std::ostringstream os;
        os << "expected exactly two sign changes of the split exponent on (0, 1/2), found "
           << brackets.size();
        for (const auto& [a, b] : brackets) os << " [" << a << ", " << b << "]";
        throw NumericalError(os.str());
    }
    ImprovedBoundsReport r;
    r.theta_lower = bisect(split_exponent, brackets[0].first, brackets[0].second);
    r.theta_upper = bisect(split_exponent, brackets[1].first, brackets[1].second);
    r.lambda_minus_improved = split_lambda(r.theta_lower);
    r.lambda_plus_improved = split_lambda(r.theta_upper);
    return r;
}

}  // namespace polyalpha
