#pragma once

// Large-time behaviour of the volume N_t: the large-deviation rate function
// f_alpha and its two roots, the growth constant and fluid path, tail bound
// evaluation, and the two-scale refinement of the alpha = 1 bounds.

#include <cstdint>
#include <optional>

namespace polyalpha {

/// f_alpha(lambda) = (1+alpha) lambda log lambda - (1+alpha) lambda + lambda^-alpha.
/// Throws DomainError for lambda <= 0.
double rate_function(double lambda, double alpha);

struct RateRoots {
    double lambda_minus = 1.0;
    double lambda_plus = 1.0;
};

/// The two roots of f_alpha. For alpha = 0 the double root (1, 1) is returned.
/// Roots are bisected to full double precision, so |f_alpha(root)| is at
/// rounding level.
RateRoots rate_roots(double alpha);

/// (1+alpha)^(1/(1+alpha)): N_t ~ growth_constant * t^(1/(1+alpha)).
double growth_constant(double alpha);

/// X_u = ((1+alpha) u)^(1/(1+alpha)), the solution of dX/du = X^-alpha with X_0 = 0.
double fluid_path(double u, double alpha);

struct RateFunctionReport {
    double alpha = 0.0;
    double lambda_minus = 1.0;
    double lambda_plus = 1.0;
    double growth_constant = 1.0;
};

RateFunctionReport rate_function_report(double alpha);

/// exp(-(1-epsilon) f_alpha(lambda) t^(1/(1+alpha))) when lambda lies below
/// lambda_minus (lower tail) or above lambda_plus (upper tail); empty inside
/// [lambda_minus, lambda_plus], where no bound is available.
std::optional<double> tail_bound(double lambda, double alpha, std::uint64_t t, double epsilon);

/// Two-scale refinement (alpha = 1). Splitting [0, t] in halves relates the
/// bound's lambda to a split fraction theta in (0, 1/2) through
/// lambda(theta) = sqrt(theta / (2 (1-theta) (log 2 + theta log theta + (1-theta) log(1-theta))))
/// with exponent coefficient
/// g(theta) = 2 lambda log lambda - 2 lambda + 1/(2 lambda) + 1/(2 (1-theta) lambda).
double split_lambda(double theta);
double split_exponent(double theta);

struct ImprovedBoundsReport {
    double theta_lower = 0.0;
    double lambda_minus_improved = 0.0;
    double theta_upper = 0.0;
    double lambda_plus_improved = 0.0;
};

/// Both roots of g on (0, 1/2). Throws NumericalError unless exactly two
/// sign changes are found.
ImprovedBoundsReport improved_bounds_alpha1();

}  // namespace polyalpha
