#pragma once

#include <functional>
#include <limits>

namespace cograte::numerics {

struct QuadratureSpec {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_subdivisions = 2000;

    void validate() const;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Gaussian tail probability Q(y) = P(Z > y), Z ~ N(0,1).
/// Saturates to 0 and 1 in the extreme tails.
double q_function(double y);

/// Standard normal density.
double normal_pdf(double y);

/// Inverse of q_function on (0,1). Throws DomainError outside that interval.
double q_inverse(double p);

/// Gamma(0, x) = E1(x) = integral_x^inf e^{-q}/q dq, for x > 0.
double upper_incomplete_gamma0(double x);

/// e^x * E1(x), finite for all x > 0 (no overflow for large x).
double scaled_upper_incomplete_gamma0(double x);

/// Adaptive Gauss-Kronrod (7/15) quadrature of f over [lower, upper].
/// upper may be +infinity; the tail is mapped onto [0,1) with
/// z = lower + t/(1-t). Throws ConvergenceError when max_subdivisions
/// is exhausted before the error estimate meets
/// max(abs_tol, rel_tol*|result|).
double integrate(const std::function<double(double)>& f, double lower, double upper,
                 const QuadratureSpec& spec = {});

}  // namespace cograte::numerics
