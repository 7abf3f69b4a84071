#include "cograte/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "cograte/error.hpp"

namespace cograte::numerics {

void QuadratureSpec::validate() const {
    if (!(rel_tol > 0.0)) throw DomainError("QuadratureSpec: rel_tol must be > 0");
    if (!(abs_tol >= 0.0)) throw DomainError("QuadratureSpec: abs_tol must be >= 0");
    if (max_subdivisions < 1) throw DomainError("QuadratureSpec: max_subdivisions must be >= 1");
}

double q_function(double y) { return 0.5 * std::erfc(y / std::numbers::sqrt2); }

double normal_pdf(double y) {
    return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi);
}

namespace {

// log Q(y), usable beyond the point where Q itself underflows.
double log_q(double y) {
    if (y < 30.0) return std::log(q_function(y));
    // Asymptotic expansion of the Mills ratio.
    const double inv2 = 1.0 / (y * y);
    double term = 1.0;
    double series = 1.0;
    for (int k = 1; k < 8; ++k) {
        term *= -(2.0 * k - 1.0) * inv2;
        series += term;
    }
    return -0.5 * y * y - std::log(y * std::sqrt(2.0 * std::numbers::pi)) + std::log(series);
}

double log_normal_pdf(double y) { return -0.5 * y * y - 0.5 * std::log(2.0 * std::numbers::pi); }

// Root of Q(y) = p for p in (0, 0.5]; y >= 0.
double q_inverse_upper(double p) {
    if (p == 0.5) return 0.0;
    const double target = std::log(p);
    // Abramowitz & Stegun 26.2.23 starting point (|error| < 4.5e-4).
    const double t = std::sqrt(-2.0 * target);
    double y = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                       (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
    double lo = 0.0;
    double hi = 40.0;
    y = std::clamp(y, lo, hi);
    for (int it = 0; it < 100; ++it) {
        const double g = log_q(y) - target;  // decreasing in y
        if (g > 0.0)
            lo = y;
        else
            hi = y;
        // Newton on log Q: d/dy log Q = -pdf/Q
        const double step = g * std::exp(log_q(y) - log_normal_pdf(y));
        double next = y + step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - y) <= 1e-16 * std::max(1.0, std::abs(y))) return next;
        y = next;
    }
    return y;
}

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Series for E1 on (0, 1].
double e1_series(double x) {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= -x / k;
        const double add = term / k;
        sum += add;
        if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return -kEulerGamma - std::log(x) - sum;
}

// Continued fraction (modified Lentz) for e^x E1(x), x > 1.
double e1_scaled_cf(double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h;
}

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod(const F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * sum;
        if (j % 2 == 1) gauss += kWg[j / 2] * sum;
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

template <class F>
double adaptive(const F& f, double a, double b, const QuadratureSpec& spec) {
    std::priority_queue<Segment> work;
    Segment first = gauss_kronrod(f, a, b);
    double total = first.value;
    double error = first.error;
    work.push(first);
    int subdivisions = 0;
    while (true) {
        if (!std::isfinite(total) || !std::isfinite(error))
            throw ConvergenceError("integrate: non-finite integrand value");
        if (error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) break;
        if (subdivisions >= spec.max_subdivisions)
            throw ConvergenceError("integrate: tolerance not met after " +
                                   std::to_string(subdivisions) + " subdivisions (error estimate " +
                                   std::to_string(error) + ")");
        Segment worst = work.top();
        work.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b))
            throw ConvergenceError("integrate: interval collapsed below machine resolution");
        Segment left = gauss_kronrod(f, worst.a, mid);
        Segment right = gauss_kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        work.push(left);
        work.push(right);
        ++subdivisions;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    double sum = 0.0;
    while (!work.empty()) {
        sum += work.top().value;
        work.pop();
    }
    return sum;
}

}  // namespace

double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("q_inverse: p must lie in (0,1)");
    if (p <= 0.5) return q_inverse_upper(p);
    // 1 - p is exact for p in [0.5, 1).
    return -q_inverse_upper(1.0 - p);
}

double upper_incomplete_gamma0(double x) {
    if (!(x > 0.0)) throw DomainError("upper_incomplete_gamma0: x must be > 0");
    if (x <= 1.0) return e1_series(x);
    return std::exp(-x) * e1_scaled_cf(x);
}

double scaled_upper_incomplete_gamma0(double x) {
    if (!(x > 0.0)) throw DomainError("scaled_upper_incomplete_gamma0: x must be > 0");
    if (x <= 1.0) return std::exp(x) * e1_series(x);
    return e1_scaled_cf(x);
}

double integrate(const std::function<double(double)>& f, double lower, double upper,
                 const QuadratureSpec& spec) {
    spec.validate();
    if (std::isnan(lower) || std::isnan(upper) || std::isinf(lower))
        throw DomainError("integrate: lower must be finite and upper must not be NaN");
    if (upper == lower) return 0.0;
    if (std::isinf(upper)) {
        if (upper < 0.0) throw DomainError("integrate: upper = -inf is not supported");
        auto mapped = [&](double t) {
            const double s = 1.0 - t;
            return f(lower + t / s) / (s * s);
        };
        return adaptive(mapped, 0.0, 1.0, spec);
    }
    if (upper < lower) return -adaptive(f, upper, lower, spec);
    return adaptive(f, lower, upper, spec);
}

}  // namespace cograte::numerics
