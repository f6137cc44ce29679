#include "xcohort/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "xcohort/error.hpp"

namespace xcohort::math {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;

double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    fail(ErrorCode::Internal, "incomplete beta continued fraction did not converge");
}

}  // namespace

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) fail(ErrorCode::InvalidValue, "incomplete_beta requires a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) fail(ErrorCode::InvalidValue, "gamma_p requires a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) {
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int n = 0; n < kMaxIter; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * kEps) {
                return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
            }
        }
        fail(ErrorCode::Internal, "incomplete gamma series did not converge");
    }
    return 1.0 - gamma_q(a, x);
}

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) fail(ErrorCode::InvalidValue, "gamma_q requires a > 0, x >= 0");
    if (x < a + 1.0) return 1.0 - gamma_p(a, x);
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
        }
    }
    fail(ErrorCode::Internal, "incomplete gamma continued fraction did not converge");
}

double incomplete_beta_inverse(double a, double b, double p) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidValue, "probability outside [0, 1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    // Bisection to full double resolution; I_x is monotone in x.
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (incomplete_beta(a, b, mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double f_cdf(double f, double d1, double d2) {
    if (f <= 0.0) return 0.0;
    const double x = d1 * f / (d1 * f + d2);
    return incomplete_beta(0.5 * d1, 0.5 * d2, x);
}

double f_sf(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    // I_{1-x}(b, a) keeps precision in the far tail.
    const double y = d2 / (d1 * f + d2);
    return incomplete_beta(0.5 * d2, 0.5 * d1, y);
}

double f_quantile(double p, double d1, double d2) {
    const double x = incomplete_beta_inverse(0.5 * d1, 0.5 * d2, p);
    if (x >= 1.0) return std::numeric_limits<double>::infinity();
    return d2 * x / (d1 * (1.0 - x));
}

double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace xcohort::math
