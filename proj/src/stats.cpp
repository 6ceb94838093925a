#include "coldsan/stats.hpp"

#include <cmath>
#include <limits>

#include "coldsan/error.hpp"

namespace coldsan {

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 10000;
    constexpr double eps = 1e-16;
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps)
            return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0))
        throw NumericError("incomplete beta needs positive shape parameters");
    if (!(x >= 0.0 && x <= 1.0))
        throw NumericError("incomplete beta argument outside [0, 1]");
    if (x == 0.0 || x == 1.0)
        return x;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
    if (!(df > 0.0))
        throw NumericError("degrees of freedom must be positive");
    if (std::isnan(t))
        return 1.0;
    if (std::isinf(t))
        return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("paired t-test needs equal-length samples");
    const std::size_t n = a.size();
    if (n < 2)
        throw DimensionError("paired t-test needs at least two pairs");

    PairedTTest r;
    r.df = static_cast<double>(n - 1);
    double mean = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        mean += d;
        all_zero = all_zero && d == 0.0;
    }
    mean /= static_cast<double>(n);
    r.mean_difference = mean;
    if (all_zero) {
        r.degenerate = true;
        return r;
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / r.df);
    const double se = sd / std::sqrt(static_cast<double>(n));
    // Differences equal up to rounding count as zero variance.
    if (se <= 1e-12 * std::abs(mean)) {
        r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
        r.p_value = 0.0;
        return r;
    }
    r.t = mean / se;
    r.p_value = student_t_two_sided(r.t, r.df);
    return r;
}

}  // namespace coldsan
