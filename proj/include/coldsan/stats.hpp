#pragma once

#include <span>

namespace coldsan {

/// Regularised incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

struct PairedTTest {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;
    double mean_difference = 0.0;
    /// All differences zero: no evidence either way, p reported as 1.
    bool degenerate = false;
};

/// Paired two-sided t-test on a[i] - b[i]. A zero-variance, nonzero-mean
/// difference gives |t| = inf and p = 0.
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace coldsan
