#pragma once

#include <cstddef>
#include <functional>

#include "coldsan/params.hpp"

namespace coldsan {

inline constexpr double kRelativeErrorFloor = 1e-6;

/// An objective as seen by the gradient checker.
///
/// `value(params, id)` is the scalar whose derivative the parameter `id` is
/// expected to follow. For ordinary losses it ignores `id`; for the adversarial
/// objective the encoder sees L_cls - coeff * L_d while the heads see
/// L_cls + L_d, because the reversal layer makes the recorded gradient a
/// per-group quantity rather than the gradient of one scalar.
struct Objective {
    std::function<Gradients(const ParamSets&)> gradient;
    std::function<double(const ParamSets&, ParamId)> value;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    ParamId worst_param{};
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
};

/// Central differences (L(p+eps) - L(p-eps)) / 2eps against the analytic
/// gradient for every scalar parameter. Relative error uses the denominator
/// max(|analytic|, |numeric|, kRelativeErrorFloor); the floor keeps rounding
/// noise on exactly-zero gradients from reading as a large relative error.
GradCheckResult finite_difference_check(const Objective& objective, const ParamSets& params, double epsilon);

}  // namespace coldsan
