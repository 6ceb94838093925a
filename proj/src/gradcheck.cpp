#include "coldsan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "coldsan/error.hpp"

namespace coldsan {

GradCheckResult finite_difference_check(const Objective& objective, const ParamSets& params, double epsilon) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
        throw ConfigError("finite-difference epsilon must lie in [1e-7, 1e-3]");

    const Gradients analytic = objective.gradient(params);
    ParamSets probe = params;
    GradCheckResult result;

    for (const auto& id : params.ids()) {
        auto it = analytic.find(id);
        if (it == analytic.end())
            throw ConsistencyError("objective produced no gradient for " + std::string(to_string(id.group)) + "." +
                                   params.group(id.group)[id.index].name);
        Tensor& p = probe.at(id);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            p[i] = saved + epsilon;
            const double up = objective.value(probe, id);
            p[i] = saved - epsilon;
            const double down = objective.value(probe, id);
            p[i] = saved;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw NumericError("non-finite loss while probing " + std::string(to_string(id.group)) + "." +
                                   params.group(id.group)[id.index].name);

            const double numeric = (up - down) / (2.0 * epsilon);
            const double a = it->second[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), kRelativeErrorFloor});
            const double rel = std::abs(a - numeric) / denom;
            ++result.checked;
            if (rel > result.max_relative_error || result.checked == 1) {
                result.max_relative_error = rel;
                result.worst_param = id;
                result.worst_index = i;
                result.worst_analytic = a;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace coldsan
