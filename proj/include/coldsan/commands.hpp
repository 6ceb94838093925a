#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "coldsan/config.hpp"
#include "coldsan/encoders.hpp"
#include "coldsan/error.hpp"
#include "coldsan/gradcheck.hpp"

namespace coldsan {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_data = 3,
    exit_numeric = 4,
};

int exit_code_for(ErrorKind kind);

inline constexpr double kGradcheckEpsilon = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr std::size_t kGradcheckBatch = 4;

struct GradcheckRow {
    EncoderKind encoder = EncoderKind::content;
    GradCheckResult result;
    bool passed = false;
};

/// Finite-difference check of the full adversarial objective for every
/// encoder on a seeded 4-sample batch. `corrupt` perturbs one analytic
/// gradient entry so the failure path can be exercised.
std::vector<GradcheckRow> run_gradcheck(const RunConfig& config, std::uint64_t seed,
                                        double epsilon = kGradcheckEpsilon, bool corrupt = false);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coldsan
