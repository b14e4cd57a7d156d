#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace normlab::cli {

struct GradcheckOptions {
    std::uint64_t seed = 0;
    double step = 1e-5;      // central-difference step
    double tolerance = 1e-5; // max relative error
    // Name of one check whose analytic gradient is deliberately perturbed,
    // to prove the harness can fail. Empty for a normal run.
    std::string fault;
};

struct GradcheckEntry {
    std::string check;   // e.g. "GN[G=2]", "GNPlusGNFirst"
    std::string shape;
    double max_rel_error = 0.0;
    std::size_t compared = 0;
    bool pass = false;
};

// |a - b| / max(|a|, |b|, kRelErrorFloor)
inline constexpr double kRelErrorFloor = 1e-4;
double relative_error(double analytic, double numeric);

// Finite-difference comparison for conv, relu, pool, linear, cross-entropy,
// BN, GN (G in {1, 2, 4}), the three gated variants (input, gamma, beta and
// lambda gradients) and an end-to-end two-block network per normalization kind.
std::vector<GradcheckEntry> run_gradcheck(const GradcheckOptions &options);

} // namespace normlab::cli
