#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "annsle/core.hpp"

namespace annsle {

enum class SdeKind { locally_chordal, tilde_chordal, hi_drift };

// One-dimensional driving-function SDEs, all with diffusion sqrt(kappa):
//   locally_chordal: drift H_I(r-t, x) - b kappa L(r-t, x)
//   tilde_chordal:   drift 2 Htilde_I(r-t, x) - b kappa Ltilde(r-t, x),
//                    absorbed at x = 0
//   hi_drift:        drift H_I(r-t, x)
struct SdeSpec {
    SdeKind kind = SdeKind::locally_chordal;
    double r = 1.0;
    double kappa = 2.0;
};

struct SdePath {
    double dt = 0.0;
    double x0 = 0.0;
    std::vector<double> samples; // x at t_j = j dt, samples[0] = x0
    std::optional<double> stopped_at; // absorption time (tilde_chordal)
};

// Euler-Maruyama on [0, r - dt].  For tilde_chordal the step switches to
// dt/16 substepping near the absorbing boundary and freezes the path at the
// first nonpositive value.
SdePath simulate(const SdeSpec& spec, double x0, double dt, std::uint64_t seed);

// Endpoint-only variant with the A-functional accumulated along the way;
// avoids storing paths when only exp{-2b int A} is needed.
struct PathSummary {
    double endpoint;
    double a_integral;                 // int_0^horizon A(r-s, X_s) ds
    std::optional<double> stopped_at;
};
PathSummary simulate_summary(const SdeSpec& spec, double x0, double dt, std::uint64_t seed);

// exp{-2b int_0^horizon A(r-s, X_s) ds} by left-endpoint Riemann sum;
// truncated at absorption for tilde_chordal paths.  Value in (0, 1].
double path_functional_A(const SdePath& path, double r, const SleParams& p,
                         SdeKind variant = SdeKind::locally_chordal);

} // namespace annsle
