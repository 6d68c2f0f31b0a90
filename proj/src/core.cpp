#include "annsle/core.hpp"

namespace annsle {

SleParams derive_params(double kappa) {
    if (!(kappa > 0.0) || !(kappa <= 4.0)) {
        throw std::domain_error("derive_params: kappa must lie in (0, 4], got " + std::to_string(kappa));
    }
    SleParams p;
    p.kappa = kappa;
    p.a = 2.0 / kappa;
    p.b = (6.0 - kappa) / (2.0 * kappa);
    p.b_tilde = p.b * (kappa - 2.0) / 4.0;
    p.c = p.b * (3.0 * kappa - 8.0); // central charge, = 12 b_tilde - 2 b
    return p;
}

double wrap_to_pi(double x) {
    double y = std::fmod(x + kPi, kTwoPi);
    if (y < 0.0) y += kTwoPi;
    return y - kPi;
}

} // namespace annsle
