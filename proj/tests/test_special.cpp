#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "annsle/core.hpp"
#include "annsle/special.hpp"

using namespace annsle;

TEST_CASE("quadrature handles both limit orders") {
    auto f = [](double x) { return std::sin(x); };
    CHECK(integrate(f, 0.0, kPi, 1e-12) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(integrate(f, kPi, 0.0, 1e-12) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(integrate(f, 1.0, 1.0, 1e-12) == 0.0);
}

TEST_CASE("J integrates to 2 pi / r over one period") {
    for (double r : {0.05, 0.2, 1.0, 7.0, 50.0}) {
        double got = integrate([&](double x) { return eval_J(r, x); }, 0.0, kTwoPi, 1e-12);
        CHECK(got == doctest::Approx(kTwoPi / r).epsilon(1e-10));
    }
}

TEST_CASE("J is even, 2pi-periodic, and matches its defining sum") {
    for (double r : {0.1, 0.7, 3.0}) {
        for (double x : {0.0, 0.4, 1.9, 3.0}) {
            CHECK(eval_J(r, x) == doctest::Approx(eval_J(r, -x)).epsilon(1e-14));
            CHECK(eval_J(r, x) == doctest::Approx(eval_J(r, x + kTwoPi)).epsilon(1e-14));
            // direct image sum of the top-edge Poisson kernel
            double direct = 0.0;
            for (int k = -40; k <= 40; ++k) {
                direct += 2.0 * poisson_strip_boundary(r, x + kTwoPi * k, StripEdge::top);
            }
            CHECK(eval_J(r, x) == doctest::Approx(direct).epsilon(1e-12));
        }
    }
}

TEST_CASE("certified truncation reports a small achieved tail") {
    SumTruncation t;
    t.abs_tol = 1e-12;
    eval_J(0.3, 0.9, t);
    CHECK(t.achieved_tail_bound <= 1e-12);
    SumTruncation tight;
    tight.abs_tol = 1e-12;
    tight.max_terms = 2; // cannot possibly converge
    CHECK_THROWS_AS(eval_J(40.0, 0.9, tight), TruncationError);
}

TEST_CASE("H_I: quadrature and series routes agree") {
    for (double r : {0.2, 1.0, 5.0}) {
        for (double x : {-2.9, -1.3, 0.0, 0.4, 2.0, 3.1}) {
            CHECK(eval_H_I(r, x) == doctest::Approx(eval_H_I_series(r, x)).epsilon(1e-9));
        }
    }
}

TEST_CASE("H_I is odd and 2pi-periodic (quadrature route)") {
    for (double r : {0.3, 1.0, 4.0}) {
        for (double x : {0.5, 1.7, 2.9}) {
            CHECK(eval_H_I(r, x) == doctest::Approx(-eval_H_I(r, -x)).epsilon(1e-10));
            CHECK(eval_H_I(r, x) == doctest::Approx(eval_H_I(r, x + kTwoPi)).epsilon(1e-9));
        }
        CHECK(std::abs(eval_H_I(r, kPi)) < 1e-10);
    }
}

TEST_CASE("H_I_prime is J - 1/r") {
    CHECK(eval_H_I_prime(0.8, 0.3) == doctest::Approx(eval_J(0.8, 0.3) - 1.0 / 0.8));
}

TEST_CASE("A is even, positive, and explodes far outside the period") {
    for (double r : {0.3, 1.0}) {
        for (double x : {0.0, 0.8, 2.5}) {
            double a = eval_A(r, x);
            CHECK(a >= 0.0);
            CHECK(a == doctest::Approx(eval_A(r, -x)).epsilon(1e-13));
        }
    }
    // outside [-2pi, 2pi] the potential saturates near pi^2/r^2
    CHECK(eval_A(0.3, 7.0) > 1e2);
    CHECK(eval_A(0.3, 10.0) == doctest::Approx(kPi * kPi / 0.09).epsilon(0.05));
    CHECK(eval_A(1.0, 0.0) < 1e-15);
}

TEST_CASE("eval_A_fast matches eval_A up to the documented screen") {
    for (double r : {0.3, 0.7, 1.5}) {
        for (double x : {0.0, 1.0, 2.0, 3.0, 4.5, 6.0, 7.0}) {
            CHECK(std::abs(eval_A_fast(r, x) - eval_A(r, x)) <= 1e-10);
        }
    }
}

TEST_CASE("tilde trio is consistent and blows up at the right edge") {
    for (double r : {0.4, 1.2}) {
        for (double x : {0.5, 2.0, 4.0}) {
            TildeFunctions t = eval_tilde_functions(r, x);
            CHECK(t.A_tilde == doctest::Approx(eval_A_tilde(r, x)));
            CHECK(t.H_I_tilde == doctest::Approx(eval_H_I_tilde(r, x)));
            CHECK(t.L_tilde == doctest::Approx(eval_L_tilde(r, x)));
        }
    }
    CHECK(eval_A_tilde(0.5, kTwoPi - 1e-4) > 1e3);
    CHECK_THROWS_AS(eval_A_tilde(1.0, -0.1), std::domain_error);
    CHECK_THROWS_AS(eval_H_I_tilde(1.0, kTwoPi), std::domain_error);
}

TEST_CASE("Gamma and delta: cross-route agreement and asymptotics") {
    for (double r : {0.2, 0.5, 1.0, 3.0, 9.0}) {
        GammaDelta gd = eval_Gamma_delta(r);
        CHECK(gd.Gamma == doctest::Approx(kPi * kPi / (12.0 * r * r) + gd.delta).epsilon(1e-13));
        CHECK(std::abs(gd.delta - eval_delta_termwise(r)) < 1e-10);
    }
    // large r: 2 r Gamma -> 1 exponentially
    CHECK(std::abs(2.0 * 8.0 * eval_Gamma_delta(8.0).Gamma - 1.0) < 10.0 * std::exp(-8.0));
    // small r: delta -> 1/12, so Gamma is dominated by pi^2/12r^2
    CHECK(eval_Gamma_delta(0.1).delta == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("m* is nonnegative, tiny at small r, log-corrected at large r") {
    double small = eval_mstar(0.1);
    CHECK(std::abs(small) < 1e-12); // analytically ~e^{-190}; quadrature noise only
    double v20 = eval_mstar(20.0) - 20.0 / 6.0 + std::log(20.0) + kPi * kPi / (6.0 * 20.0);
    double v30 = eval_mstar(30.0) - 30.0 / 6.0 + std::log(30.0) + kPi * kPi / (6.0 * 30.0);
    CHECK(v30 == doctest::Approx(v20).epsilon(1e-8));
}

TEST_CASE("complex kernel: expansion, boundary value, periodicity, derivative") {
    using C = std::complex<double>;
    for (double r : {0.8, 2.0}) {
        double gamma = eval_Gamma_delta(r).Gamma;
        C z(0.01, 0.005);
        C expand = -1.0 / z + z * (0.5 / r - gamma + 1.0 / 12.0);
        CHECK(std::abs(eval_complex_kernel(r, z) - expand) < 1e-4);

        for (double x : {0.3, 1.8}) {
            C top = eval_complex_kernel(r, C(x, r));
            CHECK(top.real() == doctest::Approx(-0.5 * eval_H_I(r, x)).epsilon(1e-9));
            CHECK(top.imag() == doctest::Approx(0.5).epsilon(1e-10));
        }

        C w(0.9, 0.4 * r);
        CHECK(std::abs(eval_complex_kernel(r, w + kTwoPi) - eval_complex_kernel(r, w)) < 1e-11);

        C h = C(1e-6, 0.0);
        C fd = (eval_complex_kernel(r, w + h) - eval_complex_kernel(r, w - h)) / (2.0 * h);
        CHECK(std::abs(fd - eval_complex_kernel_deriv(r, w)) < 1e-6);
    }
}

TEST_CASE("scalar functions: exact kappa=2 closure of lambda") {
    SleParams p2 = derive_params(2.0);
    for (double r : {0.5, 1.0, 2.0, 6.0}) {
        ScalarFunctions s = eval_scalars(r, 0.7, p2);
        // alpha = b - b_tilde + (2b + c) Gamma = 1 at kappa = 2
        CHECK(s.alpha == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.lambda == doctest::Approx(r * std::exp(-(r - 1.0))).epsilon(1e-9));
        CHECK(s.beta == doctest::Approx(std::exp(p2.b * r - p2.c * eval_mstar(r) / 2.0))
                            .epsilon(1e-9));
        CHECK(s.Theta ==
              doctest::Approx(eval_H_I_prime(r, 0.7) + s.alpha / p2.b - 1.0 / r).epsilon(1e-12));
    }
}

TEST_CASE("supported modulus range endpoints evaluate") {
    CHECK(std::isfinite(eval_J(0.05, 0.3)));
    CHECK(std::isfinite(eval_J(50.0, 0.3)));
    CHECK(std::isfinite(eval_Gamma_delta(50.0).Gamma));
    CHECK_THROWS_AS(eval_J(-1.0, 0.0), std::domain_error);
}
