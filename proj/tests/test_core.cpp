#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "annsle/core.hpp"

using namespace annsle;

TEST_CASE("derived parameters at reference kappa values") {
    SleParams p2 = derive_params(2.0);
    CHECK(p2.a == doctest::Approx(1.0));
    CHECK(p2.b == doctest::Approx(1.0));
    CHECK(p2.b_tilde == doctest::Approx(0.0));
    CHECK(p2.c == doctest::Approx(-2.0));

    SleParams p83 = derive_params(8.0 / 3.0);
    CHECK(p83.b == doctest::Approx(5.0 / 8.0));
    CHECK(p83.c == doctest::Approx(0.0));

    SleParams p3 = derive_params(3.0);
    CHECK(p3.b == doctest::Approx(0.5));
    CHECK(p3.c == doctest::Approx(0.5));

    SleParams p4 = derive_params(4.0);
    CHECK(p4.a == doctest::Approx(0.5));
    CHECK(p4.b == doctest::Approx(0.25));
    CHECK(p4.c == doctest::Approx(1.0));

    // consistency of the two central-charge formulas
    for (double k : {0.5, 1.7, 2.0, 3.3, 4.0}) {
        SleParams p = derive_params(k);
        CHECK(p.c == doctest::Approx(12.0 * p.b_tilde - 2.0 * p.b));
    }
}

TEST_CASE("kappa domain is (0, 4]") {
    CHECK_THROWS_AS(derive_params(0.0), std::domain_error);
    CHECK_THROWS_AS(derive_params(-1.0), std::domain_error);
    CHECK_THROWS_AS(derive_params(4.0001), std::domain_error);
    CHECK_NOTHROW(derive_params(4.0));
    CHECK_NOTHROW(derive_params(1e-6));
}

TEST_CASE("wrap_to_pi lands in [-pi, pi)") {
    CHECK(wrap_to_pi(0.3) == doctest::Approx(0.3));
    CHECK(wrap_to_pi(kPi + 0.1) == doctest::Approx(-kPi + 0.1));
    CHECK(wrap_to_pi(-kPi - 0.1) == doctest::Approx(kPi - 0.1));
    CHECK(wrap_to_pi(7.0) == doctest::Approx(7.0 - kTwoPi));
    CHECK(wrap_to_pi(100.5) < kPi);
    CHECK(wrap_to_pi(100.5) >= -kPi);
    CHECK(wrap_to_pi(kPi) == doctest::Approx(-kPi));
}

TEST_CASE("rng is deterministic and stream-separated") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u64();
        CHECK(va == b.next_u64());
    }
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 100; ++i) differs = differs || (a2.next_u64() != c.next_u64());
    CHECK(differs);

    // per-path streams from the same master seed are distinct
    Rng s0(7, 0), s1(7, 1);
    CHECK(s0.next_u64() != s1.next_u64());
}

TEST_CASE("rng uniforms and normals are sane") {
    Rng r(2026);
    double mean = 0.0, var = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = r.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < n; ++i) {
        double z = r.next_normal();
        mean += z;
        var += z * z;
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("periodic grid access wraps") {
    Grid1P g;
    g.r = 1.0;
    g.n_x = 4;
    g.values = {10.0, 11.0, 12.0, 13.0};
    CHECK(g.at(0) == 10.0);
    CHECK(g.at(5) == 11.0);
    CHECK(g.at(-1) == 13.0);
    CHECK(g.x_at(0) == doctest::Approx(-kPi));
    CHECK(g.x_at(2) == doctest::Approx(0.0));
}
