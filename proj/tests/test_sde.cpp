#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "annsle/core.hpp"
#include "annsle/sde.hpp"
#include "annsle/special.hpp"

using namespace annsle;

TEST_CASE("argument validation") {
    SdeSpec spec{SdeKind::locally_chordal, 1.0, 3.0};
    CHECK_THROWS_AS(simulate(spec, 0.5, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate(spec, 0.5, 0.02, 1), std::invalid_argument); // dt > r/100
    SdeSpec tilde{SdeKind::tilde_chordal, 1.0, 3.0};
    CHECK_THROWS_AS(simulate(tilde, 0.0, 1e-3, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate(tilde, kTwoPi, 1e-3, 1), std::invalid_argument);
}

TEST_CASE("path layout and determinism") {
    SdeSpec spec{SdeKind::hi_drift, 0.5, 2.0};
    SdePath a = simulate(spec, 0.3, 1e-3, 99);
    SdePath b = simulate(spec, 0.3, 1e-3, 99);
    SdePath c = simulate(spec, 0.3, 1e-3, 100);
    CHECK(a.samples.size() == 500); // round(r/dt) - 1 steps plus the start
    CHECK(a.samples[0] == 0.3);
    CHECK(a.dt == 1e-3);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
    CHECK(!a.stopped_at);
}

TEST_CASE("hi_drift paths stay symmetric in distribution") {
    SdeSpec spec{SdeKind::hi_drift, 1.0, 3.0};
    double mean = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        mean += simulate_summary(spec, 0.0, 1e-3, Rng(4, i).next_u64()).endpoint;
    }
    mean /= n;
    // E X_end = 0 by oddness of the drift; se ~ sqrt(kappa r / n) ~ 0.039
    CHECK(std::abs(mean) < 0.12);
}

TEST_CASE("locally chordal paths collapse to the origin") {
    SdeSpec spec{SdeKind::locally_chordal, 0.5, 3.0};
    int hits = 0;
    const int n = 300;
    for (int i = 0; i < n; ++i) {
        double e = simulate_summary(spec, 0.5, 1e-3, Rng(7, i).next_u64()).endpoint;
        if (std::abs(e) < 0.1) ++hits;
    }
    CHECK(hits >= n * 95 / 100);
}

TEST_CASE("tilde paths are absorbed at 0 and frozen afterwards") {
    SdeSpec spec{SdeKind::tilde_chordal, 1.0, 4.0};
    int absorbed = 0;
    for (int i = 0; i < 50; ++i) {
        SdePath path = simulate(spec, 0.15, 1e-3, Rng(11, i).next_u64());
        bool seen_zero = false;
        for (double v : path.samples) {
            if (seen_zero) CHECK(v == 0.0);
            if (v == 0.0) seen_zero = true;
            CHECK(v >= 0.0);
        }
        CHECK(seen_zero == path.stopped_at.has_value());
        if (path.stopped_at) {
            ++absorbed;
            CHECK(*path.stopped_at > 0.0);
            CHECK(*path.stopped_at < 1.0);
        }
    }
    CHECK(absorbed > 25); // x0 = 0.15 is close to the absorbing boundary
}

TEST_CASE("summary agrees with the stored-path functional") {
    for (SdeKind kind : {SdeKind::locally_chordal, SdeKind::hi_drift, SdeKind::tilde_chordal}) {
        SdeSpec spec{kind, 0.8, 3.0};
        double x0 = kind == SdeKind::tilde_chordal ? 1.2 : 0.6;
        for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
            SdePath path = simulate(spec, x0, 2e-3, seed);
            PathSummary s = simulate_summary(spec, x0, 2e-3, seed);
            CHECK(s.endpoint == doctest::Approx(path.samples.back()).epsilon(1e-14));
            CHECK(s.stopped_at.has_value() == path.stopped_at.has_value());
            SleParams p = derive_params(3.0);
            CHECK(std::exp(-2.0 * p.b * s.a_integral) ==
                  doctest::Approx(path_functional_A(path, 0.8, p, kind)).epsilon(1e-12));
        }
    }
}

TEST_CASE("path functional lies in (0, 1]") {
    SleParams p = derive_params(4.0);
    SdeSpec spec{SdeKind::locally_chordal, 1.0, 4.0};
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        SdePath path = simulate(spec, 5.5, 1e-3, seed); // starts where A is large
        double v = path_functional_A(path, 1.0, p);
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("stiff endgame is stable under dt refinement") {
    // the last steps have drift stiffness ~ b kappa / rho^2; the split
    // integrator must land the endpoint near 0 at every dt
    // the endpoint at final modulus ~2 dt fluctuates like sqrt(kappa dt);
    // an unstable explicit step instead oscillates at amplitude O(1)
    SdeSpec spec{SdeKind::locally_chordal, 0.5, 4.0};
    for (double dt : {2e-3, 1e-3, 5e-4}) {
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            worst = std::max(worst,
                             std::abs(simulate_summary(spec, 1.0, dt, Rng(31, i).next_u64())
                                          .endpoint));
        }
        CHECK(worst < 5.0 * std::sqrt(4.0 * dt));
    }
}
