#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "annsle/core.hpp"
#include "annsle/loewner.hpp"
#include "annsle/special.hpp"

using namespace annsle;

namespace {

DrivingPath constant_driver(double u, double dt, double t) {
    DrivingPath U;
    U.dt = dt;
    U.samples.assign(static_cast<std::size_t>(t / dt + 0.5) + 1, u);
    return U;
}

DrivingPath bm_driver(double kappa, double dt, double t, std::uint64_t seed) {
    DrivingPath U;
    U.dt = dt;
    Rng rng(seed);
    double u = 0.0;
    double sq = std::sqrt(kappa * dt);
    U.samples.push_back(0.0);
    std::size_t n = static_cast<std::size_t>(t / dt + 0.5);
    for (std::size_t j = 0; j < n; ++j) {
        u += sq * rng.next_normal();
        U.samples.push_back(u);
    }
    return U;
}

} // namespace

TEST_CASE("chordal flow with constant driver matches the slit map") {
    SleParams p = derive_params(3.0);
    const double u = 0.4, t = 0.8, dt = 1e-3;
    DrivingPath U = constant_driver(u, dt, t);
    for (Complex z : {Complex(1.0, 0.7), Complex(-1.3, 0.4), Complex(0.4, 2.0)}) {
        Complex w = z - u;
        Complex exact = std::sqrt(w * w + 2.0 * p.a * t);
        if (exact.imag() < 0.0) exact = -exact;
        exact += u;
        CHECK(std::abs(chordal_flow(U, z, t, p) - exact) < 1e-12);
    }
}

TEST_CASE("points close to the driver are reported swallowed") {
    SleParams p = derive_params(2.0);
    DrivingPath U = constant_driver(0.0, 1e-3, 1.0);
    CHECK_THROWS_AS(chordal_flow(U, Complex(0.0, 1e-3), 1.0, p), SwallowedError);
    try {
        chordal_flow(U, Complex(0.0, 1e-3), 1.0, p);
    } catch (const SwallowedError& e) {
        CHECK(e.swallow_time < 0.1);
    }
}

TEST_CASE("zero driver traces a vertical slit with hcap = a t") {
    SleParams p = derive_params(2.0);
    DrivingPath U = constant_driver(0.0, 1e-3, 0.5);
    CurveTrace trace = trace_from_driver(U, p);
    for (std::size_t j = 0; j < trace.points.size(); ++j) {
        Complex expect(0.0, std::sqrt(2.0 * p.a * trace.times[j]));
        CHECK(std::abs(trace.points[j] - expect) < 1e-9);
    }
    CHECK(hcap_estimate(U, p) == doctest::Approx(p.a * U.horizon()).epsilon(1e-5));
}

TEST_CASE("hcap estimate for a random driver") {
    SleParams p = derive_params(8.0 / 3.0);
    DrivingPath U = bm_driver(8.0 / 3.0, 1e-3, 0.4, 11);
    CHECK(hcap_estimate(U, p) == doctest::Approx(p.a * U.horizon()).epsilon(1e-4));
}

TEST_CASE("driving function round-trip through the zipper") {
    SleParams p = derive_params(2.0);

    // smooth driver: tight agreement
    DrivingPath S;
    S.dt = 2e-4;
    for (int j = 0; j <= 1000; ++j) S.samples.push_back(0.5 * std::sin(5.0 * j * S.dt));
    CurveTrace strace = trace_from_driver(S, p);
    DrivingPath sback = extract_driving(strace, p, 2e-4);
    REQUIRE(sback.samples.size() > 10);
    double sup = 0.0;
    std::size_t n = std::min(sback.samples.size(), S.samples.size());
    for (std::size_t j = 0; j < n; ++j) {
        sup = std::max(sup, std::abs(sback.samples[j] - S.samples[j]));
    }
    CHECK(sup < 5e-3);

    // Brownian driver: reconstruction drifts in time (hcap per step is only
    // resolved to O(dt)), so comparison at equal indices is loose
    DrivingPath U = bm_driver(2.0, 2e-4, 0.2, 5);
    CurveTrace trace = trace_from_driver(U, p);
    DrivingPath back = extract_driving(trace, p, 2e-4);
    double bsup = 0.0;
    n = std::min(back.samples.size(), U.samples.size());
    for (std::size_t j = 0; j < n; ++j) {
        bsup = std::max(bsup, std::abs(back.samples[j] - U.samples[j]));
    }
    CHECK(bsup < 0.25);
}

TEST_CASE("extract_driving rejects bad input") {
    SleParams p = derive_params(2.0);
    CurveTrace one;
    one.points = {Complex(0.0, 0.0)};
    CHECK_THROWS_AS(extract_driving(one, p, 1e-3), std::invalid_argument);
    CurveTrace floating;
    floating.points = {Complex(0.0, 1.0), Complex(0.0, 1.5)};
    CHECK_THROWS_AS(extract_driving(floating, p, 1e-3), std::invalid_argument);
}

TEST_CASE("radial flow with constant driver matches cos(h/2) decay") {
    SleParams p = derive_params(4.0);
    DrivingPath U = constant_driver(0.0, 1e-3, 0.5);
    for (Complex z : {Complex(1.0, 0.5), Complex(-2.0, 1.0)}) {
        Complex h = radial_flow(U, z, 0.5, p);
        // d cos(h/2)/dt = -(a/4) cos(h/2) along the flow
        Complex expect = std::cos(z / 2.0) * std::exp(-p.a * 0.5 / 4.0);
        CHECK(std::abs(std::cos(h / 2.0) - expect) < 1e-9);
    }
}

TEST_CASE("modulus decay rate of a shrinking slit is -a/2") {
    for (double kappa : {2.0, 4.0}) {
        SleParams p = derive_params(kappa);
        CurveTrace slit;
        for (int i = 0; i <= 32; ++i) slit.points.push_back(Complex(0.0, 0.02 * i / 32.0));
        CHECK(measure_r_dot(p, slit, 2.0) == doctest::Approx(-p.a / 2.0).epsilon(1e-3));
        // independent of the ambient modulus to leading order
        CHECK(measure_r_dot(p, slit, 4.0) == doctest::Approx(-p.a / 2.0).epsilon(1e-3));
    }
    SleParams p = derive_params(2.0);
    CurveTrace flat;
    flat.points = {Complex(0.0, 0.0), Complex(0.5, 0.0)};
    CHECK_THROWS_AS(measure_r_dot(p, flat, 2.0), std::invalid_argument);
}

TEST_CASE("annulus flow: top boundary, periodicity, and derivative") {
    const double r0 = 1.5, s = 0.4;
    DrivingPath U;
    U.dt = s / 256.0;
    U.samples.assign(257, 0.0);
    U.parametrization = Parametrization::annulus;

    // the top boundary maps onto the top boundary of the target annulus
    for (double x : {0.3, 2.0}) {
        Complex h = annulus_flow(U, r0, Complex(x, r0), s);
        CHECK(h.imag() == doctest::Approx(r0 - s).epsilon(1e-9));
    }

    Complex z(0.7, 0.9);
    Complex h = annulus_flow(U, r0, z, s);
    Complex h_shift = annulus_flow(U, r0, z + kTwoPi, s);
    CHECK(std::abs(h_shift - h - Complex(kTwoPi, 0.0)) < 1e-10);

    FlowWithDeriv fd = annulus_flow_with_deriv(U, r0, z, s);
    CHECK(std::abs(fd.value - h) < 1e-12);
    const double eps = 1e-5;
    Complex fd_num = (annulus_flow(U, r0, z + eps, s) - annulus_flow(U, r0, z - eps, s)) /
                     (2.0 * eps);
    CHECK(std::abs(fd.deriv - fd_num) < 1e-6);

    CHECK_THROWS_AS(annulus_flow(U, r0, z, r0), std::invalid_argument);
}

TEST_CASE("annulus boundary log-derivative identity at first order") {
    const double r0 = 2.0;
    for (double x : {0.5, 1.5}) {
        double prev_err = 1e300;
        for (double s : {0.02, 0.01, 0.005}) {
            DrivingPath U;
            U.dt = s / 64.0;
            U.samples.assign(65, 0.0);
            U.parametrization = Parametrization::annulus;
            FlowWithDeriv fd = annulus_flow_with_deriv(U, r0, Complex(x, r0), s);
            double got = std::log(fd.deriv).real() / s;
            // s decreases the modulus, hence +H_I' rather than -H_I'
            double err = std::abs(got - eval_H_I_prime(r0, x));
            CHECK(err < 2.0 * s);
            CHECK(err < prev_err);
            prev_err = err;
        }
    }
}
