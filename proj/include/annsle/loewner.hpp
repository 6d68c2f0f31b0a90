#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "annsle/core.hpp"

namespace annsle {

using Complex = std::complex<double>;

enum class Parametrization { hcap, annulus };

// Discretized driving function; samples[j] = U at j*dt.  For hcap
// parametrization the generated curve satisfies hcap[gamma_t] = a t.
struct DrivingPath {
    double dt = 0.0;
    std::vector<double> samples;
    Parametrization parametrization = Parametrization::hcap;

    double horizon() const { return dt * (samples.empty() ? 0 : samples.size() - 1); }
    double at_time(double t) const; // linear interpolation
};

struct CurveTrace {
    std::vector<Complex> points;
    std::vector<double> times;
};

struct ConformalRadiusSchedule {
    std::vector<double> times;
    std::vector<double> r_of_t; // strictly decreasing, r_of_t[0] = initial r
};

class SwallowedError : public std::runtime_error {
public:
    SwallowedError(const std::string& msg, double time)
        : std::runtime_error(msg), swallow_time(time) {}
    double swallow_time;
};

// Chordal Loewner flow d/dt g = a/(g - U), solved by per-step exact
// vertical-slit composition (driver held constant over each step).
// Throws SwallowedError if z is swallowed before t.
Complex chordal_flow(const DrivingPath& U, Complex z, double t, const SleParams& p);

// Radial flow on the covering strip: d/dt h = (a/2) cot((h - U)/2), RK4.
Complex radial_flow(const DrivingPath& U, Complex z, double t, const SleParams& p);

// Annulus Loewner flow in the covering strip: d/dr h*_r = 2 H_r(h*_r - U*_r),
// integrated downward in modulus from r0 to r0 - s.  The driver is sampled
// in the annulus parametrization: Ustar.samples[j] = U* at modulus decrement
// j*dt.  RK4 with step halving near the kernel pole.
Complex annulus_flow(const DrivingPath& Ustar, double r0, Complex z, double s);

// Same flow, also integrating the variational equation for (h*)'(z).
struct FlowWithDeriv {
    Complex value;
    Complex deriv;
};
FlowWithDeriv annulus_flow_with_deriv(const DrivingPath& Ustar, double r0, Complex z, double s);

// Finite estimate of dr/dt at t=0 for a curve in hcap parametrization.
// The test curve must be a (near) vertical slit rooted at the origin; its
// height fixes the capacity increment.  Converges to -a/2 as the slit
// height goes to 0 and is independent of r0.
double measure_r_dot(const SleParams& p, const CurveTrace& test_curve, double r0);

// Discrete zipper inversion: recover the driving function of a simple
// curve from the real line into the upper half-plane.  Output is resampled
// to a uniform dt grid.  Throws std::invalid_argument on non-simple input.
DrivingPath extract_driving(const CurveTrace& curve, const SleParams& p, double out_dt);

// Generate the curve traced by a driver (tip positions), resolution dt.
CurveTrace trace_from_driver(const DrivingPath& U, const SleParams& p);

// Estimate hcap of the hull generated by U up to its horizon, from the
// large-|z| expansion g_t(iy) = iy + a t/(iy) + ...
double hcap_estimate(const DrivingPath& U, const SleParams& p, double y_ref = 1000.0);

} // namespace annsle
