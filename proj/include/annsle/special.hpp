#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "annsle/core.hpp"

namespace annsle {

// All infinite sums in this header are geometric-tailed (summands decay
// like exp(-2 pi^2 k / r) or faster).  A sum is accepted once the current
// term drops below abs_tol/10 and the empirically measured term ratio
// certifies the remainder; otherwise TruncationError is thrown.
struct SumTruncation {
    double abs_tol = 1e-12;
    std::int64_t max_terms = 1000000;
    double achieved_tail_bound = 0.0;
};

class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class StripEdge { bottom, top };

// Boundary Poisson kernel of the strip S_r seen from 0:
//   bottom: H(0, x)      = (pi^2/4r^2) sinh^{-2}(pi x / 2r)   (pole at x=0)
//   top:    H(0, x + ir) = (pi^2/4r^2) cosh^{-2}(pi x / 2r)
double poisson_strip_boundary(double r, double x, StripEdge edge);

// J(r,x) = (pi^2/2r^2) sum_k cosh^{-2}(pi (x + 2 pi k) / 2r), 2pi-periodic.
double eval_J(double r, double x, SumTruncation& trunc);
double eval_J(double r, double x);

// H_I(r,x) = int_0^x [J(r,y) - 1/r] dy, computed by adaptive quadrature
// of eval_J.  Odd in x, 2pi-periodic.
double eval_H_I(double r, double x);

// d/dx H_I = J - 1/r.
double eval_H_I_prime(double r, double x);

// Term-wise antiderivative form of H_I (tanh sum).  Same function as
// eval_H_I by calculus; kept as a separate code path so the two routes can
// be cross-checked, and used where H_I must be evaluated millions of times.
double eval_H_I_series(double r, double x);

// A(r,x): sum over k != 0 of
//   (pi^2/4r^2) cosh^2(pi x/2r) / [sinh^2(pi^2 k/r) cosh^2(pi(x-2pi k)/2r)].
// Evaluated in log space; may legitimately overflow to +inf for |x|
// far outside [-2pi, 2pi] at small r.
double eval_A(double r, double x, SumTruncation& trunc);
double eval_A(double r, double x);

// A(r,x) with a cheap dominant-term exponent screen: returns 0 without
// evaluating the sum when the value is certainly below ~1e-10 (negligible
// against every tolerance in the library once integrated over a path).
// Intended for inner loops (SDE steps, PDE coefficient rows).
double eval_A_fast(double r, double x);

// L(r,x) = (pi/r) tanh(pi x / 2r).
double eval_L(double r, double x);

struct TildeFunctions {
    double A_tilde;
    double H_I_tilde;
    double L_tilde;
};

// Chordal-case variants on 0 < x < 2pi (poles at x = 0 and x = 2pi).
TildeFunctions eval_tilde_functions(double r, double x);
double eval_A_tilde(double r, double x);
double eval_H_I_tilde(double r, double x);
double eval_L_tilde(double r, double x);

struct GammaDelta {
    double Gamma;
    double delta;
};

// Gamma(r) = pi^2/12r^2 + delta(r),
// delta(r) = 1/12 - (pi^2/2r^2) sum_{k>=1} sinh^{-2}(k pi^2 / r).
GammaDelta eval_Gamma_delta(double r);

// Independent route for delta: term-by-term difference
//   2 sum_{k>=1} [ (2 pi k)^{-2} - (pi^2/4r^2) sinh^{-2}(k pi^2/r) ],
// with an analytic tail for the 1/k^2 part.  Used for cross-validation.
double eval_delta_termwise(double r);

// Brownian loop measure of loops in A_r with nonzero winding number:
// m*(r) = r/6 - 2 int_0^r delta(s) ds (adaptive quadrature).
double eval_mstar(double r, double quad_tol = 1e-11);

// Complex annulus kernel on the strip, principal-part summation:
//   H_r(z) = z/2r - (pi/2r) sum^PP_k coth(pi (z + 2 pi k) / 2r).
// Satisfies H_r(z) = -1/z + z (1/2r - Gamma(r) + 1/12) + O(|z|^3) near 0
// and H_r(x + ir) = -H_I(r,x)/2 + i/2 on the top boundary.
std::complex<double> eval_complex_kernel(double r, std::complex<double> z);

// d/dz H_r(z) = 1/2r + (pi/2r)^2 sum_k sinh^{-2}(pi (z + 2 pi k) / 2r).
std::complex<double> eval_complex_kernel_deriv(double r, std::complex<double> z);

struct ScalarFunctions {
    double beta;   // exp{ b r - c m*(r)/2 }
    double alpha;  // b - b_tilde + (2b + c) Gamma(r)
    double Theta;  // H_I'(r,x) + alpha/b - 1/r
    double lambda; // r^b exp{ - int_1^r alpha(s) ds }
};

ScalarFunctions eval_scalars(double r, double x, const SleParams& p);

// Adaptive Gauss-Kronrod (G7,K15) quadrature with absolute tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth = 40);

} // namespace annsle
