#include "annsle/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace annsle {

namespace {

// Gauss-Kronrod 15-point nodes/weights on [-1,1] (embedded G7).
constexpr double kKronrodX[8] = {
    0.000000000000000000000000000000000,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};
constexpr double kKronrodW[8] = {
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};
constexpr double kGaussW[4] = {
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082};

struct GkResult {
    double value;
    double error;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    fv[7] = f(c);
    for (int i = 1; i < 8; ++i) {
        fv[7 - i] = f(c - h * kKronrodX[i]);
        fv[7 + i] = f(c + h * kKronrodX[i]);
    }
    double resk = kKronrodW[0] * fv[7];
    double resg = kGaussW[0] * fv[7];
    for (int i = 1; i < 8; ++i) {
        resk += kKronrodW[i] * (fv[7 - i] + fv[7 + i]);
        if (i % 2 == 0) resg += kGaussW[i / 2] * (fv[7 - i] + fv[7 + i]);
    }
    return {resk * h, std::abs(resk - resg) * h};
}

double integrate_rec(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, int depth) {
    GkResult g = gk15(f, a, b);
    if (g.error <= abs_tol || depth <= 0) {
        if (depth <= 0 && g.error > 100 * abs_tol) {
            throw QuadratureError("adaptive quadrature failed to converge");
        }
        return g.value;
    }
    double c = 0.5 * (a + b);
    return integrate_rec(f, a, c, 0.5 * abs_tol, depth - 1) +
           integrate_rec(f, c, b, 0.5 * abs_tol, depth - 1);
}

// log cosh / log sinh without overflow.
double log_cosh(double u) {
    double au = std::abs(u);
    return au + std::log1p(std::exp(-2.0 * au)) - std::log(2.0);
}

double log_sinh(double u) { // u > 0
    return u + std::log1p(-std::exp(-2.0 * u)) - std::log(2.0);
}

double sech2(double u) {
    double ch = std::cosh(u);
    if (std::isinf(ch)) return 0.0;
    return 1.0 / (ch * ch);
}

std::complex<double> safe_coth(std::complex<double> w) {
    // coth saturates to +-1 away from the imaginary axis.
    if (w.real() > 300.0) return {1.0, 0.0};
    if (w.real() < -300.0) return {-1.0, 0.0};
    return std::cosh(w) / std::sinh(w);
}

std::complex<double> safe_csch2(std::complex<double> w) {
    if (std::abs(w.real()) > 300.0) return {0.0, 0.0};
    std::complex<double> s = std::sinh(w);
    return 1.0 / (s * s);
}

void require_positive_r(double r, const char* who) {
    if (!(r > 0.0)) throw std::domain_error(std::string(who) + ": r must be positive");
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    if (a > b) return -integrate_rec(f, b, a, abs_tol, max_depth);
    return integrate_rec(f, a, b, abs_tol, max_depth);
}

double poisson_strip_boundary(double r, double x, StripEdge edge) {
    require_positive_r(r, "poisson_strip_boundary");
    const double pref = kPi * kPi / (4.0 * r * r);
    const double u = kPi * x / (2.0 * r);
    if (edge == StripEdge::top) {
        return pref * sech2(u);
    }
    if (x == 0.0) throw std::domain_error("poisson_strip_boundary: pole at x=0 on bottom edge");
    double sh = std::sinh(u);
    if (std::isinf(sh)) return 0.0;
    return pref / (sh * sh);
}

double eval_J(double r, double x, SumTruncation& trunc) {
    require_positive_r(r, "eval_J");
    const double xc = wrap_to_pi(x);
    const double s = kPi / (2.0 * r);
    const double pref = kPi * kPi / (2.0 * r * r);

    double sum = sech2(s * xc);
    double prev_pair = std::numeric_limits<double>::infinity();
    const double q_floor = std::exp(-2.0 * kPi * kPi / r);
    for (std::int64_t k = 1;; ++k) {
        if (2 * k > trunc.max_terms) {
            throw TruncationError("eval_J: max_terms reached before tolerance");
        }
        double pair = sech2(s * (xc + kTwoPi * k)) + sech2(s * (xc - kTwoPi * k));
        sum += pair;
        if (pref * pair < trunc.abs_tol / 10.0) {
            double q = (prev_pair > 0.0 && std::isfinite(prev_pair)) ? pair / prev_pair : q_floor;
            q = std::clamp(q, q_floor, 0.95);
            trunc.achieved_tail_bound = pref * pair * q / (1.0 - q);
            if (trunc.achieved_tail_bound > trunc.abs_tol) {
                throw TruncationError("eval_J: tail bound not certified");
            }
            break;
        }
        prev_pair = pair;
    }
    return pref * sum;
}

double eval_J(double r, double x) {
    SumTruncation t;
    return eval_J(r, x, t);
}

double eval_H_I(double r, double x) {
    require_positive_r(r, "eval_H_I");
    if (x == 0.0) return 0.0;
    // integrand J - 1/r is smooth and 2pi-periodic
    return integrate([r](double y) { return eval_J(r, y) - 1.0 / r; }, 0.0, x, 1e-12);
}

double eval_H_I_prime(double r, double x) { return eval_J(r, x) - 1.0 / r; }

double eval_H_I_series(double r, double x) {
    const double xc = wrap_to_pi(x);
    const double s = kPi / (2.0 * r);
    double sum = std::tanh(s * xc);
    for (int k = 1; k < 100000; ++k) {
        double pair = std::tanh(s * (xc + kTwoPi * k)) + std::tanh(s * (xc - kTwoPi * k));
        sum += pair;
        if (std::abs(pair) < 1e-16) break;
    }
    return -xc / r + (kPi / r) * sum;
}

double eval_A(double r, double x, SumTruncation& trunc) {
    require_positive_r(r, "eval_A");
    const double s = kPi / (2.0 * r);
    const double log_pref = std::log(kPi * kPi / (4.0 * r * r));
    const double lc_x = log_cosh(s * x);

    double sum = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    const double q_floor = std::exp(-2.0 * kPi * kPi / r);
    for (std::int64_t k = 1;; ++k) {
        if (2 * k > trunc.max_terms) {
            throw TruncationError("eval_A: max_terms reached before tolerance");
        }
        double ls_k = log_sinh(kPi * kPi * k / r);
        double e_plus = log_pref + 2.0 * lc_x - 2.0 * ls_k - 2.0 * log_cosh(s * (x - kTwoPi * k));
        double e_minus = log_pref + 2.0 * lc_x - 2.0 * ls_k - 2.0 * log_cosh(s * (x + kTwoPi * k));
        double pair = std::exp(std::min(e_plus, 700.0)) + std::exp(std::min(e_minus, 700.0));
        sum += pair;
        if (std::isinf(sum)) {
            trunc.achieved_tail_bound = 0.0;
            return sum;
        }
        if (pair < trunc.abs_tol / 10.0) {
            double q = (prev_pair > 0.0 && std::isfinite(prev_pair)) ? pair / prev_pair : q_floor;
            q = std::clamp(q, q_floor, 0.95);
            trunc.achieved_tail_bound = pair * q / (1.0 - q);
            if (trunc.achieved_tail_bound > trunc.abs_tol) {
                throw TruncationError("eval_A: tail bound not certified");
            }
            break;
        }
        prev_pair = pair;
    }
    return sum;
}

double eval_A(double r, double x) {
    SumTruncation t;
    return eval_A(r, x, t);
}

double eval_A_fast(double r, double x) {
    // exponent of the dominant term (k = round(|x|/2pi), at least 1), with
    // cosh/sinh replaced by exp/2 and a +3 safety margin
    double ax = std::abs(x);
    double k = std::max(1.0, std::round(ax / kTwoPi));
    double s = kPi / (2.0 * r);
    // +4 covers the cosh/sinh -> exp/2 replacements (3 x 2 log 2) plus the
    // non-dominant images
    double bound = std::log(kPi * kPi / (4.0 * r * r)) + 2.0 * s * ax -
                   2.0 * kPi * kPi * k / r - 2.0 * s * std::abs(ax - kTwoPi * k) + 4.0;
    // skipped values are < e^{-23}; integrated against dt over a path of
    // length r this biases the A-integral by < 1e-9 r
    if (bound < -23.0) return 0.0;
    return eval_A(r, x);
}

double eval_L(double r, double x) {
    require_positive_r(r, "eval_L");
    return (kPi / r) * std::tanh(kPi * x / (2.0 * r));
}

double eval_A_tilde(double r, double x) {
    require_positive_r(r, "eval_A_tilde");
    if (x <= 0.0 || x >= kTwoPi) throw std::domain_error("eval_A_tilde: x must lie in (0, 2pi)");
    const double s = kPi / (2.0 * r);
    const double log_pref = std::log(kPi * kPi / (4.0 * r * r));
    const double lsh_x = log_sinh(s * x);
    double sum = 0.0;
    for (int k = 1; k < 100000; ++k) {
        double ls_k = log_sinh(kPi * kPi * k / r);
        // sinh^2 in the denominator: argument never vanishes for x in (0,2pi), k != 0
        double lp = log_sinh(std::abs(s * (x - kTwoPi * k)));
        double lm = log_sinh(std::abs(s * (x + kTwoPi * k)));
        double pair = std::exp(std::min(log_pref + 2.0 * lsh_x - 2.0 * ls_k - 2.0 * lp, 700.0)) +
                      std::exp(std::min(log_pref + 2.0 * lsh_x - 2.0 * ls_k - 2.0 * lm, 700.0));
        sum += pair;
        if (pair < 1e-17 * std::max(1.0, sum)) break;
    }
    return sum;
}

double eval_H_I_tilde(double r, double x) {
    require_positive_r(r, "eval_H_I_tilde");
    if (x <= 0.0 || x >= kTwoPi) throw std::domain_error("eval_H_I_tilde: x must lie in (0, 2pi)");
    const double s = kPi / (2.0 * r);
    // k-indexed reading: coth(pi (x +- 2 pi k) / 2r) for k >= 1
    double sum = 1.0 / std::tanh(s * x);
    for (int k = 1; k < 100000; ++k) {
        double pair = 1.0 / std::tanh(s * (x + kTwoPi * k)) + 1.0 / std::tanh(s * (x - kTwoPi * k));
        sum += pair;
        if (std::abs(pair) < 1e-16) break;
    }
    return (kPi / (2.0 * r)) * sum;
}

double eval_L_tilde(double r, double x) {
    require_positive_r(r, "eval_L_tilde");
    if (x == 0.0) throw std::domain_error("eval_L_tilde: pole at x=0");
    return (kPi / r) / std::tanh(kPi * x / (2.0 * r));
}

TildeFunctions eval_tilde_functions(double r, double x) {
    return {eval_A_tilde(r, x), eval_H_I_tilde(r, x), eval_L_tilde(r, x)};
}

GammaDelta eval_Gamma_delta(double r) {
    require_positive_r(r, "eval_Gamma_delta");
    double sum = 0.0;
    for (int k = 1; k < 100000; ++k) {
        double sh = std::sinh(kPi * kPi * k / r);
        double term = std::isinf(sh) ? 0.0 : 1.0 / (sh * sh);
        sum += term;
        if (term < 1e-18 * std::max(1.0, sum) || term == 0.0) break;
    }
    double delta = 1.0 / 12.0 - (kPi * kPi / (2.0 * r * r)) * sum;
    return {kPi * kPi / (12.0 * r * r) + delta, delta};
}

double eval_delta_termwise(double r) {
    require_positive_r(r, "eval_delta_termwise");
    const int K = 20000;
    double sum = 0.0;
    for (int k = K; k >= 1; --k) { // ascending magnitude for accuracy
        double sh = std::sinh(kPi * kPi * k / r);
        double hyper = std::isinf(sh) ? 0.0 : (kPi * kPi / (4.0 * r * r)) / (sh * sh);
        sum += 2.0 * (1.0 / (4.0 * kPi * kPi * k * k) - hyper);
    }
    // analytic tail of sum_{k>K} 1/k^2 (Euler-Maclaurin); hyperbolic part is
    // far below double precision at k > K
    double Kd = K;
    double tail = 1.0 / Kd - 1.0 / (2.0 * Kd * Kd) + 1.0 / (6.0 * Kd * Kd * Kd);
    sum += 2.0 * tail / (4.0 * kPi * kPi);
    return sum;
}

double eval_mstar(double r, double quad_tol) {
    if (r < 0.0) throw std::domain_error("eval_mstar: r must be nonnegative");
    if (r == 0.0) return 0.0;
    double integral = integrate(
        [](double s) { return s == 0.0 ? 1.0 / 12.0 : eval_Gamma_delta(s).delta; }, 0.0, r,
        quad_tol);
    return r / 6.0 - 2.0 * integral;
}

std::complex<double> eval_complex_kernel(double r, std::complex<double> z) {
    require_positive_r(r, "eval_complex_kernel");
    const double s = kPi / (2.0 * r);
    std::complex<double> zc(wrap_to_pi(z.real()), z.imag());
    if (std::abs(zc) == 0.0) throw std::domain_error("eval_complex_kernel: pole at z = 0 (mod 2pi)");
    // principal-part sum: symmetric pairs cancel the divergent real parts
    std::complex<double> sum = safe_coth(s * zc);
    for (int k = 1; k < 100000; ++k) {
        std::complex<double> pair =
            safe_coth(s * (zc + kTwoPi * static_cast<double>(k))) +
            safe_coth(s * (zc - kTwoPi * static_cast<double>(k)));
        sum += pair;
        if (std::abs(pair) < 1e-16) break;
    }
    return zc / (2.0 * r) - (kPi / (2.0 * r)) * sum;
}

std::complex<double> eval_complex_kernel_deriv(double r, std::complex<double> z) {
    require_positive_r(r, "eval_complex_kernel_deriv");
    const double s = kPi / (2.0 * r);
    std::complex<double> zc(wrap_to_pi(z.real()), z.imag());
    std::complex<double> sum = safe_csch2(s * zc);
    for (int k = 1; k < 100000; ++k) {
        std::complex<double> pair =
            safe_csch2(s * (zc + kTwoPi * static_cast<double>(k))) +
            safe_csch2(s * (zc - kTwoPi * static_cast<double>(k)));
        sum += pair;
        if (std::abs(pair) < 1e-16) break;
    }
    return 1.0 / (2.0 * r) + (kPi / (2.0 * r)) * s * sum;
}

ScalarFunctions eval_scalars(double r, double x, const SleParams& p) {
    require_positive_r(r, "eval_scalars");
    ScalarFunctions out;
    GammaDelta gd = eval_Gamma_delta(r);
    out.alpha = p.b - p.b_tilde + (2.0 * p.b + p.c) * gd.Gamma;
    out.Theta = eval_H_I_prime(r, x) + out.alpha / p.b - 1.0 / r;
    out.beta = std::exp(p.b * r - p.c * eval_mstar(r) / 2.0);
    double alpha_int = integrate(
        [&p](double s) {
            return p.b - p.b_tilde + (2.0 * p.b + p.c) * eval_Gamma_delta(s).Gamma;
        },
        1.0, r, 1e-11);
    out.lambda = std::pow(r, p.b) * std::exp(-alpha_int);
    return out;
}

} // namespace annsle
