#include "annsle/sde.hpp"

#include <cmath>
#include <stdexcept>

#include "annsle/special.hpp"

namespace annsle {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double drift(const SdeSpec& spec, double b_kappa, double rho, double x) {
    switch (spec.kind) {
        case SdeKind::locally_chordal:
            return eval_H_I_series(rho, x) - b_kappa * eval_L(rho, x);
        case SdeKind::tilde_chordal:
            return 2.0 * eval_H_I_tilde(rho, x) - b_kappa * eval_L_tilde(rho, x);
        case SdeKind::hi_drift:
            return eval_H_I_series(rho, x);
    }
    return 0.0;
}

// Exact flow of xdot = -c tanh(s x) over time dt (c = b kappa pi / rho,
// s = pi / 2 rho): sinh(s x) decays by the factor e^{-c s dt}.  Solving
// this factor exactly keeps the step stable as rho -> 0, where the -b
// kappa L drift is far too stiff for an explicit update.
double tanh_flow(double x, double rho, double b_kappa, double dt) {
    if (x == 0.0) return 0.0;
    const double s = kPi / (2.0 * rho);
    const double lambda = b_kappa * kPi * kPi * dt / (2.0 * rho * rho); // c s dt
    const double u = s * std::abs(x);
    double w = u + std::log1p(-std::exp(-2.0 * u)) - kLn2; // log sinh(u)
    w -= lambda;
    double mag;
    if (w > 20.0) {
        mag = (w + kLn2) / s;
    } else if (w < -20.0) {
        mag = std::exp(w) / s;
    } else {
        mag = std::asinh(std::exp(w)) / s;
    }
    return std::copysign(mag, x);
}

// One locally-chordal substep.  All the tanh terms of H_I and L are built
// from two exponentials: with P = e^{2 s xc}, Q = e^{-4 pi s},
//   tanh(s xc) = (P - 1)/(P + 1),
//   tanh(s(xc + 2 pi k)) + tanh(s(xc - 2 pi k))
//     = 2 Q^k P/(1 + Q^k P) - 2 Q^k/(P + Q^k).
double locchord_step(double rho, double x, double dt, double noise, double b_kappa) {
    const double inv_rho = 1.0 / rho;
    const double s = 0.5 * kPi * inv_rho;
    const double xc = wrap_to_pi(x);
    const double u = 2.0 * s * xc;

    double t1, sum;
    if (std::abs(u) < 500.0) {
        const double P = std::exp(u);
        t1 = (P - 1.0) / (P + 1.0);
        sum = t1;
        // image pairs are bounded by 2 exp{-2s(2pi - |xc|)}
        if (s * (kTwoPi - std::abs(xc)) < 19.0) {
            const double Q = std::exp(-2.0 * kTwoPi * s);
            double Qk = 1.0;
            for (int k = 1; k < 100000; ++k) {
                Qk *= Q;
                double pair = 2.0 * Qk * P / (1.0 + Qk * P) - 2.0 * Qk / (P + Qk);
                sum += pair;
                if (std::abs(pair) < 1e-16) break;
            }
        }
    } else {
        t1 = std::copysign(1.0, xc);
        sum = t1;
    }
    const double h_i = (-xc + kPi * sum) * inv_rho;
    const double lambda = 2.0 * b_kappa * s * s * dt;
    if (lambda < 0.05) {
        double tl = (x == xc) ? t1 : std::tanh(s * x);
        return x + (h_i - b_kappa * kPi * inv_rho * tl) * dt + noise;
    }
    // stiff regime: Lie splitting with the exact tanh-drift flow
    return tanh_flow(x + h_i * dt + noise, rho, b_kappa, dt);
}

// Full locally-chordal time step.  Both drift pieces scale like 1/rho, so
// once dt is no longer small relative to rho the step is subdivided; the
// rule depends only on (rho, dt), keeping runs reproducible.
double locchord_advance(double rho, double x, double dt, Rng& rng, double sqrt_kdt,
                        double b_kappa) {
    if (rho >= 8.0 * dt) {
        return locchord_step(rho, x, dt, sqrt_kdt * rng.next_normal(), b_kappa);
    }
    int n_sub = std::min(64, static_cast<int>(std::ceil(8.0 * dt / rho)));
    double sdt = dt / n_sub;
    double sq = sqrt_kdt / std::sqrt(static_cast<double>(n_sub));
    for (int m = 0; m < n_sub; ++m) {
        x = locchord_step(rho - m * sdt, x, sdt, sq * rng.next_normal(), b_kappa);
    }
    return x;
}

// One time step, drawing the Brownian increment(s) from rng.
double advance(const SdeSpec& spec, double b_kappa, double rho, double x, double dt, Rng& rng,
               double sqrt_kdt) {
    if (spec.kind == SdeKind::locally_chordal) {
        return locchord_advance(rho, x, dt, rng, sqrt_kdt, b_kappa);
    }
    return x + drift(spec, b_kappa, rho, x) * dt + sqrt_kdt * rng.next_normal();
}

void check_args(const SdeSpec& spec, double x0, double dt) {
    if (!(dt > 0.0) || dt > spec.r / 100.0) {
        throw std::invalid_argument("simulate: need 0 < dt <= r/100");
    }
    if (spec.kind == SdeKind::tilde_chordal && !(x0 > 0.0 && x0 < kTwoPi)) {
        throw std::invalid_argument("simulate: tilde_chordal needs x0 in (0, 2pi)");
    }
}

} // namespace

SdePath simulate(const SdeSpec& spec, double x0, double dt, std::uint64_t seed) {
    check_args(spec, x0, dt);
    const SleParams p = derive_params(spec.kappa);
    const double b_kappa = p.b * spec.kappa;
    const double sqrt_kdt = std::sqrt(spec.kappa * dt);
    const double near_zero = 10.0 * sqrt_kdt;
    Rng rng(seed);

    SdePath path;
    path.dt = dt;
    path.x0 = x0;
    const auto n_steps = static_cast<std::size_t>(std::floor(spec.r / dt + 0.5)) - 1;
    path.samples.reserve(n_steps + 1);
    path.samples.push_back(x0);

    double x = x0;
    for (std::size_t j = 0; j < n_steps; ++j) {
        if (path.stopped_at) {
            path.samples.push_back(x);
            continue;
        }
        double t = j * dt;
        double rho = spec.r - t;
        if (spec.kind == SdeKind::tilde_chordal && x < near_zero) {
            // singular coth drift at 0: substep to avoid overshooting
            const int sub = 16;
            double sdt = dt / sub;
            double sq = std::sqrt(spec.kappa * sdt);
            for (int m = 0; m < sub; ++m) {
                double srho = spec.r - (t + m * sdt);
                x += drift(spec, b_kappa, srho, x) * sdt + sq * rng.next_normal();
                if (x <= 0.0) {
                    path.stopped_at = t + (m + 1) * sdt;
                    x = 0.0;
                    break;
                }
            }
        } else {
            x = advance(spec, b_kappa, rho, x, dt, rng, sqrt_kdt);
            if (spec.kind == SdeKind::tilde_chordal && x <= 0.0) {
                path.stopped_at = t + dt;
                x = 0.0;
            }
        }
        path.samples.push_back(x);
    }
    return path;
}

PathSummary simulate_summary(const SdeSpec& spec, double x0, double dt, std::uint64_t seed) {
    check_args(spec, x0, dt);
    const SleParams p = derive_params(spec.kappa);
    const double b_kappa = p.b * spec.kappa;
    const double sqrt_kdt = std::sqrt(spec.kappa * dt);
    Rng rng(seed);

    const auto n_steps = static_cast<std::size_t>(std::floor(spec.r / dt + 0.5)) - 1;
    double x = x0;
    double a_int = 0.0;
    std::optional<double> stopped;
    for (std::size_t j = 0; j < n_steps; ++j) {
        double t = j * dt;
        double rho = spec.r - t;
        if (spec.kind == SdeKind::tilde_chordal) {
            a_int += eval_A_tilde(rho, std::min(std::max(x, 1e-12), kTwoPi - 1e-12)) * dt;
            double near_zero = 10.0 * sqrt_kdt;
            if (x < near_zero) {
                const int sub = 16;
                double sdt = dt / sub;
                double sq = std::sqrt(spec.kappa * sdt);
                for (int m = 0; m < sub && !stopped; ++m) {
                    double srho = spec.r - (t + m * sdt);
                    x += drift(spec, b_kappa, srho, x) * sdt + sq * rng.next_normal();
                    if (x <= 0.0) {
                        stopped = t + (m + 1) * sdt;
                        x = 0.0;
                    }
                }
                if (stopped) break;
            } else {
                x += drift(spec, b_kappa, rho, x) * dt + sqrt_kdt * rng.next_normal();
                if (x <= 0.0) {
                    stopped = t + dt;
                    x = 0.0;
                    break;
                }
            }
        } else {
            a_int += eval_A_fast(rho, x) * dt;
            x = advance(spec, b_kappa, rho, x, dt, rng, sqrt_kdt);
        }
    }
    return {x, a_int, stopped};
}

double path_functional_A(const SdePath& path, double r, const SleParams& p, SdeKind variant) {
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < path.samples.size(); ++j) {
        double t = j * path.dt;
        if (path.stopped_at && t >= *path.stopped_at) break;
        double rho = r - t;
        if (rho <= 0.0) break;
        double x = path.samples[j];
        if (variant == SdeKind::tilde_chordal) {
            sum += eval_A_tilde(rho, std::min(std::max(x, 1e-12), kTwoPi - 1e-12)) * path.dt;
        } else {
            sum += eval_A_fast(rho, x) * path.dt;
        }
    }
    return std::exp(-2.0 * p.b * sum);
}

} // namespace annsle
