#include "annsle/partition.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "annsle/sde.hpp"
#include "annsle/special.hpp"

namespace annsle {

namespace {

constexpr double kLog2 = 0.69314718055994530941723212145817657;

double log_cosh(double u) {
    double a = std::abs(u);
    return a + std::log1p(std::exp(-2.0 * a)) - kLog2;
}

// Dirichlet tridiagonal solve of (1+2th) m_i - th (m_{i-1}+m_{i+1}) = rhs_i
// on the interior; boundary values already folded into rhs.
void thomas(std::vector<double>& m, const std::vector<double>& rhs, double th) {
    std::size_t n = rhs.size();
    static thread_local std::vector<double> cp, dp;
    cp.assign(n, 0.0);
    dp.assign(n, 0.0);
    double diag = 1.0 + 2.0 * th;
    cp[0] = -th / diag;
    dp[0] = rhs[0] / diag;
    for (std::size_t i = 1; i < n; ++i) {
        double denom = diag + th * cp[i - 1];
        cp[i] = -th / denom;
        dp[i] = (rhs[i] + th * dp[i - 1]) / denom;
    }
    m[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m[i] = dp[i] - cp[i] * m[i + 1];
}

struct MarchCoeffs {
    std::vector<double> u;   // drift
    std::vector<double> pot; // exp(-2 b A dr / 2), applied twice per step
    double umax = 0.0;
};

void fill_coeffs(MarchCoeffs& c, const std::vector<double>& xs, double rho, double dr,
                 const SleParams& p, bool tilde, bool zero_potential) {
    std::size_t n = xs.size();
    c.u.resize(n);
    c.pot.resize(n);
    double bk = p.b * p.kappa;
    double umax = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double x = xs[i];
        double a, u;
        if (tilde) {
            u = 2.0 * eval_H_I_tilde(rho, x) - bk * eval_L_tilde(rho, x);
            a = zero_potential ? 0.0 : eval_A_tilde(rho, x);
        } else {
            u = eval_H_I_series(rho, x) - bk * eval_L(rho, x);
            a = zero_potential ? 0.0 : eval_A_fast(rho, x);
        }
        c.u[i] = u;
        c.pot[i] = std::exp(-p.b * a * dr); // half-step factor, -2b a (dr/2)
        umax = std::max(umax, std::abs(u));
    }
    c.u[0] = c.u[n - 1] = 0.0;
    c.pot[0] = c.pot[n - 1] = 1.0;
    c.umax = umax;
}

void advect_half(std::vector<double>& v, const MarchCoeffs& c, double dr, double dx) {
    std::size_t n = v.size();
    static thread_local std::vector<double> w;
    w = v;
    double h = dr / 2.0; // half-step size
    for (std::size_t i = 1; i + 1 < n; ++i) {
        w[i] = v[i] + (h / 2.0) * c.u[i] * (v[i + 1] - v[i - 1]) / (2.0 * dx);
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        v[i] += h * c.u[i] * (w[i + 1] - w[i - 1]) / (2.0 * dx);
    }
}

void diffuse(std::vector<double>& v, double kappa, double dr, double dx) {
    std::size_t n = v.size();
    double th = kappa * dr / (4.0 * dx * dx);
    static thread_local std::vector<double> rhs, m;
    rhs.assign(n - 2, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        rhs[i - 1] = v[i] + th * (v[i + 1] - 2.0 * v[i] + v[i - 1]);
    }
    rhs[0] += th * v[0];
    rhs[n - 3] += th * v[n - 1];
    m.assign(n - 2, 0.0);
    thomas(m, rhs, th);
    for (std::size_t i = 1; i + 1 < n; ++i) v[i] = m[i - 1];
}

VSolution march(double r_max, const SleParams& p, std::vector<double> record_r,
                const PdeSolveOptions& opt, bool tilde) {
    if (!(opt.r_min > 0.0) || !(r_max > opt.r_min)) {
        throw std::invalid_argument("V_pde_solve: need 0 < r_min < r_max");
    }
    if (opt.n_x < 16) throw std::invalid_argument("V_pde_solve: n_x too small");
    std::sort(record_r.begin(), record_r.end());
    record_r.erase(std::unique(record_r.begin(), record_r.end()), record_r.end());
    if (record_r.empty()) record_r.push_back(r_max);
    if (record_r.front() < opt.r_min - 1e-12 || record_r.back() > r_max + 1e-12) {
        throw std::invalid_argument("V_pde_solve: record r outside [r_min, r_max]");
    }

    VSolution sol;
    sol.dx = kTwoPi / opt.n_x;
    std::vector<double> v;
    if (tilde) {
        std::size_t n = opt.n_x + 1;
        sol.xs.resize(n);
        v.assign(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) sol.xs[i] = i * sol.dx;
        v.back() = 0.0;
    } else {
        int K = opt.windings;
        if (K <= 0) {
            double spread = 4.0 * std::sqrt(p.kappa * r_max);
            K = std::max(2, static_cast<int>(std::ceil((spread + kTwoPi) / kTwoPi)));
        }
        std::size_t n = static_cast<std::size_t>(2 * K + 1) * opt.n_x + 1;
        double W = (2 * K + 1) * kPi;
        sol.xs.resize(n);
        v.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            sol.xs[i] = -W + i * sol.dx;
            if (opt.zero_potential || std::abs(sol.xs[i]) < kTwoPi) v[i] = 1.0;
        }
    }

    MarchCoeffs c;
    fill_coeffs(c, sol.xs, opt.r_min, 0.0, p, tilde, opt.zero_potential);
    double umax = std::max(c.umax, 1.0);
    double r = opt.r_min;
    std::size_t next_rec = 0;
    while (next_rec < record_r.size() && record_r[next_rec] <= r + 1e-12) {
        sol.r_rows.push_back(record_r[next_rec]);
        sol.rows.push_back(v);
        ++next_rec;
    }
    while (next_rec < record_r.size()) {
        double target = record_r[next_rec];
        while (r < target - 1e-12) {
            double dr = std::min({opt.dr_max, opt.cfl * sol.dx / umax, target - r});
            fill_coeffs(c, sol.xs, r + dr / 2.0, dr, p, tilde, opt.zero_potential);
            umax = std::max(c.umax, 1.0);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] *= c.pot[i];
            advect_half(v, c, dr, sol.dx);
            diffuse(v, p.kappa, dr, sol.dx);
            advect_half(v, c, dr, sol.dx);
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] = std::clamp(v[i] * c.pot[i], 0.0, 1.0);
            }
            r += dr;
        }
        sol.r_rows.push_back(target);
        sol.rows.push_back(v);
        ++next_rec;
    }
    return sol;
}

} // namespace

double VSolution::value(std::size_t row, double x) const {
    const std::vector<double>& v = rows.at(row);
    // past the ends, hold the boundary value (0 on the wide grid, 1 at the
    // tilde absorbing end)
    if (x <= xs.front()) return v.front();
    if (x >= xs.back()) return v.back();
    double j = (x - xs.front()) / dx;
    auto j0 = static_cast<std::size_t>(j);
    if (j0 + 1 >= v.size()) return v.back();
    double f = j - static_cast<double>(j0);
    return v[j0] * (1.0 - f) + v[j0 + 1] * f;
}

VSolution V_pde_solve(double r_max, const SleParams& p, std::vector<double> record_r,
                      const PdeSolveOptions& opt) {
    return march(r_max, p, std::move(record_r), opt, false);
}

VSolution tildeV_pde_solve(double r_max, const SleParams& p, std::vector<double> record_r,
                           const PdeSolveOptions& opt) {
    return march(r_max, p, std::move(record_r), opt, true);
}

namespace {

McEstimate mc_impl(SdeKind kind, double r, double x, std::size_t n_paths, double dt,
                   const SleParams& p, std::uint64_t seed, int n_threads) {
    if (n_paths < 100) throw std::invalid_argument("V_monte_carlo: need >= 100 paths");
    if (n_threads <= 0) {
        n_threads = static_cast<int>(std::thread::hardware_concurrency());
        if (n_threads < 1) n_threads = 1;
    }
    SdeSpec spec{kind, r, p.kappa};
    const std::size_t chunk = 1024;
    std::size_t n_chunks = (n_paths + chunk - 1) / chunk;
    std::vector<double> csum(n_chunks, 0.0), csumsq(n_chunks, 0.0);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) break;
            double s = 0.0, s2 = 0.0;
            std::size_t lo = c * chunk, hi = std::min(n_paths, lo + chunk);
            for (std::size_t i = lo; i < hi; ++i) {
                std::uint64_t path_seed = Rng(seed, i).next_u64();
                PathSummary ps = simulate_summary(spec, x, dt, path_seed);
                double f = std::exp(-2.0 * p.b * ps.a_integral);
                s += f;
                s2 += f * f;
            }
            csum[c] = s;
            csumsq[c] = s2;
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    double S = 0.0, S2 = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        S += csum[c];
        S2 += csumsq[c];
    }
    double n = static_cast<double>(n_paths);
    double mean = S / n;
    double var = std::max(0.0, (S2 - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n), static_cast<std::int64_t>(n_paths), seed};
}

} // namespace

McEstimate V_monte_carlo(double r, double x, std::size_t n_paths, double dt,
                         const SleParams& p, std::uint64_t seed, int n_threads) {
    return mc_impl(SdeKind::locally_chordal, r, x, n_paths, dt, p, seed, n_threads);
}

McEstimate tildeV_monte_carlo(double r, double x, std::size_t n_paths, double dt,
                              const SleParams& p, std::uint64_t seed, int n_threads) {
    if (!(x > 0.0 && x < kTwoPi)) {
        throw std::invalid_argument("tildeV_monte_carlo: need x in (0, 2pi)");
    }
    return mc_impl(SdeKind::tilde_chordal, r, x, n_paths, dt, p, seed, n_threads);
}

namespace {

PartitionTable assemble_impl(const std::vector<double>& r_grid,
                             const std::vector<double>& x_grid, const SleParams& p,
                             const PdeSolveOptions& opt) {
    VSolution sol = V_pde_solve(r_grid.back(), p, r_grid, opt);
    double W = sol.xs.back();
    int K = static_cast<int>(std::lround((W / kPi - 1.0) / 2.0));

    PartitionTable tab;
    tab.p = p;
    tab.r_grid = r_grid;
    tab.x_grid = x_grid;
    std::size_t nr = r_grid.size(), nx = x_grid.size();
    tab.beta.resize(nr);
    tab.lambda.resize(nr);
    tab.V.resize(nr * nx);
    tab.Psi_tilde.resize(nr * nx);
    tab.F.resize(nr * nx);
    tab.F_hat.resize(nr * nx);
    tab.K.resize(nr * nx);

    for (std::size_t ir = 0; ir < nr; ++ir) {
        double r = r_grid[ir];
        ScalarFunctions sc = eval_scalars(r, 0.0, p);
        tab.beta[ir] = sc.beta;
        tab.lambda[ir] = sc.lambda;
        double log_pref = std::log(kPi * kPi / (4.0 * r * r));
        auto psi = [&](double xx) {
            return std::exp(p.b * (log_pref - 2.0 * log_cosh(kPi * xx / (2.0 * r))));
        };
        // V in the outermost bands, used as the bound on every omitted band
        double v_edge = 0.0;
        for (std::size_t i = 0; i < sol.xs.size(); ++i) {
            if (std::abs(sol.xs[i]) >= W - kTwoPi) v_edge = std::max(v_edge, sol.rows[ir][i]);
        }
        double q = std::exp(-2.0 * p.b * kPi * kPi / r);
        double fhat_max = 0.0;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            double x = x_grid[ix];
            double V = std::clamp(sol.value(ir, x), 0.0, 1.0);
            double Psi = psi(x);
            std::size_t id = tab.index(ir, ix);
            tab.V[id] = V;
            tab.Psi_tilde[id] = V * Psi;
            tab.F[id] = tab.beta[ir] * V * Psi;
            double fhat = 0.0;
            for (int k = -K; k <= K; ++k) {
                double xk = x + kTwoPi * k;
                double Vk = (k == 0) ? V : std::clamp(sol.value(ir, xk), 0.0, 1.0);
                if (Vk > 0.0) fhat += tab.beta[ir] * Vk * psi(xk);
            }
            tab.F_hat[id] = fhat;
            tab.K[id] = tab.lambda[ir] * fhat;
            fhat_max = std::max(fhat_max, fhat);
            // first omitted windings: |x +- 2 pi (K+1)| >= 2 pi (K+1) - pi,
            // sech(u) <= 2 e^{-|u|} makes the remainder geometric in k
            double edge = kTwoPi * (K + 1) - kPi;
            double tail = 2.0 * tab.beta[ir] * v_edge *
                          std::exp(p.b * (log_pref + 2.0 * kLog2 - kPi * edge / r)) /
                          (1.0 - q);
            tab.tail_bound = std::max(tab.tail_bound, tail);
        }
        if (tab.tail_bound > 1e-9 * fhat_max) {
            throw std::runtime_error("assemble_tables: winding-sum tail certification failed");
        }
    }
    return tab;
}

} // namespace

PartitionTable assemble_tables(const std::vector<double>& r_grid,
                               const std::vector<double>& x_grid, const SleParams& p,
                               const PdeSolveOptions& opt) {
    if (r_grid.empty() || x_grid.empty()) {
        throw std::invalid_argument("assemble_tables: empty grid");
    }
    if (!std::is_sorted(r_grid.begin(), r_grid.end())) {
        throw std::invalid_argument("assemble_tables: r_grid must be ascending");
    }
    if (opt.windings > 0) return assemble_impl(r_grid, x_grid, p, opt);
    // auto mode: the diffusive-spread heuristic can be too narrow for the
    // 1e-9 tail certification at large r (beta grows like e^{b r}); widen
    // and re-march when the certification fails
    PdeSolveOptions o = opt;
    double spread = 4.0 * std::sqrt(p.kappa * r_grid.back());
    int base = std::max(2, static_cast<int>(std::ceil((spread + kTwoPi) / kTwoPi)));
    for (int extra = 0;; extra += 2) {
        o.windings = base + extra;
        try {
            return assemble_impl(r_grid, x_grid, p, o);
        } catch (const std::runtime_error&) {
            if (extra >= 6) throw;
        }
    }
}

namespace {

double check_uniform(const std::vector<double>& g, const char* what) {
    if (g.size() < 3) throw std::invalid_argument(std::string("pde_residual: need >= 3 ") + what);
    double d = g[1] - g[0];
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        if (std::abs(g[i + 1] - g[i] - d) > 1e-9 * std::abs(d)) {
            throw std::invalid_argument(std::string("pde_residual: non-uniform ") + what);
        }
    }
    return d;
}

} // namespace

ResidualGrid pde_residual(const FunctionTable& tab, PdeEq eq, const SleParams& p) {
    std::size_t nr = tab.r_grid.size(), nx = tab.x_grid.size();
    if (tab.values.size() != nr * nx) throw std::invalid_argument("pde_residual: shape mismatch");
    double dr = check_uniform(tab.r_grid, "r rows");
    double dx = check_uniform(tab.x_grid, "x columns");
    auto v = [&](std::size_t ir, std::size_t ix) { return tab.values[ir * nx + ix]; };

    ResidualGrid out;
    out.r_grid.assign(tab.r_grid.begin() + 1, tab.r_grid.end() - 1);
    std::size_t x_lo = tab.periodic_x ? 0 : 1;
    std::size_t x_hi = tab.periodic_x ? nx : nx - 1;
    out.x_grid.assign(tab.x_grid.begin() + x_lo, tab.x_grid.begin() + x_hi);
    out.values.reserve((nr - 2) * (x_hi - x_lo));

    double bk = p.b * p.kappa;
    for (std::size_t ir = 1; ir + 1 < nr; ++ir) {
        double r = tab.r_grid[ir];
        double gam = (eq == PdeEq::fpde2) ? eval_Gamma_delta(r).Gamma : 0.0;
        for (std::size_t ix = x_lo; ix < x_hi; ++ix) {
            double x = tab.x_grid[ix];
            std::size_t il = (ix == 0) ? nx - 1 : ix - 1;
            std::size_t iu = (ix == nx - 1) ? 0 : ix + 1;
            double f = v(ir, ix);
            double fr = (v(ir + 1, ix) - v(ir - 1, ix)) / (2.0 * dr);
            double fx = (v(ir, iu) - v(ir, il)) / (2.0 * dx);
            double fxx = (v(ir, iu) - 2.0 * f + v(ir, il)) / (dx * dx);
            double rhs = 0.0;
            switch (eq) {
                case PdeEq::pde:
                    rhs = -2.0 * p.b * eval_A_fast(r, x) * f +
                          (eval_H_I_series(r, x) - bk * eval_L(r, x)) * fx +
                          (p.kappa / 2.0) * fxx;
                    break;
                case PdeEq::pde2:
                    rhs = -2.0 * p.b * eval_A_tilde(r, x) * f +
                          (2.0 * eval_H_I_tilde(r, x) - bk * eval_L_tilde(r, x)) * fx +
                          (p.kappa / 2.0) * fxx;
                    break;
                case PdeEq::fpde2:
                    rhs = (p.kappa / 2.0) * fxx + eval_H_I_series(r, x) * fx +
                          (p.b * eval_H_I_prime(r, x) + p.b +
                           p.b_tilde * (6.0 * gam - 1.0) - p.b / r) *
                              f;
                    break;
                case PdeEq::kpde:
                    rhs = (p.kappa / 2.0) * fxx + eval_H_I_series(r, x) * fx +
                          p.b * eval_H_I_prime(r, x) * f;
                    break;
                case PdeEq::kappa2:
                    rhs = fxx + eval_H_I_series(r, x) * fx + eval_H_I_prime(r, x) * f;
                    break;
            }
            double res = fr - rhs;
            out.values.push_back(res);
            out.sup_norm = std::max(out.sup_norm, std::abs(res));
        }
    }
    return out;
}

KLimit K_limit(const PartitionTable& table) {
    std::size_t nr = table.r_grid.size(), nx = table.x_grid.size();
    if (nr < 4 || table.r_grid.back() < 8.0) {
        throw std::invalid_argument("K_limit: need K assembled for r up to >= 8");
    }
    KLimit out;
    double s = 0.0;
    for (std::size_t ix = 0; ix < nx; ++ix) s += table.K[table.index(nr - 1, ix)];
    out.K_inf = s / static_cast<double>(nx);

    std::vector<double> rs, logdev;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t ir = 0; ir < nr; ++ir) {
        double r = table.r_grid[ir];
        if (r < 6.0 || r > 10.0) continue;
        double dev = 0.0;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            dev = std::max(dev, std::abs(table.K[table.index(ir, ix)] - out.K_inf));
        }
        if (dev > prev) out.monotone = false;
        prev = dev;
        if (dev > 0.0) {
            rs.push_back(r);
            logdev.push_back(std::log(dev));
        }
    }
    if (rs.size() < 3) {
        // fall back to the upper half of the r grid
        rs.clear();
        logdev.clear();
        for (std::size_t ir = nr / 2; ir + 1 < nr; ++ir) {
            double dev = 0.0;
            for (std::size_t ix = 0; ix < nx; ++ix) {
                dev = std::max(dev, std::abs(table.K[table.index(ir, ix)] - out.K_inf));
            }
            if (dev > 0.0) {
                rs.push_back(table.r_grid[ir]);
                logdev.push_back(std::log(dev));
            }
        }
    }
    if (rs.size() >= 2) {
        double n = static_cast<double>(rs.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (std::size_t i = 0; i < rs.size(); ++i) {
            sx += rs[i];
            sy += logdev[i];
            sxx += rs[i] * rs[i];
            sxy += rs[i] * logdev[i];
            syy += logdev[i] * logdev[i];
        }
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        out.decay_rate = -slope;
        double denom = (n * sxx - sx * sx) * (n * syy - sy * sy);
        if (denom > 0.0) {
            double num = n * sxy - sx * sy;
            out.r_squared = num * num / denom;
        }
    }
    return out;
}

} // namespace annsle
