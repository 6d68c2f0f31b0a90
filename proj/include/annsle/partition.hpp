#pragma once

#include <cstdint>
#include <vector>

#include "annsle/core.hpp"

namespace annsle {

// The five parabolic equations handled by the residual checker (dots are
// r-derivatives, primes x-derivatives):
//   pde:    Vdot = -2b A V + [H_I - b k L] V' + (k/2) V''
//   pde2:   same with the tilde coefficients (drift 2 Htilde_I - b k Ltilde)
//   fpde2:  Fdot = (k/2) F'' + H_I F' + [b H_I' + b + b_tilde (6 Gamma - 1) - b/r] F
//   kpde:   Kdot = (k/2) K'' + H_I K' + b H_I' K
//   kappa2: Phidot = Phi'' + H_I Phi' + H_I' Phi  (kappa = 2 fixed)
enum class PdeEq { pde, pde2, fpde2, kpde, kappa2 };

struct PdeSolveOptions {
    double r_min = 0.05;  // march start; initial data V == 1 where A is finite
    int n_x = 256;        // grid points per 2 pi
    int windings = 0;     // extra 2 pi bands on each side of [-pi, pi]; 0 = auto
    double cfl = 0.3;     // advection CFL fraction
    double dr_max = 0.01; // cap on the r step
    bool zero_potential = false; // drop the A term (drift-diffusion only)
};

// Rows of the marched solution on the wide grid.  The V equation lives on
// [-W, W], W = (2 windings + 1) pi, with Dirichlet 0 ends (A blows up well
// before the ends, so the solution is genuinely ~0 there); the tilde
// variant lives on [0, 2 pi] with boundary values 1 at 0 and 0 at 2 pi.
struct VSolution {
    double dx = 0.0;
    std::vector<double> xs;
    std::vector<double> r_rows;                // recorded r values, ascending
    std::vector<std::vector<double>> rows;     // one solution row per recorded r
    double value(std::size_t row, double x) const; // linear interpolation
};

VSolution V_pde_solve(double r_max, const SleParams& p, std::vector<double> record_r,
                      const PdeSolveOptions& opt = {});
VSolution tildeV_pde_solve(double r_max, const SleParams& p, std::vector<double> record_r,
                           const PdeSolveOptions& opt = {});

// Feynman-Kac estimate of V(r,x) = E^x[exp{-2b int_0^r A(r-s, X_s) ds}]
// over locally-chordal paths (tilde: absorbed chordal paths, A tilde).
// Bit-identical for fixed seed regardless of n_threads: per-path seeds are
// derived from (seed, path index) and chunk sums are reduced in order.
McEstimate V_monte_carlo(double r, double x, std::size_t n_paths, double dt,
                         const SleParams& p, std::uint64_t seed, int n_threads = 0);
McEstimate tildeV_monte_carlo(double r, double x, std::size_t n_paths, double dt,
                              const SleParams& p, std::uint64_t seed, int n_threads = 0);

struct PartitionTable {
    SleParams p;
    std::vector<double> r_grid, x_grid;
    std::vector<double> beta, lambda;                  // per r row
    std::vector<double> V, Psi_tilde, F, F_hat, K;     // row-major [ir * nx + ix]
    double tail_bound = 0.0; // worst certified winding-sum remainder (absolute)

    std::size_t index(std::size_t ir, std::size_t ix) const {
        return ir * x_grid.size() + ix;
    }
};

// One PDE march to max(r_grid), then per row:
//   Psi_tilde = V * H_dStrip(0, x + ir)^b,  F = beta Psi_tilde,
//   F_hat = sum_k F(r, x + 2 pi k),  K = lambda F_hat.
// The winding sum uses every band of the wide solution grid; the remainder
// is certified with V <= (outermost computed band max) and the cosh decay
// of the Poisson kernel, and must stay below 1e-9 relative to F_hat.
PartitionTable assemble_tables(const std::vector<double>& r_grid,
                               const std::vector<double>& x_grid, const SleParams& p,
                               const PdeSolveOptions& opt = {});

// A tabulated function of (r, x) on uniform grids, row-major values.
struct FunctionTable {
    std::vector<double> r_grid, x_grid;
    std::vector<double> values;
    bool periodic_x = true; // x_grid covers one full period of length 2 pi
};

struct ResidualGrid {
    std::vector<double> r_grid, x_grid; // interior rows of the input grid
    std::vector<double> values;
    double sup_norm = 0.0;
};

// Centered-difference residual of the named equation on the table's
// interior; x wraps periodically when periodic_x, otherwise the two edge
// columns are skipped.
ResidualGrid pde_residual(const FunctionTable& tab, PdeEq eq, const SleParams& p);

struct KLimit {
    double K_inf = 0.0;     // mean of K at the largest tabulated r
    double decay_rate = 0.0; // u in sup_x |K - K_inf| ~ exp(-u r), from log fit
    double r_squared = 0.0;  // fit quality
    bool monotone = true;    // deviation sequence nonincreasing over the window
};

// Fit window: tabulated r in [6, 10] when available, otherwise the upper
// half of the r grid.  Requires K assembled for r up to >= 8.
KLimit K_limit(const PartitionTable& table);

} // namespace annsle
