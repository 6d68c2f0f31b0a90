#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace annsle {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kTwoPi = 2.0 * kPi;

// Derived SLE parameters.  All formulas in the library consume these.
struct SleParams {
    double kappa;
    double a;       // 2/kappa
    double b;       // (6-kappa)/(2 kappa)
    double b_tilde; // b (kappa-2)/4
    double c;       // central charge, b (3 kappa - 8) = 12 b_tilde - 2 b
};

// Throws std::domain_error unless 0 < kappa <= 4.
SleParams derive_params(double kappa);

// Point on the covering strip S_r = {0 < Im z < r}; x is the horizontal
// coordinate, periodic with period 2pi when projected to the annulus A_r
// by z -> e^{iz}.
struct StripPoint {
    double r;
    double x;
};

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
};

// Periodic grid of values at x_j = -pi + 2*pi*j/n_x for one fixed r.
struct Grid1P {
    double r = 0.0;
    int n_x = 0;
    std::vector<double> values;

    double x_at(int j) const { return -kPi + kTwoPi * j / n_x; }
    // Periodic access.
    double at(int j) const {
        int m = j % n_x;
        if (m < 0) m += n_x;
        return values[static_cast<std::size_t>(m)];
    }
};

// Counter-based 64-bit generator.  One instance per Monte Carlo path,
// seeded by (master_seed, path_index), so path results do not depend on
// how work is distributed across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    Rng(std::uint64_t master_seed, std::uint64_t stream) : state_(mix(master_seed + 0x9e3779b97f4a7c15ULL * (stream + 1))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform in (0,1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    // Standard normal via Box-Muller; explicit formulas, no library
    // distributions, so output is reproducible bit-for-bit.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double rad = std::sqrt(-2.0 * std::log(u1));
        double ang = kTwoPi * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Reduce x to [-pi, pi).
double wrap_to_pi(double x);

} // namespace annsle
