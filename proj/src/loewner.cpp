#include "annsle/loewner.hpp"

#include <algorithm>
#include <cmath>

#include "annsle/special.hpp"

namespace annsle {

namespace {

// Root of w with Im >= 0; for real nonnegative w the sign is taken from
// re_hint so that the map fixes the two real half-lines.
Complex upper_sqrt(Complex w, double re_hint) {
    Complex s = std::sqrt(w);
    if (std::abs(s.imag()) < 1e-300 && w.imag() == 0.0 && w.real() >= 0.0) {
        return re_hint >= 0.0 ? s : -s;
    }
    return s.imag() >= 0.0 ? s : -s;
}

// One exact vertical-slit step of the chordal flow with constant driver.
Complex slit_step(Complex z, double u, double cap2) {
    Complex w = z - u;
    return u + upper_sqrt(w * w + cap2, w.real());
}

// Inverse slit step (used to trace the curve from its driver).
Complex slit_step_inv(Complex z, double u, double cap2) {
    Complex w = z - u;
    return u + upper_sqrt(w * w - cap2, w.real());
}

} // namespace

double DrivingPath::at_time(double t) const {
    if (samples.empty()) return 0.0;
    if (samples.size() == 1 || dt <= 0.0) return samples.front();
    double j = t / dt;
    if (j <= 0.0) return samples.front();
    auto n = samples.size() - 1;
    if (j >= static_cast<double>(n)) return samples.back();
    auto j0 = static_cast<std::size_t>(j);
    double f = j - static_cast<double>(j0);
    return samples[j0] * (1.0 - f) + samples[j0 + 1] * f;
}

Complex chordal_flow(const DrivingPath& U, Complex z, double t, const SleParams& p) {
    if (U.dt <= 0.0) throw std::invalid_argument("chordal_flow: driver dt must be positive");
    Complex g = z;
    double elapsed = 0.0;
    std::size_t j = 0;
    const double swallow_scale = 10.0 * std::sqrt(p.a * U.dt);
    while (elapsed < t - 1e-15) {
        double u = j < U.samples.size() ? U.samples[j] : U.samples.back();
        double step = std::min(U.dt, t - elapsed);
        if (std::abs(g - u) < swallow_scale) {
            throw SwallowedError("chordal_flow: point swallowed", elapsed);
        }
        g = slit_step(g, u, 2.0 * p.a * step);
        elapsed += step;
        ++j;
    }
    return g;
}

Complex radial_flow(const DrivingPath& U, Complex z, double t, const SleParams& p) {
    if (U.dt <= 0.0) throw std::invalid_argument("radial_flow: driver dt must be positive");
    auto f = [&](double s, Complex h) {
        Complex w = h - U.at_time(s);
        return (p.a / 2.0) / std::tan(w / 2.0);
    };
    Complex h = z;
    double s = 0.0;
    const double swallow_scale = 10.0 * std::sqrt(p.a * U.dt);
    while (s < t - 1e-15) {
        double step = std::min(U.dt, t - s);
        if (std::abs(h - U.at_time(s)) < swallow_scale) {
            throw SwallowedError("radial_flow: point swallowed", s);
        }
        Complex k1 = f(s, h);
        Complex k2 = f(s + step / 2, h + step / 2 * k1);
        Complex k3 = f(s + step / 2, h + step / 2 * k2);
        Complex k4 = f(s + step, h + step * k3);
        h += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += step;
    }
    return h;
}

namespace {

template <typename State, typename Rhs>
State rk4_annulus(State y, double s0, double s1, double base_step, double r0,
                  const DrivingPath& U, const Rhs& rhs,
                  const std::function<double(const State&, double)>& pole_dist) {
    double s = s0;
    while (s < s1 - 1e-15) {
        double step = std::min(base_step, s1 - s);
        // halve the step near the kernel pole
        for (int halvings = 0; halvings < 24; ++halvings) {
            double d = pole_dist(y, s);
            if (d > 4.0 * std::sqrt(std::max(step, 1e-300))) break;
            step *= 0.5;
            if (step < 1e-14) {
                throw SwallowedError("annulus_flow: step collapse near kernel pole", s);
            }
        }
        State k1 = rhs(s, y);
        State k2 = rhs(s + step / 2, y + step / 2 * k1);
        State k3 = rhs(s + step / 2, y + step / 2 * k2);
        State k4 = rhs(s + step, y + step * k3);
        y += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += step;
    }
    return y;
}

} // namespace

Complex annulus_flow(const DrivingPath& Ustar, double r0, Complex z, double s) {
    if (!(s >= 0.0) || s >= r0) throw std::invalid_argument("annulus_flow: need 0 <= s < r0");
    if (s == 0.0) return z;
    double base = Ustar.dt > 0.0 ? Ustar.dt : s / 64.0;
    auto rhs = [&](double sp, Complex h) {
        double r = r0 - sp;
        return -2.0 * eval_complex_kernel(r, h - Ustar.at_time(sp));
    };
    std::function<double(const Complex&, double)> pole_dist = [&](const Complex& h, double sp) {
        Complex w = h - Ustar.at_time(sp);
        return std::hypot(wrap_to_pi(w.real()), w.imag());
    };
    return rk4_annulus(z, 0.0, s, base, r0, Ustar, rhs, pole_dist);
}

namespace {

struct ValDeriv {
    Complex h;
    Complex d;
    ValDeriv operator+(const ValDeriv& o) const { return {h + o.h, d + o.d}; }
    ValDeriv& operator+=(const ValDeriv& o) {
        h += o.h;
        d += o.d;
        return *this;
    }
    friend ValDeriv operator*(double a, const ValDeriv& v) { return {a * v.h, a * v.d}; }
    friend ValDeriv operator*(const ValDeriv& v, double a) { return {a * v.h, a * v.d}; }
};

ValDeriv operator*(Complex, const ValDeriv&) = delete;

} // namespace

FlowWithDeriv annulus_flow_with_deriv(const DrivingPath& Ustar, double r0, Complex z, double s) {
    if (!(s >= 0.0) || s >= r0) throw std::invalid_argument("annulus_flow: need 0 <= s < r0");
    if (s == 0.0) return {z, 1.0};
    double base = Ustar.dt > 0.0 ? Ustar.dt : s / 64.0;
    auto rhs = [&](double sp, ValDeriv y) -> ValDeriv {
        double r = r0 - sp;
        Complex w = y.h - Ustar.at_time(sp);
        return {-2.0 * eval_complex_kernel(r, w),
                -2.0 * eval_complex_kernel_deriv(r, w) * y.d};
    };
    std::function<double(const ValDeriv&, double)> pole_dist = [&](const ValDeriv& y, double sp) {
        Complex w = y.h - Ustar.at_time(sp);
        return std::hypot(wrap_to_pi(w.real()), w.imag());
    };
    ValDeriv out = rk4_annulus(ValDeriv{z, 1.0}, 0.0, s, base, r0, Ustar, rhs, pole_dist);
    return {out.h, out.d};
}

double measure_r_dot(const SleParams& p, const CurveTrace& test_curve, double r0) {
    double h = 0.0;
    for (const Complex& z : test_curve.points) h = std::max(h, z.imag());
    if (!(h > 0.0) || h >= r0) {
        throw std::invalid_argument("measure_r_dot: curve height must lie in (0, r0)");
    }
    // t from hcap[i(0,h]] = h^2/2 with the parametrization hcap = a t
    double t = h * h / (2.0 * p.a);
    // modulus decrement consumed by the slit: the tip trajectory stays on
    // the imaginary axis, ds/dy = 1 / (2 Im H_r(iy))
    double s = integrate(
        [&](double y) {
            if (y == 0.0) return 0.0;
            double g = eval_complex_kernel(r0, Complex(0.0, y)).imag();
            return 1.0 / (2.0 * g);
        },
        0.0, h, 1e-13);
    return -s / t;
}

DrivingPath extract_driving(const CurveTrace& curve, const SleParams& p, double out_dt) {
    if (curve.points.size() < 2) throw std::invalid_argument("extract_driving: need >= 2 points");
    if (std::abs(curve.points.front().imag()) > 1e-9) {
        throw std::invalid_argument("extract_driving: curve must start on the real axis");
    }
    std::vector<Complex> pts(curve.points.begin(), curve.points.end());
    std::vector<double> times{0.0};
    std::vector<double> drivers{pts.front().real()};
    double t = 0.0;
    for (std::size_t j = 1; j < pts.size(); ++j) {
        Complex w = pts[j];
        if (w.imag() < -1e-9) {
            throw std::invalid_argument("extract_driving: curve is not simple (point left H)");
        }
        double u = w.real();
        double hj = std::max(w.imag(), 0.0);
        t += hj * hj / (2.0 * p.a);
        double cap2 = hj * hj;
        for (std::size_t k = j + 1; k < pts.size(); ++k) {
            pts[k] = slit_step(pts[k], u, cap2);
            if (pts[k].imag() < -1e-9) {
                throw std::invalid_argument("extract_driving: curve is not simple");
            }
        }
        times.push_back(t);
        drivers.push_back(u);
    }
    // resample to uniform grid
    DrivingPath out;
    out.dt = out_dt;
    out.parametrization = Parametrization::hcap;
    std::size_t n_out = static_cast<std::size_t>(std::floor(t / out_dt)) + 1;
    out.samples.reserve(n_out);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < n_out; ++k) {
        double tk = k * out_dt;
        while (seg + 1 < times.size() && times[seg + 1] < tk) ++seg;
        if (seg + 1 >= times.size()) {
            out.samples.push_back(drivers.back());
            continue;
        }
        double span = times[seg + 1] - times[seg];
        double f = span > 0.0 ? (tk - times[seg]) / span : 0.0;
        out.samples.push_back(drivers[seg] * (1.0 - f) + drivers[seg + 1] * f);
    }
    return out;
}

CurveTrace trace_from_driver(const DrivingPath& U, const SleParams& p) {
    if (U.dt <= 0.0) throw std::invalid_argument("trace_from_driver: driver dt must be positive");
    CurveTrace out;
    const double cap2 = 2.0 * p.a * U.dt;
    out.points.push_back(Complex(U.samples.empty() ? 0.0 : U.samples.front(), 0.0));
    out.times.push_back(0.0);
    for (std::size_t n = 1; n < U.samples.size(); ++n) {
        Complex z(U.samples[n], 0.0);
        for (std::size_t j = n; j-- > 0;) {
            z = slit_step_inv(z, U.samples[j], cap2);
        }
        out.points.push_back(z);
        out.times.push_back(n * U.dt);
    }
    return out;
}

double hcap_estimate(const DrivingPath& U, const SleParams& p, double y_ref) {
    Complex z(0.0, y_ref);
    Complex g = chordal_flow(U, z, U.horizon(), p);
    return ((g - z) * z).real();
}

} // namespace annsle
