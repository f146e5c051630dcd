#pragma once

// Closed-form ball formulas for the isotropic alpha-stable process with
// Levy density A(n,alpha)|x|^{-n-alpha}: Green function, Poisson kernel,
// expected exit time, and exit-law masses of radial/angular bins.
// For a stable model with another calibration c, Green functions and exit
// times scale by A/c; exit laws do not change.

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "censored/errors.hpp"
#include "censored/geometry.hpp"
#include "censored/kernels.hpp"
#include "censored/point.hpp"

namespace censored::classical {

inline double green_constant(int n, double alpha) {
    return std::tgamma(0.5 * n) / (std::pow(2.0, alpha) * std::pow(M_PI, 0.5 * n) * std::pow(std::tgamma(0.5 * alpha), 2));
}

/// int_0^w t^{alpha/2-1} (1+t)^{-n/2} dt by tanh-sinh quadrature.
inline double green_integral_quadrature(int n, double alpha, double w) {
    if (!(w > 0)) return 0.0;
    const double a = 0.5 * alpha, b = 0.5 * n;
    auto f = [&](double t) { return t > 0 ? std::pow(t, a - 1.0) * std::pow(1.0 + t, -b) : 0.0; };
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, 0.0, w, 1e-12);
}

/// Same integral through the incomplete beta function (alpha < n only).
inline double green_integral(int n, double alpha, double w) {
    if (!(w > 0)) return 0.0;
    const double a = 0.5 * alpha, b = 0.5 * (n - alpha);
    if (b <= 0) return green_integral_quadrature(n, alpha, w);
    return boost::math::beta(a, b, w / (1.0 + w));
}

/// Green function of the unit ball at x != y.
inline double unit_ball_green(int n, double alpha, const Point& x, const Point& y) {
    const double d = distance(x, y);
    if (!(d > 0)) throw DomainError("classical green: x and y must differ");
    const double ax = 1.0 - x.norm2(), ay = 1.0 - y.norm2();
    if (ax <= 0 || ay <= 0) return 0.0;
    const double w = ax * ay / (d * d);
    return green_constant(n, alpha) * std::pow(d, alpha - n) * green_integral(n, alpha, w);
}

/// Green function of B(c, R).
inline double ball_green(int n, double alpha, const Point& c, double R, const Point& x, const Point& y) {
    return std::pow(R, alpha - n) * unit_ball_green(n, alpha, (x - c) * (1.0 / R), (y - c) * (1.0 / R));
}

/// Poisson kernel of the unit ball, x inside, |z| > 1.
inline double unit_ball_poisson(int n, double alpha, const Point& x, const Point& z) {
    const double ax = 1.0 - x.norm2(), az = z.norm2() - 1.0;
    if (ax <= 0 || az <= 0) return 0.0;
    const double c = std::tgamma(0.5 * n) * std::pow(M_PI, -0.5 * n - 1.0) * std::sin(M_PI * alpha / 2.0);
    return c * std::pow(ax / az, 0.5 * alpha) * std::pow(distance(x, z), -n);
}

/// Expected exit time of the unit ball from x.
inline double unit_ball_exit_time(int n, double alpha, const Point& x) {
    const double ax = 1.0 - x.norm2();
    if (ax <= 0) return 0.0;
    return std::tgamma(0.5 * n) / (std::pow(2.0, alpha) * std::tgamma(1.0 + 0.5 * alpha) * std::tgamma(0.5 * (n + alpha))) *
           std::pow(ax, 0.5 * alpha);
}

/// Exit-law mass of the shell r1 < |z| < r2 (r1 >= 1) from the centre.
inline double centred_shell_mass(double alpha, double r1, double r2) {
    // with v = 1/|z|^2 the radial density becomes a Beta(alpha/2, 1 - alpha/2) law
    const double a = 0.5 * alpha, b = 1.0 - 0.5 * alpha;
    auto cdf = [&](double r) { return r == std::numeric_limits<double>::infinity() ? 0.0 : boost::math::ibeta(a, b, 1.0 / (r * r)); };
    return cdf(r1) - cdf(r2);
}

/// Exit-law mass of the polar cell {r1<|z|<r2, th1<arg z<th2} from x, n = 2.
inline double planar_cell_mass(double alpha, const Point& x, double r1, double r2, double th1, double th2) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double a = 0.5 * alpha;
    const double c = std::pow(M_PI, -2.0) * std::sin(M_PI * a);
    const double ax = 1.0 - x.norm2();
    // radial variable v = 1/|z|^2 with density ~ v^{a-1} (1-v)^{-a}
    auto radial = [&](double v, double one_minus_v) {
        const double rho = 1.0 / std::sqrt(v);
        const double az = one_minus_v / v;  // |z|^2 - 1 without cancellation
        auto ang = [&](double th) {
            const Point z{rho * std::cos(th), rho * std::sin(th)};
            return std::pow(distance(x, z), -2.0);
        };
        // dz = rho d rho d th = rho^4 / 2 dv d th
        return c * std::pow(ax / az, a) * GK::integrate(ang, th1, th2, 15, 1e-12) * 0.5 * rho * rho * rho * rho;
    };
    const double v1 = r2 == std::numeric_limits<double>::infinity() ? 0.0 : 1.0 / (r2 * r2);
    const double v2 = 1.0 / (r1 * r1);
    const double mid = std::clamp(0.5, v1, v2);
    double total = 0;
    if (mid > v1) {
        // v = p^{1/a} near 0
        auto f = [&](double p) {
            const double v = std::pow(p, 1.0 / a);
            return v > 0 ? radial(v, 1.0 - v) * std::pow(p, 1.0 / a - 1.0) / a : 0.0;
        };
        total += GK::integrate(f, std::pow(v1, a), std::pow(mid, a), 15, 1e-11);
    }
    if (v2 > mid) {
        // 1 - v = q^{1/(1-a)} near 1
        const double e = 1.0 / (1.0 - a);
        auto f = [&](double q) {
            const double w = std::pow(q, e);
            return w > 0 ? radial(1.0 - w, w) * e * std::pow(q, e - 1.0) : 0.0;
        };
        total += GK::integrate(f, std::pow(1.0 - v2, 1.0 - a), std::pow(1.0 - mid, 1.0 - a), 15, 1e-11);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Oracles for calibrated-or-not stable models on balls.

inline void require_stable_ball(const LevyModel& m, const Domain& b) {
    if (m.profile.family != ProfileFamily::Stable) throw PreconditionError("classical oracle needs a Stable profile");
    if (b.shape() != Shape::Ball && b.shape() != Shape::Interval)
        throw PreconditionError("classical oracle needs a ball domain");
    if (b.dim() != m.n) throw PreconditionError("classical oracle: dimension mismatch");
}

/// Time-scale factor between the model and the standard stable process.
inline double time_scale(const LevyModel& m) { return stable_normalization(m.n, m.profile.alpha) / m.c_cal; }

inline double green(const LevyModel& m, const Domain& b, const Point& x, const Point& y) {
    require_stable_ball(m, b);
    return time_scale(m) * ball_green(m.n, m.profile.alpha, b.center(), b.radius(), x, y);
}

inline double exit_time(const LevyModel& m, const Domain& b, const Point& x) {
    require_stable_ball(m, b);
    const double R = b.radius();
    return time_scale(m) * std::pow(R, m.profile.alpha) * unit_ball_exit_time(m.n, m.profile.alpha, (x - b.center()) * (1.0 / R));
}

inline double poisson(const LevyModel& m, const Domain& b, const Point& x, const Point& z) {
    require_stable_ball(m, b);
    const double R = b.radius();
    return std::pow(R, -m.n) *
           unit_ball_poisson(m.n, m.profile.alpha, (x - b.center()) * (1.0 / R), (z - b.center()) * (1.0 / R));
}

}  // namespace censored::classical
