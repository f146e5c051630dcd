#pragma once

// Kernel quantities of the canonical model j(r) = c * phi(r^-2) / r^n:
// radial tails, jump rates, small-jump variance, the killing density of a
// domain, and the tables the simulator reads them from.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "censored/bernstein.hpp"
#include "censored/errors.hpp"
#include "censored/geometry.hpp"
#include "censored/point.hpp"

namespace censored {

struct LevyModel {
    int n = 2;
    BernsteinProfile profile;
    double c_cal = 1.0;
    double gamma1 = 1.0;  // comparability constants; metadata only
    double gamma2 = 1.0;

    LevyModel() = default;
    LevyModel(int dim, BernsteinProfile p, double c = 1.0) : n(dim), profile(p), c_cal(c) {
        if (dim < 1 || dim > kMaxDim) throw ConfigError("model: dimension must lie in [1, 3]");
        if (!(c > 0.0)) throw ConfigError("model: calibration must be positive");
    }
    std::string str() const {
        return profile.str() + ";n=" + std::to_string(n) + ";c=" + std::to_string(c_cal);
    }
};

/// Normalizing constant of the standard isotropic alpha-stable process,
/// whose Levy density is A(n,alpha) |x|^{-n-alpha}.
inline double stable_normalization(int n, double alpha) {
    return alpha * std::pow(2.0, alpha - 1.0) * std::tgamma(0.5 * (n + alpha)) /
           (std::pow(M_PI, 0.5 * n) * std::tgamma(1.0 - 0.5 * alpha));
}

/// Stable(alpha) scaled to the standard normalization, so that classical
/// ball formulas apply without rescaling.
inline LevyModel calibrated_stable(int n, double alpha) {
    return LevyModel(n, BernsteinProfile::stable(alpha), stable_normalization(n, alpha));
}

inline double levy_density(const LevyModel& m, double r) {
    if (!(r > 0.0)) throw DomainError("levy_density: r must be positive, got " + std::to_string(r));
    return m.c_cal * phi(m.profile, 1.0 / (r * r)) / std::pow(r, m.n);
}

/// sup of j(r)/j(r+1) over a grid of [1, 100].
inline double unit_shift_constant(const LevyModel& m, int points = 991) {
    double c = 0;
    for (int k = 0; k < points; ++k) {
        const double r = 1.0 + 99.0 * k / (points - 1);
        c = std::max(c, levy_density(m, r) / levy_density(m, r + 1.0));
    }
    return c;
}

/// Radial tail per unit solid angle: T(s) = int_s^inf j(r) r^{n-1} dr,
/// computed as (c/2) int_0^inf phi(s^-2 e^-w) dw.
inline double radial_tail_exact(const LevyModel& m, double s) {
    if (!(s > 0.0)) throw DomainError("radial tail: cutoff must be positive");
    const double lam0 = 1.0 / (s * s);
    auto f = [&](double w) {
        const double lam = lam0 * std::exp(-w);
        return lam > 0.0 ? phi(m.profile, lam) : 0.0;
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    double err = 0, l1 = 0;
    double v = 0;
    try {
        v = integrator.integrate(f, 1e-12, &err, &l1);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("radial tail integral failed: ") + e.what());
    }
    if (!std::isfinite(v) || v <= 0.0) throw ConfigError("radial tail integral diverges for " + m.profile.str());
    return 0.5 * m.c_cal * v;
}

/// Jump rate Lambda(eps) = int_{|x|>eps} j(|x|) dx.
inline double tail_mass(const LevyModel& m, double eps) {
    if (!(eps > 0.0)) throw DomainError("tail_mass: eps must be positive, got " + std::to_string(eps));
    return unit_sphere_area(m.n) * radial_tail_exact(m, eps);
}

/// Per-coordinate variance rate of the jumps shorter than eps.
inline double small_jump_variance(const LevyModel& m, double eps) {
    if (!(eps > 0.0)) throw DomainError("small_jump_variance: eps must be positive, got " + std::to_string(eps));
    const double lam0 = 1.0 / (eps * eps);
    auto f = [&](double w) {
        const double lam = lam0 * std::exp(w);
        if (!std::isfinite(lam)) return 0.0;
        return phi(m.profile, lam) * (lam0 / lam);
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    double err = 0, l1 = 0;
    const double v = integrator.integrate(f, 1e-12, &err, &l1);
    if (!std::isfinite(v)) throw ConfigError("small-jump variance diverges for " + m.profile.str());
    return unit_sphere_area(m.n) * m.c_cal / (2.0 * m.n) * eps * eps * v;
}

/// Log-log tabulation of the radial tail with O(1) evaluation and an
/// inverse for radius sampling. Linear in (log s, log T), hence exact for
/// pure powers; outside the table the end slopes are extended.
class RadialTail {
  public:
    static constexpr double kLo = 1e-15;
    static constexpr double kHi = 1e9;
    static constexpr int kPerDecade = 128;

    explicit RadialTail(const LevyModel& m) : model_(m) {
        const int decades = static_cast<int>(std::lround(std::log10(kHi / kLo)));
        const int n_knots = decades * kPerDecade + 1;
        u0_ = std::log(kLo);
        h_ = std::log(10.0) / kPerDecade;
        logT_.resize(n_knots);
        for (int k = 0; k < n_knots; ++k) logT_[k] = std::log(radial_tail_exact(m, std::exp(u0_ + k * h_)));
        for (int k = 1; k < n_knots; ++k)
            if (!(logT_[k] < logT_[k - 1])) throw ConfigError("radial tail table is not strictly decreasing");
        sphere_ = unit_sphere_area(m.n);
    }

    const LevyModel& model() const { return model_; }
    std::size_t knots() const { return logT_.size(); }

    double log_value(double s) const {
        const double x = (std::log(s) - u0_) / h_;
        const int last = static_cast<int>(logT_.size()) - 1;
        int k = static_cast<int>(std::floor(x));
        k = std::clamp(k, 0, last - 1);
        const double t = x - k;
        return logT_[k] + t * (logT_[k + 1] - logT_[k]);
    }

    /// T(s); s = +inf gives 0.
    double value(double s) const {
        if (s == std::numeric_limits<double>::infinity()) return 0.0;
        return std::exp(log_value(s));
    }

    /// Jump rate for cutoff e.
    double rate(double e) const { return sphere_ * value(e); }

    /// The radius r with log T(r) = y.
    double inverse_log(double y) const {
        const int last = static_cast<int>(logT_.size()) - 1;
        int k;
        if (y >= logT_[0]) {
            k = 0;
        } else if (y <= logT_[last]) {
            k = last - 1;
        } else {
            // first knot with logT < y; logT is decreasing
            auto it = std::upper_bound(logT_.begin(), logT_.end(), y, std::greater<double>());
            k = static_cast<int>(it - logT_.begin()) - 1;
        }
        const double t = (y - logT_[k]) / (logT_[k + 1] - logT_[k]);
        return std::exp(u0_ + (k + t) * h_);
    }

    /// Radius of a jump conditioned on exceeding e, from u in (0,1].
    double sample_radius(double e, double u) const {
        const double r = inverse_log(log_value(e) + std::log(u));
        return std::max(r, e);
    }

  private:
    LevyModel model_;
    double u0_ = 0, h_ = 1, sphere_ = 1;
    std::vector<double> logT_;
};

// ---------------------------------------------------------------------------
// Killing density.

struct KillingValue {
    double value = 0;
    double abs_error = 0;
};

namespace detail {

// Contribution of the exterior segments along one direction, with jumps
// shorter than `cut` excluded.
template <class Tail>
double ray_tail(const Tail& tail, const Domain& d, const Point& x, const Point& e, double cut) {
    RaySegment seg[2];
    const int k = d.ray_exterior(x, e, seg);
    double s = 0;
    for (int i = 0; i < k; ++i) {
        const double a = std::max(seg[i].from, cut);
        const double b = std::max(seg[i].to, cut);
        if (b > a) s += tail(a) - tail(b);
    }
    return s;
}

template <class F>
double gk(F f, double a, double b, double tol, double* err) {
    double e = 0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, tol, &e);
    if (err) *err += e;
    return v;
}

// Orthonormal frame with first vector u (n = 3).
inline void frame(const Point& u, Point& v, Point& w) {
    Point t = std::abs(u[0]) < 0.9 ? Point::axis(3, 0) : Point::axis(3, 1);
    v = t - u * t.dot(u);
    v *= 1.0 / v.norm();
    w = Point{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
}

}  // namespace detail

/// kappa^cut(x) = int_{D^c, |y-x|>cut} j(|y-x|) dy for x in D, evaluated
/// with the tail function `tail` (exact quadrature or a table).
template <class Tail>
KillingValue killing_density_with(const Tail& tail, int n, const Domain& d, const Point& x, double cut = 0.0,
                                  double tol = 1e-6) {
    if (!d.contains(x)) throw DomainError("killing_density: x=" + x.str() + " is not inside " + d.str());
    KillingValue out;
    if (n == 1) {
        out.value = detail::ray_tail(tail, d, x, Point{1.0}, cut) + detail::ray_tail(tail, d, x, Point{-1.0}, cut);
        return out;
    }
    // Nearest boundary direction: the integrand peaks there.
    Point q = d.nearest_boundary_point(x) - x;
    const Point u = q.norm() > 0 ? q * (1.0 / q.norm()) : Point::axis(n, 0);

    if (n == 2) {
        const double th0 = std::atan2(u[1], u[0]);
        auto f = [&](double th) {
            return detail::ray_tail(tail, d, x, Point{std::cos(th0 + th), std::sin(th0 + th)}, cut);
        };
        std::vector<double> cuts{-M_PI, 0.0, M_PI};
        if (d.shape() == Shape::Box) {
            // corners make kinks in the integrand
            for (int cx = 0; cx < 2; ++cx)
                for (int cy = 0; cy < 2; ++cy) {
                    const double px = cx ? d.hi()[0] : d.lo()[0], py = cy ? d.hi()[1] : d.lo()[1];
                    double a = std::atan2(py - x[1], px - x[0]) - th0;
                    a = std::remainder(a, 2.0 * M_PI);
                    cuts.push_back(a);
                }
            std::sort(cuts.begin(), cuts.end());
        }
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            if (cuts[i + 1] > cuts[i]) out.value += detail::gk(f, cuts[i], cuts[i + 1], tol, &out.abs_error);
        return out;
    }

    // n = 3: polar axis along u, mu = cos(polar angle).
    Point v, w;
    detail::frame(u, v, w);
    if (d.is_radial()) {
        auto f = [&](double mu) {
            const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
            return detail::ray_tail(tail, d, x, u * mu + v * s, cut);
        };
        out.value = 2.0 * M_PI * (detail::gk(f, -1.0, 0.0, tol, &out.abs_error) + detail::gk(f, 0.0, 1.0, tol, &out.abs_error));
        out.abs_error *= 2.0 * M_PI;
        return out;
    }
    auto inner = [&](double mu) {
        const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        auto g = [&](double ph) {
            return detail::ray_tail(tail, d, x, u * mu + (v * std::cos(ph) + w * std::sin(ph)) * s, cut);
        };
        double e = 0;
        return detail::gk(g, 0.0, M_PI, tol, &e) + detail::gk(g, M_PI, 2.0 * M_PI, tol, &e);
    };
    out.value = detail::gk(inner, -1.0, 0.0, tol, &out.abs_error) + detail::gk(inner, 0.0, 1.0, tol, &out.abs_error);
    return out;
}

inline KillingValue killing_density_report(const RadialTail& table, const Domain& d, const Point& x) {
    const LevyModel& m = table.model();
    if (d.dim() != m.n) throw DomainError("killing_density: domain and model dimensions differ");
    if (m.n == 1) {
        auto tail = [&](double s) { return s == std::numeric_limits<double>::infinity() ? 0.0 : radial_tail_exact(m, s); };
        return killing_density_with(tail, 1, d, x);
    }
    auto fast = [&](double s) { return table.value(s); };
    return killing_density_with(fast, m.n, d, x);
}

inline double killing_density(const RadialTail& table, const Domain& d, const Point& x) {
    return killing_density_report(table, d, x).value;
}

inline double killing_density(const LevyModel& m, const Domain& d, const Point& x) {
    return killing_density_report(RadialTail(m), d, x).value;
}

/// kappa_D tabulated against boundary distance for the radial shapes
/// (one branch for balls and intervals, inner and outer branches for
/// annuli). Boxes are evaluated directly.
class KillingTable {
  public:
    static constexpr int kPerDecade = 16;

    KillingTable(std::shared_ptr<const RadialTail> tail, const Domain& d, double floor)
        : tail_(std::move(tail)), domain_(d), floor_(floor) {
        if (!(floor > 0)) throw ConfigError("killing table: floor must be positive");
        n_ = tail_->model().n;
        if (d.dim() != n_) throw ConfigError("killing table: domain and model dimensions differ");
        if (d.shape() == Shape::BallPair) throw PreconditionError("killing table: not available for a ball pair");
        if (d.shape() == Shape::Ball || d.shape() == Shape::Annulus) {
            const double top = d.shape() == Shape::Ball ? d.radius() : 0.5 * (d.radius() - d.inner_radius());
            build(outer_, top, +1);
            if (d.shape() == Shape::Annulus) build(inner_, top, -1);
        }
    }

    double operator()(const Point& x) const {
        const auto tl = [&](double s) { return tail_->value(s); };
        switch (domain_.shape()) {
            case Shape::Interval:
                return tl(x[0] - domain_.lo()[0]) + tl(domain_.hi()[0] - x[0]);
            case Shape::Box:
                return killing_density_with(tl, n_, domain_, x, 0.0, 1e-6).value;
            case Shape::Ball:
                return lookup(outer_, domain_.radius() - distance(x, domain_.center()));
            case Shape::Annulus: {
                const double r = distance(x, domain_.center());
                const double d_in = r - domain_.inner_radius(), d_out = domain_.radius() - r;
                return d_in < d_out ? lookup(inner_, d_in) : lookup(outer_, d_out);
            }
            case Shape::BallPair:
                break;
        }
        return 0.0;
    }

  private:
    // log kappa as a cubic spline in log delta; linear continuation below
    // the floor, where kappa follows its boundary power law.
    struct Branch {
        double u0 = 0, h = 1, u1 = 0;
        double slope0 = 0, v0 = 0;
        boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
    };
    std::shared_ptr<const RadialTail> tail_;
    Domain domain_;
    double floor_;
    int n_ = 2;
    Branch outer_, inner_;

    // sign +1: points at distance delta inside the outer sphere; -1: outside the inner one.
    void build(Branch& b, double top, int sign) {
        const double lo = std::log(floor_), hi = std::log(top);
        const int steps = std::max(4, static_cast<int>(std::ceil((hi - lo) / std::log(10.0) * kPerDecade)));
        b.u0 = lo;
        b.u1 = hi;
        b.h = (hi - lo) / steps;
        std::vector<double> logk(steps + 1);
        const auto tl = [&](double s) { return tail_->value(s); };
        const Point axis = Point::axis(n_, 0);
        auto logk_at = [&](double u) {
            const double delta = std::exp(u);
            const double rad = sign > 0 ? domain_.radius() - delta : domain_.inner_radius() + delta;
            const Point x = domain_.center() + axis * std::max(rad, 0.0);
            return std::log(killing_density_with(tl, n_, domain_, x, 0.0, 1e-9).value);
        };
        for (int k = 0; k <= steps; ++k) logk[k] = logk_at(lo + k * b.h);
        // endpoint slopes by short one-sided differences; the spline's own
        // estimates are too crude near the deep end
        const double eta = 1e-4;
        b.v0 = logk[0];
        b.slope0 = (logk_at(lo + eta) - logk[0]) / eta;
        const double slope1 = (logk[steps] - logk_at(hi - eta)) / eta;
        b.spline = boost::math::interpolators::cardinal_cubic_b_spline<double>(logk.begin(), logk.end(), lo, b.h,
                                                                               b.slope0, slope1);
    }

    double lookup(const Branch& b, double delta) const {
        const double u = std::log(delta);
        if (u <= b.u0) return std::exp(b.v0 + b.slope0 * (u - b.u0));
        return std::exp(b.spline(std::min(u, b.u1)));
    }
};

}  // namespace censored
