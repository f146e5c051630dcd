#pragma once

// Inequality sweeps (3G, generalized 3G, Harnack, Carleson, the gauge
// integral bound) and the boundary-regime classifier with its Monte Carlo
// counterpart. Sweeps are templates over a Green provider: a callable
// (x, y) -> Estimate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "censored/bernstein.hpp"
#include "censored/classical.hpp"
#include "censored/errors.hpp"
#include "censored/geometry.hpp"
#include "censored/kernels.hpp"
#include "censored/pathsim.hpp"
#include "censored/potential.hpp"
#include "censored/stats.hpp"

namespace censored {

struct Witness {
    std::vector<Point> points;
    double ratio = 0;
};

struct TracePoint {
    double scale;  // sampling margin, ball radius r, or r0
    double sup;
    std::uint64_t n;
};

struct InequalityReport {
    std::string name;
    std::uint64_t n_samples = 0;
    std::uint64_t skipped = 0;
    double sup = 0, p99 = 0, p90 = 0, median = 0;
    std::vector<Witness> worst_witnesses;
    double fitted_constant = 0;
    std::vector<TracePoint> refinement_trace;
    double ceiling = std::numeric_limits<double>::infinity();
    bool pass = false;
    std::map<std::string, double> extra;
    std::vector<double> ratios;  // per-sample, in sampling order

    /// Largest sup(k+1)/sup(k) along the trace.
    double max_growth() const {
        double g = 0;
        for (std::size_t k = 1; k < refinement_trace.size(); ++k)
            g = std::max(g, refinement_trace[k].sup / refinement_trace[k - 1].sup);
        return g;
    }
};

namespace detail {

inline constexpr std::size_t kWitnesses = 5;

inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return 0;
    const double pos = q * (v.size() - 1);
    const auto k = static_cast<std::size_t>(pos);
    return k + 1 < v.size() ? v[k] + (pos - k) * (v[k + 1] - v[k]) : v[k];
}

/// Fill the summary statistics from ratios and the matching witnesses.
inline void summarize(InequalityReport& r, const std::vector<Witness>& w) {
    std::vector<double> s = r.ratios;
    std::sort(s.begin(), s.end());
    r.n_samples = s.size();
    r.sup = s.empty() ? 0 : s.back();
    r.p99 = quantile_sorted(s, 0.99);
    r.p90 = quantile_sorted(s, 0.90);
    r.median = quantile_sorted(s, 0.5);
    r.fitted_constant = r.sup;
    std::vector<Witness> top = w;
    const std::size_t k = std::min(kWitnesses, top.size());
    std::partial_sort(top.begin(), top.begin() + k, top.end(),
                      [](const Witness& a, const Witness& b) { return a.ratio > b.ratio; });
    top.resize(k);
    r.worst_witnesses = top;
}

/// Bounded and not exploding: finite sup, growth < 2 per refinement step,
/// below the ceiling.
inline bool bounded_under_refinement(const InequalityReport& r) {
    if (!std::isfinite(r.sup) || r.n_samples == 0) return false;
    if (r.max_growth() >= 2.0) return false;
    return r.sup <= r.ceiling;
}

/// Interior point at depth >= margin; half the draws are pushed into the
/// layer [margin, 2 margin] so refinement actually probes the boundary.
inline Point sample_stressed(const Domain& d, double margin, Rng& rng) {
    if (uniform01(rng) < 0.5) return d.sample_interior(rng, margin);
    for (int tries = 0; tries < 100000; ++tries) {
        const Point x = d.sample_interior(rng, margin);
        if (d.dist_to_boundary(x) <= 2 * margin) return x;
    }
    return d.sample_interior(rng, margin);
}

inline double scale_ratio(const BernsteinProfile& p, int n, double a, double b, double c) {
    // Phi(a) Phi(b) / Phi(c) * c^n / (a^n b^n)
    return big_phi(p, a) * big_phi(p, b) / big_phi(p, c) * std::pow(c / (a * b), n);
}

inline std::uint64_t tag(const char* s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ULL;
    return h;
}

}  // namespace detail

inline std::vector<double> halving_margins(double first, int halvings) {
    std::vector<double> m{first};
    for (int k = 0; k < halvings; ++k) m.push_back(m.back() / 2);
    return m;
}

// ---------------------------------------------------------------------------
// 3G

/// G(x,y) G(y,z) / G(x,z) divided by its scale-function bound; NaN when a
/// Green value is indeterminate.
template <class Green>
double three_g_ratio(const LevyModel& m, const Green& G, const Point& x, const Point& y, const Point& z) {
    const Estimate gxy = G(x, y), gyz = G(y, z), gxz = G(x, z);
    for (const Estimate* e : {&gxy, &gyz, &gxz})
        if (!(e->value > 0) || e->indeterminate()) return std::numeric_limits<double>::quiet_NaN();
    const double lhs = gxy.value * gyz.value / gxz.value;
    return lhs / detail::scale_ratio(m.profile, m.n, distance(x, y), distance(y, z), distance(x, z));
}

template <class Green>
InequalityReport check_3g(const LevyModel& m, const Domain& B, const Green& G, std::size_t n_triples,
                          const std::vector<double>& margins, std::uint64_t seed,
                          double ceiling = std::numeric_limits<double>::infinity()) {
    if (m.n < 2) throw PreconditionError("check_3g: needs n >= 2");
    if (B.dim() != m.n) throw PreconditionError("check_3g: dimension mismatch");
    InequalityReport r;
    r.name = "threeg";
    r.ceiling = ceiling;
    std::vector<Witness> w;
    for (std::size_t k = 0; k < margins.size(); ++k) {
        Rng rng = make_rng(seed, detail::tag("threeg"), k);
        double sup = 0;
        std::uint64_t used = 0;
        for (std::size_t i = 0; i < n_triples; ++i) {
            const Point x = detail::sample_stressed(B, margins[k], rng);
            const Point y = detail::sample_stressed(B, margins[k], rng);
            const Point z = detail::sample_stressed(B, margins[k], rng);
            if (!(distance(x, y) > 0 && distance(y, z) > 0 && distance(x, z) > 0)) {
                ++r.skipped;
                continue;
            }
            const double q = three_g_ratio(m, G, x, y, z);
            if (!std::isfinite(q)) {
                ++r.skipped;
                continue;
            }
            r.ratios.push_back(q);
            w.push_back({{x, y, z}, q});
            sup = std::max(sup, q);
            ++used;
        }
        r.refinement_trace.push_back({margins[k], sup, used});
    }
    detail::summarize(r, w);
    r.pass = detail::bounded_under_refinement(r);
    return r;
}

// ---------------------------------------------------------------------------
// Generalized 3G

namespace detail {

struct Quad {
    Point x, y, z, w;
    double base;    // G(x,y)G(z,w)/G(x,w) / H
    double log_ab;  // log of the product of the two bracket factors
};

inline double quad_ratio(const Quad& q, double beta) { return q.base * std::exp(-beta * q.log_ab); }

}  // namespace detail

/// Ratio of G(x,y)G(z,w)/G(x,w) to H(x,y,z,w) and the log of the bracket
/// product ((m/|x-y|) v 1)((m/|z-w|) v 1), m = |x-w| ^ |y-z|.
template <class Green>
std::pair<double, double> generalized_3g_parts(const LevyModel& m, const Green& G, const Point& x, const Point& y,
                                               const Point& z, const Point& w) {
    const Estimate gxy = G(x, y), gzw = G(z, w), gxw = G(x, w);
    for (const Estimate* e : {&gxy, &gzw, &gxw})
        if (!(e->value > 0) || e->indeterminate()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    const double dxy = distance(x, y), dzw = distance(z, w), dxw = distance(x, w), dyz = distance(y, z);
    const double H = detail::scale_ratio(m.profile, m.n, dxy, dzw, dxw);
    const double mm = std::min(dxw, dyz);
    const double log_ab = std::log(std::max(mm / dxy, 1.0)) + std::log(std::max(mm / dzw, 1.0));
    return {gxy.value * gzw.value / gxw.value / H, log_ab};
}

/// beta-hat is the smallest exponent on a 0.01 grid over [0, 2 delta2 + 1]
/// whose pooled sup stays under `ceiling`; +inf when none does. The trace
/// reports the sup at beta-hat per margin.
template <class Green>
InequalityReport check_generalized_3g(const LevyModel& m, const Domain& B, const Green& G, std::size_t n_quads,
                                      const std::vector<double>& margins, std::uint64_t seed, double ceiling) {
    if (m.n < 2) throw PreconditionError("check_generalized_3g: needs n >= 2");
    const ScalingEstimate se = estimate_scaling_exponents(m.profile);
    const double two_d2 = 2 * se.delta2;
    InequalityReport r;
    r.name = "gen-threeg";
    r.ceiling = ceiling;
    std::vector<std::vector<detail::Quad>> levels(margins.size());
    for (std::size_t k = 0; k < margins.size(); ++k) {
        Rng rng = make_rng(seed, detail::tag("gen-threeg"), k);
        for (std::size_t i = 0; i < n_quads; ++i) {
            detail::Quad q;
            q.x = detail::sample_stressed(B, margins[k], rng);
            q.y = detail::sample_stressed(B, margins[k], rng);
            q.z = detail::sample_stressed(B, margins[k], rng);
            q.w = detail::sample_stressed(B, margins[k], rng);
            if (!(distance(q.x, q.y) > 0 && distance(q.z, q.w) > 0 && distance(q.x, q.w) > 0)) {
                ++r.skipped;
                continue;
            }
            const auto [base, lab] = generalized_3g_parts(m, G, q.x, q.y, q.z, q.w);
            if (!std::isfinite(base)) {
                ++r.skipped;
                continue;
            }
            q.base = base;
            q.log_ab = lab;
            levels[k].push_back(q);
        }
    }
    auto pooled_sup = [&](double beta) {
        double s = 0;
        for (const auto& lv : levels)
            for (const auto& q : lv) s = std::max(s, detail::quad_ratio(q, beta));
        return s;
    };
    double beta_hat = std::numeric_limits<double>::infinity();
    const int steps = static_cast<int>(std::ceil((two_d2 + 1.0) / 0.01));
    for (int i = 0; i <= steps; ++i) {
        const double b = 0.01 * i;
        if (pooled_sup(b) <= ceiling) {
            beta_hat = b;
            break;
        }
    }
    const double beta_eval = std::isfinite(beta_hat) ? beta_hat : two_d2;
    std::vector<Witness> w;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        double sup = 0;
        for (const auto& q : levels[k]) {
            const double v = detail::quad_ratio(q, beta_eval);
            r.ratios.push_back(v);
            w.push_back({{q.x, q.y, q.z, q.w}, v});
            sup = std::max(sup, v);
        }
        r.refinement_trace.push_back({margins[k], sup, levels[k].size()});
    }
    detail::summarize(r, w);
    r.extra["beta_hat"] = beta_hat;
    r.extra["two_delta2"] = two_d2;
    r.extra["sup_at_beta0"] = pooled_sup(0.0);
    r.extra["sup_at_two_delta2"] = pooled_sup(two_d2);
    r.pass = std::isfinite(beta_hat) && beta_hat <= two_d2 + 0.05 && detail::bounded_under_refinement(r);
    return r;
}

// ---------------------------------------------------------------------------
// Harnack

/// Nonnegative exterior data at scale r around x1: half-spaces beyond 2r,
/// annular sectors between 3r and 6r, everything beyond 6r, and a bump.
/// Hit probabilities stay in the percent range so ratios are resolvable.
inline std::vector<TestFunction> harnack_data(const Point& x1, double r) {
    std::vector<TestFunction> out;
    const int n = x1.dim();
    const int dirs = n == 1 ? 2 : 4;
    for (int k = 0; k < dirs; ++k) {
        Point e = Point::zero(n);
        if (n == 1) {
            e[0] = k == 0 ? 1 : -1;
        } else {
            e[0] = std::cos(0.5 * M_PI * k);
            e[1] = std::sin(0.5 * M_PI * k);
        }
        out.push_back([x1, e, r](const Point& z) { return (z - x1).dot(e) > 2 * r ? 1.0 : 0.0; });
        out.push_back([x1, e, r, dirs](const Point& z) {
            const Point d = z - x1;
            const double len = d.norm();
            return len > 3 * r && len < 6 * r && d.dot(e) > len * std::cos(M_PI / dirs) ? 1.0 : 0.0;
        });
    }
    out.push_back([x1, r](const Point& z) { return distance(z, x1) > 6 * r ? 1.0 : 0.0; });
    out.push_back([x1, r](const Point& z) { return std::exp(-(z - x1).norm2() / (16 * r * r)); });
    return out;
}

struct HarnackSpec {
    std::vector<double> scales;
    double L = 2.0;
    std::size_t n_pairs = 20;
    std::uint64_t n_paths = 4000;
    double max_rel_error = 0.1;  // estimates noisier than this are skipped
    std::uint64_t seed = 1;
};

namespace detail {

template <class Eval>
InequalityReport harnack_sweep(const std::string& name, const Point& x1, const HarnackSpec& hs, Eval&& eval) {
    if (hs.scales.empty()) throw PreconditionError("harnack: need at least one scale");
    if (!(hs.L > 0)) throw PreconditionError("harnack: L must be positive");
    InequalityReport r;
    r.name = name;
    std::vector<Witness> w;
    bool constant_exact = true;
    const int n = x1.dim();
    for (std::size_t k = 0; k < hs.scales.size(); ++k) {
        const double rr = hs.scales[k];
        if (!(rr > 0 && rr < 1)) throw PreconditionError("harnack: scales must lie in (0,1)");
        // same relative configurations and path streams at every scale
        Rng rng = make_rng(hs.seed, tag(name.c_str()), 0);
        auto data = harnack_data(x1, rr);
        data.push_back([](const Point&) { return 1.0; });
        double sup = 0;
        std::uint64_t used = 0;
        for (std::size_t i = 0; i < hs.n_pairs; ++i) {
            const Point x2 = x1 + random_direction(n, rng) * (hs.L * rr * uniform01(rng));
            const Domain U = Domain::ball_pair(x1, x2, rr);
            const auto h1 = eval(U, x1, data, 2 * i);
            const auto h2 = eval(U, x2, data, 2 * i + 1);
            const std::size_t last = data.size() - 1;
            constant_exact = constant_exact && h1[last].value == 1.0 && h2[last].value == 1.0;
            for (std::size_t j = 0; j < last; ++j) {
                const Estimate &a = h1[j], &b = h2[j];
                if (!(a.value > 0 && b.value > 0) || a.stderr_ > hs.max_rel_error * a.value ||
                    b.stderr_ > hs.max_rel_error * b.value) {
                    ++r.skipped;
                    continue;
                }
                const double q = std::max(a.value / b.value, b.value / a.value);
                r.ratios.push_back(q);
                w.push_back({{x1, x2}, q});
                sup = std::max(sup, q);
                ++used;
            }
        }
        r.refinement_trace.push_back({rr, sup, used});
    }
    summarize(r, w);
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto& t : r.refinement_trace) lo = std::min(lo, t.sup), hi = std::max(hi, t.sup);
    r.extra["scale_spread"] = hi / lo;
    r.extra["constant_data_exact"] = constant_exact;
    r.pass = constant_exact && std::isfinite(r.sup) && hi / lo < 2.0 && r.sup <= r.ceiling;
    return r;
}

}  // namespace detail

/// Harnack constants of X on B(x1,r) u B(x2,r), |x1-x2| < L r, per scale.
/// The jump cutoff follows the scale unless set explicitly.
inline InequalityReport check_harnack_X(const Simulator& sim, const Point& x1, const HarnackSpec& hs,
                                        const SimConfig& cfg) {
    return detail::harnack_sweep("harnack-x", x1, hs, [&](const Domain& U, const Point& x, const auto& data,
                                                           std::uint64_t stream) {
        SimConfig c = cfg;
        c.seed = hs.seed;
        return harmonic_eval_X(sim, U, data, x, hs.n_paths, c, stream);
    });
}

/// Same for the censored process on D (data vanish off D).
inline InequalityReport check_harnack_Y(const Simulator& sim, const Domain& D, const Point& x1, const HarnackSpec& hs,
                                        const SimConfig& cfg) {
    for (double r : hs.scales)
        if (D.dist_to_boundary(x1) <= (hs.L + 1) * r)
            throw PreconditionError("harnack-y: B(x1,r) u B(x2,r) must lie inside D for every scale");
    return detail::harnack_sweep("harnack-y", x1, hs, [&](const Domain& U, const Point& x, const auto& data,
                                                           std::uint64_t stream) {
        SimConfig c = cfg;
        c.seed = hs.seed;
        if (c.eps_cut == 0) c.eps_cut = 1e-3 * U.diam();
        return harmonic_eval_Y(sim, D, U, data, x, hs.n_paths, c, stream);
    });
}

// ---------------------------------------------------------------------------
// Carleson

/// sup over x in B n B(z, r0) of G(x,y)/G(A_r0(z), y), for r0 and its
/// halvings.
template <class Green>
InequalityReport check_carleson(const Domain& B, const Green& G, const Point& z, double r0, const Point& y,
                                std::size_t n_points, int halvings, std::uint64_t seed) {
    const double kr = B.fat_kappa() * B.fat_R();
    if (!(r0 > 0 && r0 < kr / 4)) throw PreconditionError("carleson: need 0 < r0 < kappa R / 4");
    if (!B.contains(y) || distance(y, z) <= 3 * r0) throw PreconditionError("carleson: y must lie in B outside B(z, 3 r0)");
    if (std::abs(B.signed_depth(z)) > 1e-9 * B.diam()) throw PreconditionError("carleson: z must lie on the boundary");
    InequalityReport r;
    r.name = "carleson";
    std::vector<Witness> w;
    double rr = r0;
    for (int k = 0; k <= halvings; ++k, rr /= 2) {
        Rng rng = make_rng(seed, detail::tag("carleson"), k);
        const Point A = B.fat_point(z, rr);
        const Estimate ga = G(A, y);
        double sup = 0;
        std::uint64_t used = 0;
        for (std::size_t i = 0; i < n_points; ++i) {
            Point x;
            bool ok = false;
            for (int t = 0; t < 10000 && !ok; ++t) {
                x = z + random_direction(B.dim(), rng) * (rr * std::pow(uniform01(rng), 1.0 / B.dim()));
                ok = B.contains(x);
            }
            if (!ok) {
                ++r.skipped;
                continue;
            }
            const Estimate gx = G(x, y);
            if (gx.indeterminate() || ga.indeterminate()) {
                ++r.skipped;
                continue;
            }
            const double q = gx.value / ga.value;
            r.ratios.push_back(q);
            w.push_back({{x, y}, q});
            sup = std::max(sup, q);
            ++used;
        }
        r.refinement_trace.push_back({rr, sup, used});
    }
    detail::summarize(r, w);
    r.pass = detail::bounded_under_refinement(r);
    return r;
}

// ---------------------------------------------------------------------------
// Gauge integral bound

/// int_B G_B(v,y) G_B(y,w) / G_B(v,w) kappa_D(y) dy for B = B(xc, r1 r) in
/// the plane, with closed-form stable Green values. The ball is split by
/// the bisector of v and w; each half is integrated in polar coordinates
/// about its own singular point.
inline double gauge_integral(const LevyModel& m, const std::function<double(const Point&)>& kappa, const Point& xc,
                               double rho, const Point& v, const Point& w, double tol = 1e-7) {
    if (m.n != 2) throw PreconditionError("gauge_integral: implemented for n = 2");
    if (!(distance(v, w) > 0)) throw PreconditionError("gauge_integral: need v != w");
    const Domain B = Domain::ball(xc, rho);
    if (!B.contains(v) || !B.contains(w)) throw PreconditionError("gauge_integral: v and w must lie in B");
    const double gvw = classical::green(m, B, v, w);
    auto F = [&](const Point& y) {
        // s -> 0 can round y onto v or w; the weight s kills that point anyway
        if (!B.contains(y) || distance(y, v) < 1e-13 * rho || distance(y, w) < 1e-13 * rho) return 0.0;
        return classical::green(m, B, v, y) * classical::green(m, B, y, w) / gvw * kappa(y);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    boost::math::quadrature::tanh_sinh<double> ts;
    double total = 0, err_total = 0;
    for (int side = 0; side < 2; ++side) {
        const Point& p = side ? w : v;
        const Point& q = side ? v : w;
        const Point pq = q - p;
        const double d2 = pq.norm2();
        auto s_max = [&](double th) {
            const Point e{std::cos(th), std::sin(th)};
            const Point pc = p - xc;
            const double b = pc.dot(e), c = pc.norm2() - rho * rho;
            double s = -b + std::sqrt(std::max(0.0, b * b - c));
            const double proj = pq.dot(e);
            if (proj > 0) s = std::min(s, d2 / (2 * proj));
            return s;
        };
        auto inner = [&](double th) {
            const double sm = s_max(th);
            if (!(sm > 0)) return 0.0;
            const Point e{std::cos(th), std::sin(th)};
            auto g = [&](double s) { return s > 0 ? s * F(p + e * s) : 0.0; };
            return ts.integrate(g, 0.0, sm, 1e-9);
        };
        // angular breakpoints where the bisector meets the circle
        std::vector<double> brk{0.0, 2 * M_PI};
        const Point mid = (p + q) * 0.5;
        const Point u = pq * (1.0 / std::sqrt(d2));
        const Point perp{-u[1], u[0]};
        const Point mc = mid - xc;
        const double b = mc.dot(perp), c = mc.norm2() - rho * rho;
        if (b * b - c > 0) {
            for (double t : {-b - std::sqrt(b * b - c), -b + std::sqrt(b * b - c)}) {
                const Point y = mid + perp * t - p;
                double th = std::atan2(y[1], y[0]);
                if (th < 0) th += 2 * M_PI;
                brk.push_back(th);
            }
        }
        double th_q = std::atan2(pq[1], pq[0]);
        if (th_q < 0) th_q += 2 * M_PI;
        brk.push_back(th_q);
        std::sort(brk.begin(), brk.end());
        for (std::size_t k = 0; k + 1 < brk.size(); ++k) {
            if (!(brk[k + 1] > brk[k])) continue;
            double err = 0;
            total += GK::integrate(inner, brk[k], brk[k + 1], 10, tol, &err);
            err_total += err;
        }
    }
    if (!(err_total <= std::max(1e-6, 1e-4 * total)))
        throw NumericalError("gauge_integral: quadrature did not converge, residual " + std::to_string(err_total));
    return total;
}

struct GaugeProbe {
    Point xc, v, w;
};

/// Fixed probe configurations inside B(xc, rho): centres at the domain's
/// centre and as close to its boundary as B(xc, r) in D allows; v, w near
/// the rim and across the ball.
inline std::vector<GaugeProbe> gauge_integral_probes(const Domain& D, double r) {
    if (D.dim() != 2) throw PreconditionError("gauge_integral: implemented for n = 2");
    const Point c = D.incenter();
    const double reach = std::max(0.0, D.inradius() - r) * (1 - 1e-9);
    std::vector<GaugeProbe> out;
    for (const Point& xc : {c, c + Point{reach, 0}}) {
        for (const auto& [a, b] : std::vector<std::pair<Point, Point>>{
                 {{0.9, 0}, {-0.9, 0}}, {{0.9, 0}, {0, 0.9}}, {{0.95, 0}, {0.9, 0.2}}, {{0.5, 0}, {-0.5, 0}},
                 {{0.1, 0}, {-0.1, 0}}, {{0.95, 0}, {0.2, 0}}, {{-0.9, 0}, {0, -0.9}}, {{0.6, 0.6}, {-0.6, 0.6}}}) {
            out.push_back({xc, a, b});  // v, w in units of rho, relative to xc
        }
    }
    return out;
}

/// max over probes of the gauge integral with B = B(xc, r1 r).
inline double gauge_integral_max(const LevyModel& m, const Domain& D, const KillingTable& kt, double r, double r1,
                          const std::vector<GaugeProbe>& probes) {
    const double rho = r1 * r;
    auto kappa = [&](const Point& y) { return kt(y); };
    double best = 0;
    for (const auto& p : probes)
        best = std::max(best, gauge_integral(m, kappa, p.xc, rho, p.xc + p.v * rho, p.xc + p.w * rho));
    return best;
}

/// Largest r1 (on a log bisection) with gauge_integral_max <= target, scaled by
/// `safety`.
inline double default_r1(const LevyModel& m, const Domain& D, const KillingTable& kt, double r, double target = 0.5,
                         double safety = 0.5) {
    const auto probes = gauge_integral_probes(D, r);
    double lo = 1e-3, hi = 1.0;
    if (gauge_integral_max(m, D, kt, r, lo, probes) > target) throw NumericalError("gauge_integral: bound fails even at r1 = 1e-3");
    if (gauge_integral_max(m, D, kt, r, hi * (1 - 1e-9), probes) <= target) return safety * hi;
    for (int it = 0; it < 30; ++it) {
        const double mid = std::sqrt(lo * hi);
        (gauge_integral_max(m, D, kt, r, mid, probes) <= target ? lo : hi) = mid;
        if (hi / lo < 1.02) break;
    }
    return safety * lo;
}

// ---------------------------------------------------------------------------
// Boundary regime

enum class Regime { Conservative, HitsBoundaryPositiveProb, HitsBoundaryAS, TransientHitsAS_1d, Inconclusive };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::Conservative: return "Conservative";
        case Regime::HitsBoundaryPositiveProb: return "HitsBoundaryPositiveProb";
        case Regime::HitsBoundaryAS: return "HitsBoundaryAS";
        case Regime::TransientHitsAS_1d: return "TransientHitsAS_1d";
        case Regime::Inconclusive: return "Inconclusive";
    }
    return "?";
}

struct RegimeInputs {
    int n = 2;
    double boundary_dim = 1;     // Hausdorff dimension d of the boundary
    bool finite_volume = true;
    bool log_gauge_finite = false;  // user assertion for the delta2 = n/2 = 1/2 case
};

struct RegimePrediction {
    RegimeInputs inputs;
    ScalingEstimate scaling;
    Regime verdict = Regime::Inconclusive;
    std::string applied_clause;
    std::string gauge;  // "power:<exponent>" or "log"
};

/// Decide which boundary clause applies. Comparisons within `tol` of a
/// threshold are treated as undecidable.
inline RegimePrediction classify_boundary_regime(const ScalingEstimate& s, const RegimeInputs& in, double tol = 1e-3) {
    if (!s.valid()) throw PreconditionError("classify_boundary_regime: scaling estimate is not valid");
    if (in.n < 1) throw PreconditionError("classify_boundary_regime: n must be positive");
    RegimePrediction p;
    p.inputs = in;
    p.scaling = s;
    const double n = in.n, d = in.boundary_dim;
    const bool log_case = in.n == 1 && std::abs(s.delta2 - 0.5) <= tol;
    p.gauge = log_case ? "log" : "power:" + std::to_string(n - 2 * s.delta2);

    // (i): gauge measure of the boundary finite
    if (log_case) {
        if (in.log_gauge_finite) {
            p.verdict = Regime::Conservative;
            p.applied_clause = "i(log gauge)";
            return p;
        }
    } else if (s.delta2 <= n / 2 + tol && d < n - 2 * s.delta2 - tol) {
        p.verdict = Regime::Conservative;
        p.applied_clause = "i";
        return p;
    }
    // (ii): boundary of dimension above n - 2 delta1 >= 0
    if (n - 2 * s.delta1 >= -tol && d > n - 2 * s.delta1 + tol) {
        p.verdict = in.finite_volume ? Regime::HitsBoundaryAS : Regime::HitsBoundaryPositiveProb;
        p.applied_clause = "ii";
        return p;
    }
    // (iii): one dimension
    if (in.n == 1 && s.delta3 >= 0.5 - tol && s.delta1 > 0.5 + tol) {
        p.verdict = Regime::TransientHitsAS_1d;
        p.applied_clause = "iii";
        return p;
    }
    p.verdict = Regime::Inconclusive;
    p.applied_clause = "none";
    return p;
}

inline RegimePrediction classify_boundary_regime(const LevyModel& m, const RegimeInputs& in) {
    if (in.n != m.n) throw PreconditionError("classify_boundary_regime: dimension mismatch");
    return classify_boundary_regime(estimate_scaling_exponents(m.profile), in);
}

/// Boundary dimension of the supported smooth shapes.
inline RegimeInputs regime_inputs(const Domain& D) {
    RegimeInputs in;
    in.n = D.dim();
    in.boundary_dim = D.dim() - 1;
    in.finite_volume = true;
    return in;
}

struct BoundaryCurvePoint {
    double horizon;
    std::uint64_t approached;
    double fraction, ci_lo, ci_hi;
};

struct BoundaryExperiment {
    RegimePrediction prediction;
    std::vector<BoundaryCurvePoint> curve;
    std::uint64_t n_paths = 0;
    std::uint64_t event_cap_hits = 0;
    bool monotone = true;
    bool consistent = false;
};

/// Boundary-approach fractions of the censored process at each horizon.
/// One path per index runs to the largest horizon; the approach time is
/// compared with every horizon, so the curve is monotone by construction.
inline BoundaryExperiment run_boundary_experiment(const Simulator& sim, const Domain& D, const Point& x0,
                                                  std::vector<double> horizons, std::uint64_t n_paths,
                                                  const SimConfig& cfg, std::uint64_t stream = 0) {
    if (horizons.empty()) throw PreconditionError("boundary experiment: need horizons");
    std::sort(horizons.begin(), horizons.end());
    SimConfig c = cfg;
    c.horizon = horizons.back();
    c = c.resolved(D);
    struct Part {
        std::vector<std::uint64_t> hits;
        std::uint64_t capped = 0;
    };
    auto fn = [&](std::uint64_t lo, std::uint64_t hi) {
        Part p;
        p.hits.assign(horizons.size(), 0);
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(c.seed, stream, i * c.path_index_stride);
            const PathRecord r = run_censored_inw(sim, D, x0, c, rng);
            if (r.status == PathStatus::EventCapHit) ++p.capped;
            if (r.status != PathStatus::BoundaryApproach) continue;
            for (std::size_t k = 0; k < horizons.size(); ++k)
                if (r.end_time <= horizons[k]) ++p.hits[k];
        }
        return p;
    };
    Part init;
    init.hits.assign(horizons.size(), 0);
    const Part t = block_reduce<Part>(
        n_paths, kPathBlock, c.workers, fn,
        [](Part& a, const Part& b) {
            for (std::size_t k = 0; k < a.hits.size(); ++k) a.hits[k] += b.hits[k];
            a.capped += b.capped;
        },
        init);
    BoundaryExperiment e;
    e.prediction = classify_boundary_regime(sim.model(), regime_inputs(D));
    e.n_paths = n_paths;
    e.event_cap_hits = t.capped;
    for (std::size_t k = 0; k < horizons.size(); ++k) {
        const auto [lo, hi] = wilson_interval(t.hits[k], n_paths);
        e.curve.push_back({horizons[k], t.hits[k], double(t.hits[k]) / n_paths, lo, hi});
        if (k > 0 && e.curve[k].fraction < e.curve[k - 1].fraction) e.monotone = false;
    }
    const double last = e.curve.back().fraction;
    switch (e.prediction.verdict) {
        case Regime::Conservative: {
            bool ok = true;
            for (const auto& p : e.curve) ok = ok && p.fraction <= 0.01;
            e.consistent = ok;
            break;
        }
        case Regime::HitsBoundaryAS:
        case Regime::TransientHitsAS_1d:
            e.consistent = e.monotone && last >= 0.5;
            break;
        case Regime::HitsBoundaryPositiveProb:
            e.consistent = e.monotone && last > 0;
            break;
        case Regime::Inconclusive:
            e.consistent = true;
            break;
    }
    return e;
}

}  // namespace censored
