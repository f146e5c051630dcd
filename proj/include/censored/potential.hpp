#pragma once

// Monte Carlo potential theory on top of the path engine: Green functions
// as occupation densities, exit laws, harmonic extensions, the capped
// g-function and the conditional gauge.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "censored/classical.hpp"
#include "censored/errors.hpp"
#include "censored/geometry.hpp"
#include "censored/kernels.hpp"
#include "censored/pathsim.hpp"
#include "censored/stats.hpp"

namespace censored {

namespace detail {

/// Time spent in B(y, rho), split at the first suppressed jump.
struct OccupationObserver {
    Point y;
    double rho2;
    double total = 0, before = 0;
    bool suppressed = false;

    OccupationObserver(const Point& c, double rho) : y(c), rho2(rho * rho) {}
    void sojourn(const Point& x, double, double dt) {
        if ((x - y).norm2() < rho2) {
            total += dt;
            if (!suppressed) before += dt;
        }
    }
    void jump(double, const Point&, const Point&, bool s) { suppressed = suppressed || s; }
};

inline void check_green_pair(const Domain& B, const Point& x, const Point& y, double rho) {
    const double d = distance(x, y);
    if (!(d > 0)) throw PreconditionError("green: x and y must differ");
    if (!B.contains(x) || !B.contains(y)) throw PreconditionError("green: x and y must lie inside B");
    if (!(rho > 0) || rho > 0.25 * d * (1 + 1e-12))
        throw PreconditionError("green: need 0 < rho <= |x-y|/4, got rho=" + std::to_string(rho));
    if (rho > B.dist_to_boundary(y)) throw PreconditionError("green: B(y, rho) must lie inside B");
}

inline void count_status(Estimate& e, std::uint64_t unfinished) { e.diagnostics["unfinished"] = unfinished; }

}  // namespace detail

/// rho-averaged G_B(x, y): expected time in B(y, rho) before leaving B,
/// divided by |B(y, rho)|.
inline Estimate estimate_green_pair(const Simulator& sim, const Domain& B, const Point& x, const Point& y, double rho,
                                    std::uint64_t n_paths, const SimConfig& cfg, std::uint64_t stream = 0) {
    detail::check_green_pair(B, x, y, rho);
    const SimConfig c = cfg.resolved(B);
    struct Part {
        Moments m;
        std::uint64_t unfinished = 0;
    };
    auto fn = [&](std::uint64_t lo, std::uint64_t hi) {
        Part p;
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(c.seed, stream, i * c.path_index_stride);
            detail::OccupationObserver obs(y, rho);
            const PathRecord r = run_killed(sim, B, x, c, rng, obs);
            if (!r.exited()) ++p.unfinished;
            p.m.add(obs.total);
        }
        return p;
    };
    const Part t = block_reduce<Part>(n_paths, kPathBlock, c.workers, fn, [](Part& a, const Part& b) {
        a.m.merge(b.m);
        a.unfinished += b.unfinished;
    });
    Estimate e = t.m.estimate_x(1.0 / ball_volume(B.dim(), rho));
    detail::count_status(e, t.unfinished);
    return e;
}

/// Same occupation estimator for the censored process on D stopped on leaving B.
inline Estimate estimate_green_censored(const Simulator& sim, const Domain& D, const Domain& B, const Point& x,
                                        const Point& y, double rho, std::uint64_t n_paths, const SimConfig& cfg,
                                        std::uint64_t stream = 0) {
    detail::check_green_pair(B, x, y, rho);
    const SimConfig c = cfg.resolved(D);
    struct Part {
        Moments m;
        std::uint64_t unfinished = 0;
    };
    auto fn = [&](std::uint64_t lo, std::uint64_t hi) {
        Part p;
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(c.seed, stream, i * c.path_index_stride);
            detail::OccupationObserver obs(y, rho);
            const PathRecord r = exit_via_censored(sim, D, B, x, c, rng, obs);
            if (!r.exited()) ++p.unfinished;
            p.m.add(obs.total);
        }
        return p;
    };
    const Part t = block_reduce<Part>(n_paths, kPathBlock, c.workers, fn, [](Part& a, const Part& b) {
        a.m.merge(b.m);
        a.unfinished += b.unfinished;
    });
    Estimate e = t.m.estimate_x(1.0 / ball_volume(B.dim(), rho));
    detail::count_status(e, t.unfinished);
    return e;
}

struct GaugeEstimate {
    Estimate u;
    Estimate green_censored;
    Estimate green_killed;
    bool indeterminate = false;
};

/// u(x, y) = G^Y_B(x, y) / G_B(x, y). One censored run per path gives both:
/// the killed process is the censored one up to its first suppressed jump,
/// so the two occupations are paired and the ratio error is small.
inline GaugeEstimate estimate_gauge(const Simulator& sim, const Domain& D, const Domain& B, const Point& x,
                                    const Point& y, double rho, std::uint64_t n_paths, const SimConfig& cfg,
                                    std::uint64_t stream = 0) {
    detail::check_green_pair(B, x, y, rho);
    const SimConfig c = cfg.resolved(D);
    struct Part {
        Moments m;
        std::uint64_t unfinished = 0;
    };
    auto fn = [&](std::uint64_t lo, std::uint64_t hi) {
        Part p;
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(c.seed, stream, i * c.path_index_stride);
            detail::OccupationObserver obs(y, rho);
            const PathRecord r = exit_via_censored(sim, D, B, x, c, rng, obs);
            if (!r.exited()) ++p.unfinished;
            p.m.add(obs.total, obs.before);
        }
        return p;
    };
    const Part t = block_reduce<Part>(n_paths, kPathBlock, c.workers, fn, [](Part& a, const Part& b) {
        a.m.merge(b.m);
        a.unfinished += b.unfinished;
    });
    const double vol = ball_volume(B.dim(), rho);
    GaugeEstimate g;
    g.green_censored = t.m.estimate_x(1.0 / vol);
    g.green_killed = t.m.estimate_y(1.0 / vol);
    g.indeterminate = g.green_killed.indeterminate();
    g.u = t.m.ratio_xy();
    for (Estimate* e : {&g.u, &g.green_censored, &g.green_killed}) detail::count_status(*e, t.unfinished);
    return g;
}

// ---------------------------------------------------------------------------
// Exit laws

/// Exterior bins: shells between consecutive radii (in units of the ball
/// radius, first radius 1, last may be infinite) times equal angular
/// sectors (n = 2) or sides (n = 1).
struct ExitMesh {
    std::vector<double> radii;
    int n_angular = 1;

    std::size_t size() const { return (radii.size() - 1) * n_angular; }
    void validate(int n) const {
        if (radii.size() < 2 || radii.front() != 1.0) throw ConfigError("exit mesh: radii must start at 1");
        for (std::size_t i = 1; i < radii.size(); ++i)
            if (!(radii[i] > radii[i - 1])) throw ConfigError("exit mesh: radii must increase");
        if (n_angular < 1 || (n == 1 && n_angular > 2) || (n >= 3 && n_angular != 1))
            throw ConfigError("exit mesh: angular bins need n = 2 (or 2 sides for n = 1)");
    }
    /// Bin of a point given relative to the centre in units of the radius.
    std::ptrdiff_t bin(const Point& z) const {
        const double r = z.norm();
        const auto it = std::upper_bound(radii.begin(), radii.end(), r);
        if (it == radii.begin() || it == radii.end()) return -1;
        const auto shell = (it - radii.begin()) - 1;
        int a = 0;
        if (n_angular > 1) {
            if (z.dim() == 1) {
                a = z[0] > 0;
            } else {
                double th = std::atan2(z[1], z[0]);
                if (th < 0) th += 2 * M_PI;
                a = std::min(n_angular - 1, static_cast<int>(th / (2 * M_PI) * n_angular));
            }
        }
        return shell * n_angular + a;
    }
};

inline ExitMesh default_exit_mesh() {
    return ExitMesh{{1.0, 1.02, 1.05, 1.1, 1.2, 1.35, 1.6, 2.0, 3.0, 5.0, 10.0, std::numeric_limits<double>::infinity()}, 8};
}

struct ExitHistogram {
    ExitMesh mesh;
    std::vector<Estimate> bins;  // mass per bin over all paths
    std::uint64_t n_paths = 0;
    std::uint64_t capped = 0;    // paths that did not exit
    std::uint64_t outside_mesh = 0;

    double total() const {
        double s = 0;
        for (const auto& b : bins) s += b.value;
        return s;
    }
};

inline ExitHistogram exit_distribution(const Simulator& sim, const Domain& B, const Point& x, const ExitMesh& mesh,
                                       std::uint64_t n_paths, const SimConfig& cfg, std::uint64_t stream = 0) {
    if (B.shape() != Shape::Ball && B.shape() != Shape::Interval)
        throw PreconditionError("exit_distribution: needs a ball");
    if (!B.contains(x)) throw PreconditionError("exit_distribution: x must lie inside B");
    mesh.validate(B.dim());
    const SimConfig c = cfg.resolved(B);
    const double inv_r = 1.0 / B.radius();
    struct Part {
        std::vector<std::uint64_t> counts;
        std::uint64_t capped = 0, outside = 0;
    };
    auto fn = [&](std::uint64_t lo, std::uint64_t hi) {
        Part p;
        p.counts.assign(mesh.size(), 0);
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(c.seed, stream, i * c.path_index_stride);
            const PathRecord r = run_killed(sim, B, x, c, rng);
            if (!r.exited()) {
                ++p.capped;
                continue;
            }
            const auto k = mesh.bin((r.post_exit - B.center()) * inv_r);
            if (k < 0)
                ++p.outside;
            else
                ++p.counts[k];
        }
        return p;
    };
    Part init;
    init.counts.assign(mesh.size(), 0);
    const Part t = block_reduce<Part>(
        n_paths, kPathBlock, c.workers, fn,
        [](Part& a, const Part& b) {
            for (std::size_t k = 0; k < a.counts.size(); ++k) a.counts[k] += b.counts[k];
            a.capped += b.capped;
            a.outside += b.outside;
        },
        init);
    ExitHistogram h;
    h.mesh = mesh;
    h.n_paths = n_paths;
    h.capped = t.capped;
    h.outside_mesh = t.outside;
    for (std::uint64_t k : t.counts) {
        Estimate e;
        e.n_paths = n_paths;
        e.value = n_paths ? double(k) / n_paths : 0.0;
        e.stderr_ = n_paths ? std::sqrt(e.value * (1 - e.value) / n_paths) : 0.0;
        h.bins.push_back(e);
    }
    return h;
}

/// Exit-law bin masses of a stable ball from the closed-form Poisson kernel.
inline std::vector<double> exit_oracle(const LevyModel& m, const Domain& B, const Point& x, const ExitMesh& mesh) {
    classical::require_stable_ball(m, B);
    mesh.validate(m.n);
    const double alpha = m.profile.alpha;
    const Point u = (x - B.center()) * (1.0 / B.radius());
    std::vector<double> out;
    for (std::size_t s = 0; s + 1 < mesh.radii.size(); ++s) {
        const double r1 = mesh.radii[s], r2 = mesh.radii[s + 1];
        for (int a = 0; a < mesh.n_angular; ++a) {
            if (m.n == 2) {
                const double w = 2 * M_PI / mesh.n_angular;
                out.push_back(classical::planar_cell_mass(alpha, u, r1, r2, a * w, (a + 1) * w));
            } else if (u.norm() == 0) {
                out.push_back(classical::centred_shell_mass(alpha, r1, r2) / mesh.n_angular);
            } else {
                throw PreconditionError("exit_oracle: off-centre starts need n = 2");
            }
        }
    }
    return out;
}

inline double total_variation(const ExitHistogram& h, const std::vector<double>& p) {
    if (p.size() != h.bins.size()) throw PreconditionError("total_variation: size mismatch");
    double tv = 0, rest_p = 1, rest_q = 1;
    for (std::size_t k = 0; k < p.size(); ++k) {
        tv += std::abs(h.bins[k].value - p[k]);
        rest_p -= p[k];
        rest_q -= h.bins[k].value;
    }
    // mass outside the mesh (capped paths, oracle tails) counts as one more bin
    tv += std::abs(std::max(0.0, rest_q) - std::max(0.0, rest_p));
    return 0.5 * tv;
}

// ---------------------------------------------------------------------------
// Harmonic functions

namespace detail {

/// Shared driver: one exit per path, every data function evaluated at it.
template <class Run>
std::vector<Estimate> exit_functionals(const std::vector<TestFunction>& hs, std::uint64_t n_paths, const SimConfig& c,
                                       std::uint64_t stream, Run&& run) {
    struct Part {
        std::vector<Moments> m;
        std::uint64_t unfinished = 0;
    };
    auto fn = [&](std::uint64_t lo, std::uint64_t hi) {
        Part p;
        p.m.resize(hs.size());
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(c.seed, stream, i * c.path_index_stride);
            bool finished = true;
            const Point z = run(rng, finished);
            if (!finished) ++p.unfinished;
            for (std::size_t k = 0; k < hs.size(); ++k) p.m[k].add(hs[k](z));
        }
        return p;
    };
    Part init;
    init.m.resize(hs.size());
    const Part t = block_reduce<Part>(
        n_paths, kPathBlock, c.workers, fn,
        [](Part& a, const Part& b) {
            for (std::size_t k = 0; k < a.m.size(); ++k) a.m[k].merge(b.m[k]);
            a.unfinished += b.unfinished;
        },
        init);
    std::vector<Estimate> out;
    for (const auto& m : t.m) {
        out.push_back(m.estimate_x());
        count_status(out.back(), t.unfinished);
    }
    return out;
}

}  // namespace detail

/// E_x[h(X_{tau_B})] for each h. Paths that end without exiting contribute
/// h at the nearest boundary point.
inline std::vector<Estimate> harmonic_eval_X(const Simulator& sim, const Domain& B, const std::vector<TestFunction>& hs,
                                             const Point& x, std::uint64_t n_paths, const SimConfig& cfg,
                                             std::uint64_t stream = 0) {
    if (!B.contains(x)) throw PreconditionError("harmonic_eval_X: x must lie inside B");
    const SimConfig c = cfg.resolved(B);
    return detail::exit_functionals(hs, n_paths, c, stream, [&](Rng& rng, bool& finished) {
        const PathRecord r = run_killed(sim, B, x, c, rng);
        finished = r.exited();
        return finished ? r.post_exit : B.nearest_boundary_point(r.final_position);
    });
}

inline Estimate harmonic_eval_X(const Simulator& sim, const Domain& B, const TestFunction& h, const Point& x,
                                std::uint64_t n_paths, const SimConfig& cfg, std::uint64_t stream = 0) {
    return harmonic_eval_X(sim, B, std::vector<TestFunction>{h}, x, n_paths, cfg, stream)[0];
}

/// E_x[h(Y_{tau_B})] for the censored process on D; h is taken as 0 off D.
inline std::vector<Estimate> harmonic_eval_Y(const Simulator& sim, const Domain& D, const Domain& B,
                                             const std::vector<TestFunction>& hs, const Point& x,
                                             std::uint64_t n_paths, const SimConfig& cfg, std::uint64_t stream = 0) {
    if (!B.contains(x)) throw PreconditionError("harmonic_eval_Y: x must lie inside B");
    const SimConfig c = cfg.resolved(D);
    std::vector<TestFunction> masked;
    for (const auto& h : hs) masked.push_back([&D, h](const Point& z) { return D.contains(z) ? h(z) : 0.0; });
    return detail::exit_functionals(masked, n_paths, c, stream, [&](Rng& rng, bool& finished) {
        const PathRecord r = exit_via_censored(sim, D, B, x, c, rng);
        finished = r.exited();
        return finished ? r.post_exit : r.final_position;
    });
}

inline Estimate harmonic_eval_Y(const Simulator& sim, const Domain& D, const Domain& B, const TestFunction& h,
                                const Point& x, std::uint64_t n_paths, const SimConfig& cfg,
                                std::uint64_t stream = 0) {
    return harmonic_eval_Y(sim, D, B, std::vector<TestFunction>{h}, x, n_paths, cfg, stream)[0];
}

/// E_x[tau^Y_B]; flags "capped_over_1pct" when more than 1% of paths did not exit.
inline Estimate expected_exit_time_Y(const Simulator& sim, const Domain& D, const Domain& B, const Point& x,
                                     std::uint64_t n_paths, const SimConfig& cfg, std::uint64_t stream = 0) {
    if (!B.contains(x)) throw PreconditionError("expected_exit_time_Y: x must lie inside B");
    const SimConfig c = cfg.resolved(D);
    struct Part {
        Moments m;
        std::uint64_t unfinished = 0;
    };
    auto fn = [&](std::uint64_t lo, std::uint64_t hi) {
        Part p;
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(c.seed, stream, i * c.path_index_stride);
            const PathRecord r = exit_via_censored(sim, D, B, x, c, rng);
            if (!r.exited()) ++p.unfinished;
            p.m.add(r.end_time);
        }
        return p;
    };
    const Part t = block_reduce<Part>(n_paths, kPathBlock, c.workers, fn, [](Part& a, const Part& b) {
        a.m.merge(b.m);
        a.unfinished += b.unfinished;
    });
    Estimate e = t.m.estimate_x();
    detail::count_status(e, t.unfinished);
    e.diagnostics["capped_over_1pct"] = t.unfinished * 100 > n_paths;
    return e;
}

// ---------------------------------------------------------------------------
// Green providers: callables (x, y) -> Estimate used by the sweeps.

/// Closed-form Green function of a stable ball (zero error).
struct OracleGreen {
    LevyModel model;
    Domain B;

    OracleGreen(const LevyModel& m, const Domain& b) : model(m), B(b) { classical::require_stable_ball(m, b); }
    Estimate operator()(const Point& x, const Point& y) const {
        Estimate e;
        e.value = classical::green(model, B, x, y);
        return e;
    }
};

/// Occupation-density estimates with rho = min(|x-y|/8, delta_B(y)/2).
/// The substream is a hash of the pair so repeated queries reproduce.
struct MonteCarloGreen {
    const Simulator* sim;
    Domain B;
    SimConfig cfg;
    std::uint64_t n_paths = 10'000;

    static std::uint64_t pair_stream(const Point& x, const Point& y) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&](double v) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            h = splitmix64(h ^ bits);
        };
        for (int i = 0; i < x.dim(); ++i) mix(x[i]);
        for (int i = 0; i < y.dim(); ++i) mix(y[i]);
        return h;
    }
    Estimate operator()(const Point& x, const Point& y) const {
        const double rho = std::min(distance(x, y) / 8, 0.5 * B.dist_to_boundary(y));
        return estimate_green_pair(*sim, B, x, y, rho, n_paths, cfg, pair_stream(x, y));
    }
};

/// g(x) = min(G_B(x, z0), c5 Phi(delta)/delta^n) with delta = delta_B(z0).
struct GFunctionSpec {
    Point z0;
    double delta0 = 0;
    double c5 = 1;
    double cap_value = 0;

    static GFunctionSpec make(const LevyModel& m, const Domain& B, double c5) {
        GFunctionSpec s;
        s.z0 = reference_point(B);
        s.delta0 = B.dist_to_boundary(s.z0);
        s.c5 = c5;
        s.cap_value = c5 * big_phi(m.profile, s.delta0) / std::pow(s.delta0, m.n);
        return s;
    }
    double cap() const { return cap_value; }
};

template <class Green>
Estimate g_function(const Green& green, const GFunctionSpec& spec, const Point& x) {
    if (!(distance(x, spec.z0) > 0)) throw PreconditionError("g_function: x must differ from z0");
    Estimate e = green(x, spec.z0);
    if (e.value > spec.cap()) {
        e.value = spec.cap();
        e.diagnostics["capped"] = 1;
    }
    return e;
}

/// Empirical sup of G_B(x,y) |x-y|^n / Phi(|x-y|) over the given pairs.
template <class Green>
double fit_green_upper_constant(const LevyModel& m, const Green& green, const std::vector<std::pair<Point, Point>>& pairs) {
    double sup = 0;
    for (const auto& [x, y] : pairs) {
        const double d = distance(x, y);
        sup = std::max(sup, green(x, y).value * std::pow(d, m.n) / big_phi(m.profile, d));
    }
    return sup;
}

}  // namespace censored
