#pragma once

// Compound-Poisson simulation of the killed and censored processes.
//
// Jumps shorter than the cutoff e(x) = min(eps, c * delta(x)) are dropped
// (or replaced by a Gaussian in gaussian_mode). Shrinking the cutoff next
// to the boundary keeps the truncated dynamics faithful where the exterior
// is close; it also means every exterior point lies beyond the cutoff, so
// the suppression rate of a censored path is exactly kappa_D.
//
// One engine covers every variant through two optional domains:
//   suppress: jumps leaving it are discarded (censoring),
//   stop:     the first jump leaving it ends the path (killing / exit).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "censored/errors.hpp"
#include "censored/geometry.hpp"
#include "censored/kernels.hpp"
#include "censored/random.hpp"
#include "censored/stats.hpp"

namespace censored {

struct SimConfig {
    double eps_cut = 0;          // small-jump cutoff; 0 -> 1e-3 diam
    double boundary_refine = 0.1;
    bool gaussian_mode = false;
    std::uint64_t max_events = 100'000'000;
    double eta_stop = -1;        // boundary layer width; < 0 -> 1e-3 diam
    double dwell = -1;           // < 0 -> 1% of horizon; inf disables
    double floor = -1;           // numerical boundary; < 0 -> 1e-12 diam
    double horizon = 1e3;
    std::uint64_t seed = 1;
    std::uint64_t path_index_stride = 1;
    bool record_events = false;
    bool track_fk = false;
    int workers = 1;

    /// Fill unset lengths relative to the domain and validate.
    SimConfig resolved(const Domain& d) const {
        SimConfig c = *this;
        const double diam = d.diam();
        if (c.eps_cut == 0) c.eps_cut = 1e-3 * diam;
        if (c.eta_stop < 0) c.eta_stop = 1e-3 * diam;
        if (c.floor < 0) c.floor = 1e-12 * diam;
        if (c.dwell < 0) c.dwell = 0.01 * c.horizon;
        if (!(c.eps_cut > 0)) throw ConfigError("sim: eps_cut must be positive");
        if (!(c.horizon > 0)) throw ConfigError("sim: horizon must be positive");
        if (!(c.boundary_refine > 0 && c.boundary_refine < 1)) throw ConfigError("sim: boundary_refine must lie in (0,1)");
        if (!(c.floor > 0)) throw ConfigError("sim: floor must be positive");
        if (c.path_index_stride == 0) throw ConfigError("sim: path_index_stride must be positive");
        return c;
    }
};

enum class PathStatus { ExitedByJump, ExitedByDiffusion, ReachedHorizon, BoundaryApproach, EventCapHit };

inline const char* to_string(PathStatus s) {
    switch (s) {
        case PathStatus::ExitedByJump: return "exited_by_jump";
        case PathStatus::ExitedByDiffusion: return "exited_by_diffusion";
        case PathStatus::ReachedHorizon: return "reached_horizon";
        case PathStatus::BoundaryApproach: return "boundary_approach";
        case PathStatus::EventCapHit: return "event_cap_hit";
    }
    return "?";
}

struct PathEvent {
    double t;
    Point before, after;
    bool suppressed;
};

struct PathRecord {
    PathStatus status = PathStatus::ReachedHorizon;
    double end_time = 0;         // exit time, horizon, or boundary-approach time
    Point pre_exit, post_exit;   // X_{tau-}, X_tau for exits
    Point final_position;        // last position inside
    double fk_integral = 0;      // int_0^end kappa_D(X_s) ds when tracked
    std::uint64_t suppressed_jumps = 0;
    std::uint64_t n_events = 0;
    std::vector<PathEvent> events;

    bool exited() const { return status == PathStatus::ExitedByJump || status == PathStatus::ExitedByDiffusion; }
};

/// Observer hooks; the engine calls sojourn() for every interval the path
/// rests at x and jump() for every accepted or suppressed jump.
struct NullObserver {
    void sojourn(const Point&, double /*t0*/, double /*dt*/) {}
    void jump(double /*t*/, const Point& /*from*/, const Point& /*to*/, bool /*suppressed*/) {}
};

/// Model-bound state shared by all paths: tail table and variance table.
class Simulator {
  public:
    explicit Simulator(const LevyModel& m) : Simulator(m, std::make_shared<const RadialTail>(m)) {}
    Simulator(const LevyModel& m, std::shared_ptr<const RadialTail> t) : model_(m), tail_(std::move(t)) {
        var_.reserve(kVarKnots + 1);
        for (int k = 0; k <= kVarKnots; ++k) var_.push_back(std::log(small_jump_variance(m, std::exp(kVarU0 + k * kVarH))));
    }

    const LevyModel& model() const { return model_; }
    const RadialTail& tail() const { return *tail_; }
    std::shared_ptr<const RadialTail> tail_ptr() const { return tail_; }

    /// Small-jump variance rate for cutoff e, from a log-log table.
    double variance_rate(double e) const {
        const double x = (std::log(e) - kVarU0) / kVarH;
        const int k = std::clamp(static_cast<int>(std::floor(x)), 0, kVarKnots - 1);
        return std::exp(var_[k] + (x - k) * (var_[k + 1] - var_[k]));
    }

  private:
    static constexpr int kVarKnots = 24 * 16;
    static constexpr double kVarU0 = -34.538776394910684;  // log 1e-15
    static constexpr double kVarH = 0.14391156831212787;   // log(10) / 16
    LevyModel model_;
    std::shared_ptr<const RadialTail> tail_;
    std::vector<double> var_;
};

/// Jump displacement with |jump| > eps.
inline Point sample_jump(const Simulator& sim, double eps, Rng& rng) {
    if (!(eps > 0)) throw DomainError("sample_jump: eps must be positive");
    const double r = sim.tail().sample_radius(eps, uniform_pos(rng));
    return random_direction(sim.model().n, rng) * r;
}

struct RunSpec {
    const Domain* suppress = nullptr;    // censoring domain
    const Domain* stop = nullptr;        // path ends on leaving it
    const KillingTable* killing = nullptr;  // for the Feynman-Kac integral
    bool use_dwell = false;              // boundary-approach proxy on the suppress domain
};

namespace detail {

template <class Observer>
PathRecord simulate(const Simulator& sim, const RunSpec& spec, const Point& x0, const SimConfig& cfg, Rng& rng,
                    Observer& obs) {
    const Domain& near = spec.suppress ? *spec.suppress : *spec.stop;
    if (!near.contains(x0) || (spec.stop && !spec.stop->contains(x0)))
        throw DomainError("simulate: start point " + x0.str() + " is not inside the domain");
    if (x0.dim() != sim.model().n) throw DomainError("simulate: start point has the wrong dimension");
    const RadialTail& tail = sim.tail();
    const int n = sim.model().n;
    const double eps = cfg.eps_cut;
    const double log_t_eps = tail.log_value(eps);
    const double rate_eps = tail.rate(eps);
    constexpr double inf = std::numeric_limits<double>::infinity();

    PathRecord rec;
    Point x = x0;
    double t = 0;
    double layer_entry = -1;  // time of entering the eta layer, -1 when outside

    auto finish = [&](PathStatus s, double when) {
        rec.status = s;
        rec.end_time = when;
        rec.final_position = x;
    };

    for (;;) {
        const double delta = near.dist_to_boundary(x);
        if (spec.use_dwell || spec.suppress) {
            if (delta < cfg.eta_stop) {
                if (layer_entry < 0) layer_entry = t;
            } else {
                layer_entry = -1;
            }
        }
        if (delta < cfg.floor) {
            finish(PathStatus::BoundaryApproach, layer_entry >= 0 ? layer_entry : t);
            return rec;
        }
        if (rec.n_events >= cfg.max_events) {
            finish(PathStatus::EventCapHit, t);
            return rec;
        }
        // the diffusion correction stands in for jumps below a fixed eps
        const double e = cfg.gaussian_mode ? eps : std::min(eps, cfg.boundary_refine * delta);
        const double log_te = e == eps ? log_t_eps : tail.log_value(e);
        const double rate = e == eps ? rate_eps : tail.rate(e);
        double dt = -std::log(uniform_pos(rng)) / rate;

        // boundary-approach proxy: sustained presence in the eta layer
        if (spec.use_dwell && layer_entry >= 0 && cfg.dwell < inf && t + dt >= layer_entry + cfg.dwell &&
            layer_entry + cfg.dwell < cfg.horizon) {
            const double until = layer_entry + cfg.dwell;
            obs.sojourn(x, t, until - t);
            if (spec.killing && cfg.track_fk) rec.fk_integral += (*spec.killing)(x) * (until - t);
            t = until;
            finish(PathStatus::BoundaryApproach, layer_entry);
            return rec;
        }
        const bool last = t + dt >= cfg.horizon;
        if (last) dt = cfg.horizon - t;

        if (cfg.gaussian_mode) {
            const double var = sim.variance_rate(e) * dt;
            const double eta = cfg.eta_stop > 0 ? cfg.eta_stop : eps;
            const auto m = static_cast<std::uint64_t>(std::ceil(var / (eta * eta)));
            const std::uint64_t steps = std::max<std::uint64_t>(1, m);
            const double h = dt / static_cast<double>(steps);
            const double sd = std::sqrt(var / static_cast<double>(steps));
            for (std::uint64_t k = 0; k < steps; ++k) {
                obs.sojourn(x, t, h);
                t += h;
                Point y = x;
                for (int tries = 0; tries < 100; ++tries) {
                    y = x;
                    for (int i = 0; i < n; ++i) y[i] += sd * standard_normal(rng);
                    if (!spec.suppress || spec.suppress->contains(y)) break;
                    y = x;  // censored: reject the substep and redraw
                }
                if (spec.killing && cfg.track_fk) {
                    const Point mid = (x + y) * 0.5;
                    rec.fk_integral += (spec.stop->contains(mid) ? (*spec.killing)(mid) : (*spec.killing)(x)) * h;
                }
                if (spec.stop && !spec.stop->contains(y)) {
                    rec.pre_exit = x;
                    rec.post_exit = y;
                    finish(PathStatus::ExitedByDiffusion, t);
                    return rec;
                }
                x = y;
            }
        } else {
            obs.sojourn(x, t, dt);
            if (spec.killing && cfg.track_fk) rec.fk_integral += (*spec.killing)(x) * dt;
            t += dt;
        }
        if (last) {
            t = cfg.horizon;
            finish(PathStatus::ReachedHorizon, cfg.horizon);
            return rec;
        }

        const double r = std::max(e, tail.inverse_log(log_te + std::log(uniform_pos(rng))));
        const Point y = x + random_direction(n, rng) * r;
        ++rec.n_events;
        // suppression comes first: a jump out of D is never an exit from B
        if (spec.suppress && !spec.suppress->contains(y)) {
            ++rec.suppressed_jumps;
            obs.jump(t, x, y, true);
            if (cfg.record_events) rec.events.push_back({t, x, y, true});
            continue;
        }
        if (spec.stop && !spec.stop->contains(y)) {
            obs.jump(t, x, y, false);
            if (cfg.record_events) rec.events.push_back({t, x, y, false});
            rec.pre_exit = x;
            rec.post_exit = y;
            finish(PathStatus::ExitedByJump, t);
            return rec;
        }
        obs.jump(t, x, y, false);
        if (cfg.record_events) rec.events.push_back({t, x, y, false});
        x = y;
    }
}

}  // namespace detail

/// X killed on leaving B.
template <class Observer = NullObserver>
PathRecord run_killed(const Simulator& sim, const Domain& B, const Point& x0, const SimConfig& cfg, Rng& rng,
                      Observer&& obs = Observer{}, const KillingTable* killing = nullptr) {
    RunSpec s;
    s.stop = &B;
    s.killing = killing;
    return detail::simulate(sim, s, x0, cfg.resolved(B), rng, obs);
}

/// Censored process on D: jumps leaving D are suppressed.
template <class Observer = NullObserver>
PathRecord run_censored_inw(const Simulator& sim, const Domain& D, const Point& x0, const SimConfig& cfg, Rng& rng,
                            Observer&& obs = Observer{}) {
    RunSpec s;
    s.suppress = &D;
    s.use_dwell = true;
    return detail::simulate(sim, s, x0, cfg.resolved(D), rng, obs);
}

/// Censored process on D stopped at its first jump out of B (closure of B inside D).
template <class Observer = NullObserver>
PathRecord exit_via_censored(const Simulator& sim, const Domain& D, const Domain& B, const Point& x0,
                             const SimConfig& cfg, Rng& rng, Observer&& obs = Observer{}) {
    RunSpec s;
    s.suppress = &D;
    s.stop = &B;
    SimConfig c = cfg.resolved(D);
    return detail::simulate(sim, s, x0, c, rng, obs);
}

using TestFunction = std::function<double(const Point&)>;

inline constexpr std::uint64_t kPathBlock = 256;

/// E_x[exp(A(t)) f(X^D_t); t < tau_D] for each f, where A is the integral
/// of kappa_D along the killed path. Weights with A > 700 are excluded and
/// counted under "weight_overflow". The last entry of the result is the
/// unweighted survival probability P_x(t < tau_D).
inline std::vector<Estimate> fk_functional(const Simulator& sim, const Domain& D, const Point& x0, double t,
                                           const std::vector<TestFunction>& fs, const SimConfig& cfg,
                                           std::uint64_t n_paths, std::uint64_t stream = 0) {
    if (!(t > 0)) throw PreconditionError("fk_functional: t must be positive");
    SimConfig c = cfg.resolved(D);
    c.horizon = t;
    c.track_fk = true;
    const KillingTable kt(sim.tail_ptr(), D, c.floor);
    const std::size_t m = fs.size();
    struct Part {
        std::vector<Moments> mom;
        std::uint64_t overflow = 0;
    };
    auto fn = [&](std::uint64_t lo, std::uint64_t hi) {
        Part p;
        p.mom.resize(m + 1);
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(c.seed, stream, i * c.path_index_stride);
            const PathRecord r = run_killed(sim, D, x0, c, rng, NullObserver{}, &kt);
            const bool alive = r.status == PathStatus::ReachedHorizon;
            if (alive && r.fk_integral > 700) {
                ++p.overflow;
                continue;
            }
            const double w = alive ? std::exp(r.fk_integral) : 0.0;
            for (std::size_t j = 0; j < m; ++j) p.mom[j].add(alive ? w * fs[j](r.final_position) : 0.0);
            p.mom[m].add(alive ? 1.0 : 0.0);
        }
        return p;
    };
    Part init;
    init.mom.resize(m + 1);
    const Part total = block_reduce<Part>(
        n_paths, kPathBlock, c.workers, fn,
        [](Part& a, const Part& b) {
            for (std::size_t j = 0; j < a.mom.size(); ++j) a.mom[j].merge(b.mom[j]);
            a.overflow += b.overflow;
        },
        init);
    std::vector<Estimate> out;
    for (const auto& mo : total.mom) {
        Estimate e = mo.estimate_x();
        e.diagnostics["weight_overflow"] = total.overflow;
        out.push_back(e);
    }
    return out;
}

/// E_x[f(Y_t); t < zeta] for the censored process, zeta proxied by the
/// numerical boundary (no dwell rule).
inline std::vector<Estimate> censored_functional(const Simulator& sim, const Domain& D, const Point& x0, double t,
                                                 const std::vector<TestFunction>& fs, const SimConfig& cfg,
                                                 std::uint64_t n_paths, std::uint64_t stream = 0) {
    if (!(t > 0)) throw PreconditionError("censored_functional: t must be positive");
    SimConfig c = cfg;
    c.horizon = t;
    c.dwell = std::numeric_limits<double>::infinity();
    const std::size_t m = fs.size();
    struct Part {
        std::vector<Moments> mom;
        std::uint64_t lost = 0;
    };
    auto fn = [&](std::uint64_t lo, std::uint64_t hi) {
        Part p;
        p.mom.resize(m);
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(c.seed, stream, i * c.path_index_stride);
            const PathRecord r = run_censored_inw(sim, D, x0, c, rng);
            const bool alive = r.status == PathStatus::ReachedHorizon;
            if (!alive) ++p.lost;
            for (std::size_t j = 0; j < m; ++j) p.mom[j].add(alive ? fs[j](r.final_position) : 0.0);
        }
        return p;
    };
    Part init;
    init.mom.resize(m);
    const Part total = block_reduce<Part>(
        n_paths, kPathBlock, c.workers, fn,
        [](Part& a, const Part& b) {
            for (std::size_t j = 0; j < a.mom.size(); ++j) a.mom[j].merge(b.mom[j]);
            a.lost += b.lost;
        },
        init);
    std::vector<Estimate> out;
    for (const auto& mo : total.mom) {
        Estimate e = mo.estimate_x();
        e.diagnostics["boundary_approach"] = total.lost;
        out.push_back(e);
    }
    return out;
}

}  // namespace censored
