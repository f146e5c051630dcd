#pragma once

// Experiment configuration, dispatch and reports. Reports are pure functions
// of the config; wall time and timestamps go to the manifest only.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "censored/bernstein.hpp"
#include "censored/classical.hpp"
#include "censored/errors.hpp"
#include "censored/geometry.hpp"
#include "censored/kernels.hpp"
#include "censored/pathsim.hpp"
#include "censored/potential.hpp"
#include "censored/verify.hpp"

namespace censored {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr const char* kReportSchema = "censored-report/1";

inline const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids = {"kernel-info", "green",     "exitlaw",   "gauge",
                                                 "threeg",      "gen-threeg", "harnack-x", "harnack-y",
                                                 "carleson",    "gauge-integral", "boundary", "equivalence"};
    return ids;
}

/// Zero or empty fields mean "experiment default".
struct ExperimentConfig {
    std::string phi = "stable:alpha=1.2";
    std::string calibration = "auto";  // standard normalization for stable profiles, else 1; or a number
    int dim = 2;
    std::string domain = "ball:r=1";
    std::string exp;
    std::uint64_t N = 0;
    std::uint64_t triples = 20'000;
    std::uint64_t pairs = 0;
    double eps = 0;
    double rho = 0;
    double margin = 0.1;
    int halvings = 3;
    std::vector<double> horizons = {1, 10, 100, 1000};
    double r1 = 0;
    double r = 0.5;
    double L = 2;
    std::vector<double> scales = {0.05, 0.1, 0.2};
    double t = 0.1;
    std::vector<double> x, y;
    std::string green = "auto";  // auto | oracle | mc
    std::uint64_t seed = 1;
    int workers = 1;     // not part of the hash: results do not depend on it
    std::string out;     // likewise
};

// ---------------------------------------------------------------------------
// Config <-> JSON

/// The fields that determine results, in a fixed key order.
inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["exp"] = c.exp;
    j["phi"] = c.phi;
    j["calibration"] = c.calibration;
    j["dim"] = c.dim;
    j["domain"] = c.domain;
    j["N"] = c.N;
    j["triples"] = c.triples;
    j["pairs"] = c.pairs;
    j["eps"] = c.eps;
    j["rho"] = c.rho;
    j["margin"] = c.margin;
    j["halvings"] = c.halvings;
    j["horizons"] = c.horizons;
    j["r1"] = c.r1;
    j["r"] = c.r;
    j["L"] = c.L;
    j["scales"] = c.scales;
    j["t"] = c.t;
    j["x"] = c.x;
    j["y"] = c.y;
    j["green"] = c.green;
    j["seed"] = c.seed;
    return j;
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config_to_json(c).dump());
    return os.str();
}

/// Overlay the keys of a JSON object onto `c`. Unknown keys and type
/// mismatches are errors naming the field.
inline void apply_json(ExperimentConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "exp") c.exp = val.get<std::string>();
            else if (key == "phi") c.phi = val.get<std::string>();
            else if (key == "calibration") c.calibration = val.is_number() ? val.dump() : val.get<std::string>();
            else if (key == "dim") c.dim = val.get<int>();
            else if (key == "domain") c.domain = val.get<std::string>();
            else if (key == "N") c.N = val.get<std::uint64_t>();
            else if (key == "triples") c.triples = val.get<std::uint64_t>();
            else if (key == "pairs") c.pairs = val.get<std::uint64_t>();
            else if (key == "eps") c.eps = val.get<double>();
            else if (key == "rho") c.rho = val.get<double>();
            else if (key == "margin") c.margin = val.get<double>();
            else if (key == "halvings") c.halvings = val.get<int>();
            else if (key == "horizons") c.horizons = val.get<std::vector<double>>();
            else if (key == "r1") c.r1 = val.get<double>();
            else if (key == "r") c.r = val.get<double>();
            else if (key == "L") c.L = val.get<double>();
            else if (key == "scales") c.scales = val.get<std::vector<double>>();
            else if (key == "t") c.t = val.get<double>();
            else if (key == "x") c.x = val.get<std::vector<double>>();
            else if (key == "y") c.y = val.get<std::vector<double>>();
            else if (key == "green") c.green = val.get<std::string>();
            else if (key == "seed") c.seed = val.get<std::uint64_t>();
            else if (key == "workers") c.workers = val.get<int>();
            else if (key == "out") c.out = val.get<std::string>();
            else throw ConfigError("config: unknown key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config: field '" + key + "': " + e.what());
        }
    }
}

/// Parse config text; syntax errors report line and column.
inline ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    apply_json(base, j);
    return base;
}

inline ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str(), std::move(base));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Validation

inline LevyModel make_model(const ExperimentConfig& c) {
    const BernsteinProfile p = BernsteinProfile::parse(c.phi);
    const ScalingEstimate s = estimate_scaling_exponents(p);
    if (!s.valid())
        throw ConfigError("phi '" + c.phi + "': weak scaling exponents must lie in (0,1), got [" +
                          std::to_string(s.delta1) + ", " + std::to_string(s.delta2) + "] and [" +
                          std::to_string(s.delta3) + ", " + std::to_string(s.delta4) + "]");
    double cal = 1.0;
    if (c.calibration == "auto" || c.calibration == "standard") {
        if (p.family == ProfileFamily::Stable) cal = stable_normalization(c.dim, p.alpha);
        else if (c.calibration == "standard") throw ConfigError("calibration: 'standard' needs a stable profile");
    } else {
        try {
            std::size_t used = 0;
            cal = std::stod(c.calibration, &used);
            if (used != c.calibration.size()) throw std::invalid_argument("trailing");
        } catch (const std::logic_error&) {
            throw ConfigError("calibration: expected 'auto', 'standard' or a number, got '" + c.calibration + "'");
        }
    }
    return LevyModel(c.dim, p, cal);
}

inline Point config_point(const std::vector<double>& v, int dim, const char* what) {
    if (static_cast<int>(v.size()) != dim)
        throw ConfigError(std::string(what) + ": expected " + std::to_string(dim) + " coordinates");
    Point p(dim);
    for (int i = 0; i < dim; ++i) p[i] = v[i];
    return p;
}

/// Throws ConfigError on anything an experiment cannot run with.
inline void validate(const ExperimentConfig& c) {
    const auto& ids = experiment_ids();
    if (std::find(ids.begin(), ids.end(), c.exp) == ids.end())
        throw ConfigError("exp: unknown experiment '" + c.exp + "'");
    if (c.dim < 1 || c.dim > kMaxDim) throw ConfigError("dim: must lie in [1, 3]");
    make_model(c);
    Domain::parse(c.domain, c.dim);
    if (c.eps < 0) throw ConfigError("eps: must be nonnegative");
    if (c.rho < 0) throw ConfigError("rho: must be nonnegative");
    if (!(c.margin > 0 && c.margin < 1)) throw ConfigError("margin: must lie in (0,1)");
    if (c.halvings < 0 || c.halvings > 10) throw ConfigError("halvings: must lie in [0,10]");
    if (c.horizons.empty()) throw ConfigError("horizons: need at least one");
    for (double h : c.horizons)
        if (!(h > 0)) throw ConfigError("horizons: must be positive");
    if (c.r1 < 0 || c.r1 > 1) throw ConfigError("r1: must lie in [0,1]");
    if (!(c.r > 0)) throw ConfigError("r: must be positive");
    if (!(c.L > 0)) throw ConfigError("L: must be positive");
    for (double s : c.scales)
        if (!(s > 0 && s < 1)) throw ConfigError("scales: must lie in (0,1)");
    if (!(c.t > 0)) throw ConfigError("t: must be positive");
    if (!c.x.empty()) config_point(c.x, c.dim, "x");
    if (!c.y.empty()) config_point(c.y, c.dim, "y");
    if (c.green != "auto" && c.green != "oracle" && c.green != "mc")
        throw ConfigError("green: expected auto, oracle or mc");
    if (c.workers < 0) throw ConfigError("workers: must be nonnegative");
}

// ---------------------------------------------------------------------------
// Running

enum class Verdict { Pass, BoundViolated };

struct RunResult {
    nlohmann::ordered_json report;
    std::string csv;
    Verdict verdict = Verdict::Pass;
    bool passed() const { return verdict == Verdict::Pass; }
};

namespace harness {

using nlohmann::ordered_json;

inline ordered_json to_json(const Point& p) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < p.dim(); ++i) a.push_back(p[i]);
    return a;
}

inline ordered_json to_json(const Estimate& e) {
    ordered_json j;
    j["value"] = e.value;
    j["stderr"] = e.stderr_;
    j["n_paths"] = e.n_paths;
    if (!e.diagnostics.empty()) j["diagnostics"] = e.diagnostics;
    return j;
}

inline ordered_json to_json(const ScalingEstimate& s) {
    ordered_json j;
    j["delta1"] = s.delta1;
    j["delta2"] = s.delta2;
    j["delta3"] = s.delta3;
    j["delta4"] = s.delta4;
    j["a1"] = s.a1;
    j["a2"] = s.a2;
    j["a3"] = s.a3;
    j["a4"] = s.a4;
    j["valid_at_infinity"] = s.valid_h1;
    j["valid_at_zero"] = s.valid_h2;
    return j;
}

inline ordered_json to_json(const InequalityReport& r) {
    ordered_json j;
    j["name"] = r.name;
    j["n_samples"] = r.n_samples;
    j["skipped"] = r.skipped;
    j["sup"] = r.sup;
    j["p99"] = r.p99;
    j["p90"] = r.p90;
    j["median"] = r.median;
    j["fitted_constant"] = r.fitted_constant;
    j["ceiling"] = std::isfinite(r.ceiling) ? ordered_json(r.ceiling) : ordered_json("inf");
    j["max_growth"] = r.max_growth();
    ordered_json tr = ordered_json::array();
    for (const auto& t : r.refinement_trace) tr.push_back({{"scale", t.scale}, {"sup", t.sup}, {"n", t.n}});
    j["refinement_trace"] = tr;
    ordered_json w = ordered_json::array();
    for (const auto& wi : r.worst_witnesses) {
        ordered_json pts = ordered_json::array();
        for (const auto& p : wi.points) pts.push_back(to_json(p));
        w.push_back({{"points", pts}, {"ratio", wi.ratio}});
    }
    j["worst_witnesses"] = w;
    for (const auto& [k, v] : r.extra) j["extra"][k] = v;
    j["pass"] = r.pass;
    return j;
}

inline std::string ratios_csv(const InequalityReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "level,scale,index,ratio\n";
    std::size_t i = 0;
    for (std::size_t k = 0; k < r.refinement_trace.size(); ++k)
        for (std::uint64_t m = 0; m < r.refinement_trace[k].n && i < r.ratios.size(); ++m, ++i)
            os << k << "," << r.refinement_trace[k].scale << "," << i << "," << r.ratios[i] << "\n";
    return os.str();
}

inline std::string point_csv(const Point& p) {
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < p.dim(); ++i) os << (i ? ";" : "") << p[i];
    return os.str();
}

inline bool has_oracle(const LevyModel& m, const Domain& D) {
    return m.profile.family == ProfileFamily::Stable && (D.shape() == Shape::Ball || D.shape() == Shape::Interval);
}

struct Context {
    const ExperimentConfig& cfg;
    LevyModel model;
    Domain D;
    SimConfig sim_cfg;
    std::uint64_t n(std::uint64_t fallback) const { return cfg.N ? cfg.N : fallback; }
    std::uint64_t pairs(std::uint64_t fallback) const { return cfg.pairs ? cfg.pairs : fallback; }
    Point x_or(const Point& p) const { return cfg.x.empty() ? p : config_point(cfg.x, cfg.dim, "x"); }
};

// Green values as a callable; the closed form when available.
template <class F>
auto with_green(const Context& cx, const Simulator& sim, F&& f) {
    const bool oracle = cx.cfg.green == "oracle" || (cx.cfg.green == "auto" && has_oracle(cx.model, cx.D));
    if (oracle) return f(OracleGreen(cx.model, cx.D), "oracle");
    MonteCarloGreen G{&sim, cx.D, cx.sim_cfg, cx.n(10'000)};
    return f(G, "monte-carlo");
}

// Interior pairs at fixed relative positions, |x-y| >= 0.2 R.
inline std::vector<std::pair<Point, Point>> default_green_pairs(const Domain& D) {
    const Point c = D.incenter();
    const double R = D.inradius();
    const int n = D.dim();
    std::vector<std::pair<Point, Point>> out;
    if (n == 1) {
        for (auto [a, b] : std::vector<std::pair<double, double>>{{-0.3, 0.3}, {0, 0.5}, {0.2, -0.4}, {0.6, 0.2}, {-0.5, 0}})
            out.push_back({c + Point{a * R}, c + Point{b * R}});
        return out;
    }
    const std::vector<std::array<double, 4>> rel = {
        {-0.3, 0, 0.3, 0}, {0, 0, 0.5, 0}, {0.2, 0.2, -0.3, 0.1}, {0.6, 0, 0.6, 0.3}, {-0.5, -0.4, 0, -0.2}};
    for (const auto& q : rel) {
        Point x = Point::zero(n), y = Point::zero(n);
        x[0] = q[0] * R, x[1] = q[1] * R, y[0] = q[2] * R, y[1] = q[3] * R;
        out.push_back({c + x, c + y});
    }
    return out;
}

inline double default_rho(const Domain& B, const Point& x, const Point& y) {
    return std::min(distance(x, y) / 8, 0.5 * B.dist_to_boundary(y));
}

// ---------------------------------------------------------------------------

inline RunResult kernel_info(const Context& cx) {
    const auto s = estimate_scaling_exponents(cx.model.profile);
    RunResult out;
    auto& res = out.report["results"];
    res["scaling"] = to_json(s);
    const double eps = cx.cfg.eps > 0 ? cx.cfg.eps : 1e-3 * cx.D.diam();
    res["eps"] = eps;
    res["tail_mass"] = tail_mass(cx.model, eps);
    res["small_jump_variance"] = small_jump_variance(cx.model, eps);
    const auto pred = classify_boundary_regime(s, regime_inputs(cx.D));
    res["boundary_regime"] = {{"verdict", to_string(pred.verdict)}, {"clause", pred.applied_clause}, {"gauge", pred.gauge}};

    std::ostringstream csv;
    csv.precision(17);
    csv << "depth,killing_density,abs_error\n";
    if (cx.D.dim() == cx.model.n) {
        const RadialTail tail(cx.model);
        const Point c = cx.D.incenter();
        const Point q = cx.D.nearest_boundary_point(c);
        const Point e = (q - c) * (1.0 / distance(q, c));
        const double R = cx.D.inradius();
        for (double f : {1.0, 0.5, 0.1, 1e-2, 1e-3}) {
            const Point x = q - e * (f * R);
            const auto kv = killing_density_report(tail, cx.D, x);
            csv << f * R << "," << kv.value << "," << kv.abs_error << "\n";
        }
    }
    out.csv = csv.str();
    out.verdict = s.valid() ? Verdict::Pass : Verdict::BoundViolated;
    return out;
}

inline RunResult green(const Context& cx) {
    const Simulator sim(cx.model);
    std::vector<std::pair<Point, Point>> pairs;
    if (!cx.cfg.x.empty() || !cx.cfg.y.empty())
        pairs.push_back({config_point(cx.cfg.x, cx.cfg.dim, "x"), config_point(cx.cfg.y, cx.cfg.dim, "y")});
    else
        pairs = default_green_pairs(cx.D);
    const bool oracle = has_oracle(cx.model, cx.D);
    const std::uint64_t N = cx.n(100'000);
    RunResult out;
    ordered_json rows = ordered_json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "pair,x,y,rho,estimate,stderr,oracle,rel_error\n";
    bool ok = true;
    double worst = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& [x, y] = pairs[k];
        const double rho = cx.cfg.rho > 0 ? cx.cfg.rho : default_rho(cx.D, x, y);
        const Estimate e = estimate_green_pair(sim, cx.D, x, y, rho, N, cx.sim_cfg, k);
        ordered_json row{{"x", to_json(x)}, {"y", to_json(y)}, {"rho", rho}, {"estimate", to_json(e)}};
        double truth = std::numeric_limits<double>::quiet_NaN(), rel = truth;
        if (oracle) {
            truth = classical::green(cx.model, cx.D, x, y);
            rel = std::abs(e.value - truth) / truth;
            row["oracle"] = truth;
            row["rel_error"] = rel;
            worst = std::max(worst, rel);
            ok = ok && rel <= 0.1;
        } else {
            ok = ok && !e.indeterminate();
        }
        rows.push_back(row);
        csv << k << "," << point_csv(x) << "," << point_csv(y) << "," << rho << "," << e.value << "," << e.stderr_
            << "," << truth << "," << rel << "\n";
    }
    out.report["results"]["pairs"] = rows;
    out.report["results"]["criterion"] = oracle ? "relative error <= 0.1 against the closed form" : "estimates resolved";
    if (oracle) out.report["results"]["max_rel_error"] = worst;
    out.csv = csv.str();
    out.verdict = ok ? Verdict::Pass : Verdict::BoundViolated;
    return out;
}

inline RunResult exitlaw(const Context& cx) {
    const Simulator sim(cx.model);
    const Point x = cx.x_or(cx.D.incenter());
    const ExitMesh mesh = default_exit_mesh();
    const auto h = exit_distribution(sim, cx.D, x, mesh, cx.n(1'000'000), cx.sim_cfg, 0);
    RunResult out;
    auto& res = out.report["results"];
    res["x"] = to_json(x);
    res["radii"] = mesh.radii.back() == std::numeric_limits<double>::infinity()
                       ? ordered_json(std::vector<double>(mesh.radii.begin(), mesh.radii.end() - 1))
                       : ordered_json(mesh.radii);
    res["open_last_shell"] = mesh.radii.back() == std::numeric_limits<double>::infinity();
    res["n_angular"] = mesh.n_angular;
    res["n_paths"] = h.n_paths;
    res["capped"] = h.capped;
    res["outside_mesh"] = h.outside_mesh;
    std::vector<double> mass;
    for (const auto& b : h.bins) mass.push_back(b.value);
    res["empirical"] = mass;
    std::vector<double> p;
    const bool oracle = has_oracle(cx.model, cx.D);
    if (oracle) {
        p = exit_oracle(cx.model, cx.D, x, mesh);
        const double tv = total_variation(h, p);
        res["oracle"] = p;
        res["total_variation"] = tv;
        res["criterion"] = "total variation <= 0.03";
        out.verdict = tv <= 0.03 ? Verdict::Pass : Verdict::BoundViolated;
    } else {
        res["criterion"] = "no closed form; histogram only";
    }
    std::ostringstream csv;
    csv.precision(17);
    csv << "bin,shell,sector,empirical,stderr,oracle\n";
    for (std::size_t b = 0; b < h.bins.size(); ++b)
        csv << b << "," << b / mesh.n_angular << "," << b % mesh.n_angular << "," << h.bins[b].value << ","
            << h.bins[b].stderr_ << "," << (oracle ? p[b] : std::numeric_limits<double>::quiet_NaN()) << "\n";
    out.csv = csv.str();
    return out;
}

// r1 from the gauge-integral bisection when not given.
inline double resolve_r1(const Context& cx, const KillingTable& kt) {
    if (cx.cfg.r1 > 0) return cx.cfg.r1;
    if (!has_oracle(cx.model, cx.D) || cx.model.n != 2)
        throw ConfigError("r1: no default for this model and domain; set it explicitly");
    return default_r1(cx.model, cx.D, kt, cx.cfg.r);
}

inline RunResult gauge(const Context& cx) {
    const Simulator sim(cx.model);
    const SimConfig rc = cx.sim_cfg.resolved(cx.D);
    const KillingTable kt(sim.tail_ptr(), cx.D, rc.floor);
    const double r1 = resolve_r1(cx, kt);
    const double rho_b = r1 * cx.cfg.r;
    Rng rng = make_rng(cx.cfg.seed, detail::tag("gauge-pairs"), 0);
    const std::uint64_t N = cx.n(100'000);
    RunResult out;
    auto& res = out.report["results"];
    res["r"] = cx.cfg.r;
    res["r1"] = r1;
    res["ball_radius"] = rho_b;
    ordered_json rows = ordered_json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "pair,center,v,w,rho,u,stderr,green_censored,green_killed\n";
    bool ok = true;
    const std::uint64_t n_pairs = cx.pairs(10);
    for (std::uint64_t k = 0; k < n_pairs; ++k) {
        const Point xc = cx.D.sample_interior(rng, std::min(cx.cfg.r, 0.999 * cx.D.inradius()));
        const Domain B = Domain::ball(xc, rho_b);
        Point v, w;
        do {
            v = B.sample_interior(rng, 0.1 * rho_b);
            w = B.sample_interior(rng, 0.1 * rho_b);
        } while (distance(v, w) < 0.2 * rho_b);
        const double rho = cx.cfg.rho > 0 ? cx.cfg.rho : default_rho(B, v, w);
        const GaugeEstimate g = estimate_gauge(sim, cx.D, B, v, w, rho, N, cx.sim_cfg, k);
        const double s3 = 3 * g.u.stderr_;
        const bool in_band = !g.indeterminate && g.u.value >= 1 - s3 && g.u.value <= 2 + s3;
        ok = ok && in_band;
        rows.push_back({{"center", to_json(xc)},
                        {"v", to_json(v)},
                        {"w", to_json(w)},
                        {"rho", rho},
                        {"u", to_json(g.u)},
                        {"green_censored", to_json(g.green_censored)},
                        {"green_killed", to_json(g.green_killed)},
                        {"indeterminate", g.indeterminate},
                        {"within_bounds", in_band}});
        csv << k << "," << point_csv(xc) << "," << point_csv(v) << "," << point_csv(w) << "," << rho << ","
            << g.u.value << "," << g.u.stderr_ << "," << g.green_censored.value << "," << g.green_killed.value << "\n";
    }
    res["pairs"] = rows;
    res["criterion"] = "1 - 3 sigma <= u <= 2 + 3 sigma for every pair";
    out.csv = csv.str();
    out.verdict = ok ? Verdict::Pass : Verdict::BoundViolated;
    return out;
}

inline RunResult threeg(const Context& cx) {
    const Simulator sim(cx.model);
    const auto margins = halving_margins(cx.cfg.margin, cx.cfg.halvings);
    return with_green(cx, sim, [&](const auto& G, const char* provider) {
        const InequalityReport r = check_3g(cx.model, cx.D, G, cx.cfg.triples, margins, cx.cfg.seed);
        RunResult out;
        out.report["results"] = to_json(r);
        out.report["results"]["green"] = provider;
        out.csv = ratios_csv(r);
        out.verdict = r.pass ? Verdict::Pass : Verdict::BoundViolated;
        return out;
    });
}

inline RunResult gen_threeg(const Context& cx) {
    const Simulator sim(cx.model);
    const auto margins = halving_margins(cx.cfg.margin, cx.cfg.halvings);
    return with_green(cx, sim, [&](const auto& G, const char* provider) {
        // the ceiling is twice the plain 3G sup on the same protocol
        const InequalityReport base = check_3g(cx.model, cx.D, G, cx.cfg.triples, margins, cx.cfg.seed);
        const InequalityReport r =
            check_generalized_3g(cx.model, cx.D, G, cx.cfg.triples, margins, cx.cfg.seed, 2 * base.sup);
        RunResult out;
        out.report["results"] = to_json(r);
        out.report["results"]["green"] = provider;
        out.report["results"]["threeg_sup"] = base.sup;
        out.csv = ratios_csv(r);
        out.verdict = r.pass ? Verdict::Pass : Verdict::BoundViolated;
        return out;
    });
}

inline HarnackSpec harnack_spec(const Context& cx) {
    HarnackSpec hs;
    hs.scales = cx.cfg.scales;
    hs.L = cx.cfg.L;
    hs.n_pairs = cx.pairs(10);
    hs.n_paths = cx.n(4000);
    hs.seed = cx.cfg.seed;
    return hs;
}

inline RunResult harnack(const Context& cx, bool censored) {
    const Simulator sim(cx.model);
    const HarnackSpec hs = harnack_spec(cx);
    const Point x1 = cx.x_or(censored ? cx.D.incenter() : Point::zero(cx.model.n));
    const InequalityReport r = censored ? check_harnack_Y(sim, cx.D, x1, hs, cx.sim_cfg)
                                        : check_harnack_X(sim, x1, hs, cx.sim_cfg);
    RunResult out;
    out.report["results"] = to_json(r);
    out.report["results"]["x1"] = to_json(x1);
    out.csv = ratios_csv(r);
    out.verdict = r.pass ? Verdict::Pass : Verdict::BoundViolated;
    return out;
}

inline RunResult carleson(const Context& cx) {
    const Simulator sim(cx.model);
    const Point c = cx.D.incenter();
    const Point z = cx.D.nearest_boundary_point(c);
    const double r0 = cx.cfg.rho > 0 ? cx.cfg.rho : 0.9 * cx.D.fat_kappa() * cx.D.fat_R() / 4;
    const Point y = cx.x_or(c);
    return with_green(cx, sim, [&](const auto& G, const char* provider) {
        const InequalityReport r = check_carleson(cx.D, G, z, r0, y, cx.pairs(2000), cx.cfg.halvings, cx.cfg.seed);
        RunResult out;
        out.report["results"] = to_json(r);
        out.report["results"]["green"] = provider;
        out.report["results"]["z"] = to_json(z);
        out.report["results"]["y"] = to_json(y);
        out.csv = ratios_csv(r);
        out.verdict = r.pass ? Verdict::Pass : Verdict::BoundViolated;
        return out;
    });
}

inline RunResult gauge_integral_run(const Context& cx) {
    if (cx.model.n != 2 || !has_oracle(cx.model, cx.D))
        throw ConfigError("gauge-integral: needs a stable model on a disc");
    const Simulator sim(cx.model);
    const SimConfig rc = cx.sim_cfg.resolved(cx.D);
    const KillingTable kt(sim.tail_ptr(), cx.D, rc.floor);
    const double r1 = resolve_r1(cx, kt);
    const double rho = r1 * cx.cfg.r;
    auto probes = gauge_integral_probes(cx.D, cx.cfg.r);
    // random probes on top of the fixed ones
    Rng rng = make_rng(cx.cfg.seed, detail::tag("gauge-integral"), 0);
    const Domain unit = Domain::ball(Point::zero(2), 1.0);
    const double reach = std::max(0.0, cx.D.inradius() - cx.cfg.r) * (1 - 1e-9);
    for (std::uint64_t k = 0; k < cx.pairs(50); ++k) {
        const Point xc = cx.D.incenter() + random_direction(2, rng) * (reach * std::sqrt(uniform01(rng)));
        Point v, w;
        do {
            v = unit.sample_interior(rng, 0.02);
            w = unit.sample_interior(rng, 0.02);
        } while (distance(v, w) < 1e-3);
        probes.push_back({xc, v, w});
    }
    auto kappa = [&](const Point& q) { return kt(q); };
    RunResult out;
    std::ostringstream csv;
    csv.precision(17);
    csv << "probe,center,v,w,value\n";
    double best = 0;
    ordered_json worst;
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const auto& p = probes[k];
        const Point v = p.xc + p.v * rho, w = p.xc + p.w * rho;
        const double val = gauge_integral(cx.model, kappa, p.xc, rho, v, w);
        if (val > best) {
            best = val;
            worst = {{"center", to_json(p.xc)}, {"v", to_json(v)}, {"w", to_json(w)}};
        }
        csv << k << "," << point_csv(p.xc) << "," << point_csv(v) << "," << point_csv(w) << "," << val << "\n";
    }
    auto& res = out.report["results"];
    res["r"] = cx.cfg.r;
    res["r1"] = r1;
    res["ball_radius"] = rho;
    res["n_probes"] = probes.size();
    res["max_value"] = best;
    res["worst_probe"] = worst;
    res["criterion"] = "max value <= 0.501";
    out.csv = csv.str();
    out.verdict = best <= 0.5 + 1e-3 ? Verdict::Pass : Verdict::BoundViolated;
    return out;
}

inline RunResult boundary(const Context& cx) {
    const Simulator sim(cx.model);
    const Point x0 = cx.x_or(cx.D.incenter());
    const BoundaryExperiment e = run_boundary_experiment(sim, cx.D, x0, cx.cfg.horizons, cx.n(10'000), cx.sim_cfg);
    RunResult out;
    auto& res = out.report["results"];
    res["x0"] = to_json(x0);
    res["prediction"] = {{"verdict", to_string(e.prediction.verdict)},
                         {"clause", e.prediction.applied_clause},
                         {"gauge", e.prediction.gauge},
                         {"scaling", to_json(e.prediction.scaling)}};
    ordered_json curve = ordered_json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "horizon,approached,fraction,ci_lo,ci_hi\n";
    for (const auto& p : e.curve) {
        curve.push_back({{"horizon", p.horizon},
                         {"approached", p.approached},
                         {"fraction", p.fraction},
                         {"ci_lo", p.ci_lo},
                         {"ci_hi", p.ci_hi}});
        csv << p.horizon << "," << p.approached << "," << p.fraction << "," << p.ci_lo << "," << p.ci_hi << "\n";
    }
    res["curve"] = curve;
    res["n_paths"] = e.n_paths;
    res["event_cap_hits"] = e.event_cap_hits;
    res["monotone"] = e.monotone;
    res["consistent"] = e.consistent;
    out.csv = csv.str();
    out.verdict = e.consistent ? Verdict::Pass : Verdict::BoundViolated;
    return out;
}

/// Five bounded test functions scaled to D.
inline std::vector<TestFunction> equivalence_battery(const Domain& D) {
    const Point c = D.incenter();
    const double R = D.inradius();
    return {
        [](const Point&) { return 1.0; },
        [c, R](const Point& z) { return (z - c).norm2() / (R * R); },
        [c, R](const Point& z) { return std::cos(M_PI * (z[0] - c[0]) / R); },
        [c](const Point& z) { return z[0] > c[0] ? 1.0 : 0.0; },
        [c, R](const Point& z) { return std::exp(-(z - c).norm2() / (0.18 * R * R)); },
    };
}

inline RunResult equivalence(const Context& cx) {
    const Simulator sim(cx.model);
    const Point x0 = cx.x_or(cx.D.incenter() + Point::axis(cx.model.n, 0, 0.5 * cx.D.inradius()));
    const auto fs = equivalence_battery(cx.D);
    const std::uint64_t N = cx.n(100'000);
    // independent streams for the two constructions
    const auto inw = censored_functional(sim, cx.D, x0, cx.cfg.t, fs, cx.sim_cfg, N, 0);
    const auto fk = fk_functional(sim, cx.D, x0, cx.cfg.t, fs, cx.sim_cfg, N, 1);
    RunResult out;
    auto& res = out.report["results"];
    res["x0"] = to_json(x0);
    res["t"] = cx.cfg.t;
    ordered_json rows = ordered_json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "function,inw,inw_stderr,fk,fk_stderr,z\n";
    bool ok = true;
    double worst = 0;
    for (std::size_t j = 0; j < fs.size(); ++j) {
        const double s = combined_sigma(inw[j], fk[j]);
        const double z = s > 0 ? std::abs(inw[j].value - fk[j].value) / s : (inw[j].value == fk[j].value ? 0 : INFINITY);
        worst = std::max(worst, z);
        ok = ok && z <= 3;
        rows.push_back({{"inw", to_json(inw[j])}, {"fk", to_json(fk[j])}, {"z", z}});
        csv << j << "," << inw[j].value << "," << inw[j].stderr_ << "," << fk[j].value << "," << fk[j].stderr_ << ","
            << z << "\n";
    }
    res["functions"] = rows;
    res["killed_survival"] = to_json(fk.back());
    res["max_z"] = worst;
    res["criterion"] = "|INW - FK| <= 3 combined standard errors for every function";
    out.csv = csv.str();
    out.verdict = ok ? Verdict::Pass : Verdict::BoundViolated;
    return out;
}

}  // namespace harness

/// Validate and run; the report carries the config, its hash and the verdict.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    harness::Context cx{cfg, make_model(cfg), Domain::parse(cfg.domain, cfg.dim), SimConfig{}};
    if (cx.D.dim() != cx.model.n) throw ConfigError("domain: dimension differs from dim");
    cx.sim_cfg.eps_cut = cfg.eps;
    cx.sim_cfg.seed = cfg.seed;
    cx.sim_cfg.workers = cfg.workers;
    cx.sim_cfg.horizon = cfg.horizons.empty() ? 1e3 : *std::max_element(cfg.horizons.begin(), cfg.horizons.end());

    RunResult r;
    const std::string& e = cfg.exp;
    try {
        if (e == "kernel-info") r = harness::kernel_info(cx);
        else if (e == "green") r = harness::green(cx);
        else if (e == "exitlaw") r = harness::exitlaw(cx);
        else if (e == "gauge") r = harness::gauge(cx);
        else if (e == "threeg") r = harness::threeg(cx);
        else if (e == "gen-threeg") r = harness::gen_threeg(cx);
        else if (e == "harnack-x") r = harness::harnack(cx, false);
        else if (e == "harnack-y") r = harness::harnack(cx, true);
        else if (e == "carleson") r = harness::carleson(cx);
        else if (e == "gauge-integral") r = harness::gauge_integral_run(cx);
        else if (e == "boundary") r = harness::boundary(cx);
        else if (e == "equivalence") r = harness::equivalence(cx);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw std::runtime_error(e + ": " + ex.what());
    }

    nlohmann::ordered_json rep;
    rep["schema"] = kReportSchema;
    rep["toolkit_version"] = kToolkitVersion;
    rep["experiment"] = e;
    rep["config_hash"] = config_hash(cfg);
    rep["config"] = config_to_json(cfg);
    rep["model"] = cx.model.str();
    rep["domain"] = cx.D.str();
    rep["results"] = std::move(r.report["results"]);
    rep["pass"] = r.passed();
    r.report = std::move(rep);
    return r;
}

// ---------------------------------------------------------------------------
// Files

struct RunManifest {
    std::string config_hash;
    std::string toolkit_version = kToolkitVersion;
    double wall_time_s = 0;
    std::string started_utc;
    std::vector<std::string> outputs;
    nlohmann::ordered_json to_json() const {
        return {{"config_hash", config_hash},
                {"toolkit_version", toolkit_version},
                {"started_utc", started_utc},
                {"wall_time_s", wall_time_s},
                {"outputs", outputs}};
    }
};

/// cfg.out, else $CENSORED_OUT, else ./censored-runs.
inline std::filesystem::path output_dir(const ExperimentConfig& cfg) {
    if (!cfg.out.empty()) return cfg.out;
    if (const char* env = std::getenv("CENSORED_OUT"); env && *env) return env;
    return "censored-runs";
}

inline std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Run and write <exp>-<hash>.json, .csv and manifest-<exp>-<hash>.json.
inline std::pair<RunResult, RunManifest> run_and_write(const ExperimentConfig& cfg) {
    RunManifest man;
    man.started_utc = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    RunResult r = run_experiment(cfg);
    man.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    man.config_hash = config_hash(cfg);

    const auto dir = output_dir(cfg);
    std::filesystem::create_directories(dir);
    const std::string stem = cfg.exp + "-" + man.config_hash;
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        f << text;
        man.outputs.push_back((dir / name).string());
    };
    write(stem + ".json", r.report.dump(2) + "\n");
    write(stem + ".csv", r.csv);
    const std::string mpath = (dir / ("manifest-" + stem + ".json")).string();
    man.outputs.push_back(mpath);
    std::ofstream mf(mpath, std::ios::binary);
    if (!mf) throw std::runtime_error("cannot write " + mpath);
    mf << man.to_json().dump(2) << "\n";
    return {std::move(r), man};
}

}  // namespace censored
