#pragma once

// Flag parsing for the command-line front end. A config file gives the
// base values; flags given on the command line override them.

#include <CLI11.hpp>

#include <optional>
#include <string>
#include <vector>

#include "censored/harness.hpp"

namespace censored {

struct CliRequest {
    ExperimentConfig cfg;
    bool quiet = false;
    bool list = false;  // print experiment ids and exit
    std::string help;   // nonempty when --help was given
};

/// Throws ConfigError for bad flags or files.
inline CliRequest parse_args(const std::vector<std::string>& args) {
    CLI::App app{"Censored symmetric pure-jump process toolkit", "censored_cli"};
    std::optional<std::string> config, phi, calibration, domain, exp, green, out;
    std::optional<int> dim, halvings, workers;
    std::optional<std::uint64_t> N, triples, pairs, seed;
    std::optional<double> eps, rho, margin, r1, r, L, t;
    std::optional<std::vector<double>> horizons, scales, x, y;
    bool quiet = false, list = false;

    app.add_option("--config", config, "JSON config file; flags override its values");
    app.add_option("--exp", exp, "experiment id (see --list)");
    app.add_option("--phi", phi, "profile, e.g. stable:alpha=1.2, stablesum:alpha=1.4,beta=0.6");
    app.add_option("--calibration", calibration, "auto, standard, or a positive constant");
    app.add_option("--dim", dim, "ambient dimension 1..3");
    app.add_option("--domain", domain, "ball:r=1, box:0,0,1,1, annulus:rin=0.5,rout=1, interval:-1,1");
    app.add_option("-N,--N", N, "paths per estimate");
    app.add_option("--triples", triples, "samples per refinement level");
    app.add_option("--pairs", pairs, "point pairs or probes");
    app.add_option("--eps", eps, "small-jump cutoff; 0 picks one relative to the domain");
    app.add_option("--rho", rho, "occupation radius, or r0 for carleson");
    app.add_option("--margin", margin, "first sampling margin");
    app.add_option("--halvings", halvings, "margin halvings");
    app.add_option("--horizons", horizons, "boundary horizons")->delimiter(',');
    app.add_option("--r1", r1, "small-ball factor; 0 bisects for it");
    app.add_option("--r", r, "outer radius for the gauge experiments");
    app.add_option("--L", L, "Harnack pair separation in units of r");
    app.add_option("--scales", scales, "Harnack scales")->delimiter(',');
    app.add_option("--t", t, "time for the equivalence experiment");
    app.add_option("--x", x, "start or first point, comma separated")->delimiter(',');
    app.add_option("--y", y, "second point, comma separated")->delimiter(',');
    app.add_option("--green", green, "auto, oracle or mc");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--workers", workers, "worker threads; 0 uses all cores");
    app.add_option("--out", out, "output directory (default $CENSORED_OUT or ./censored-runs)");
    app.add_flag("-q,--quiet", quiet, "no summary line");
    app.add_flag("--list", list, "list experiments");

    CliRequest req;
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        req.help = app.help();
        return req;
    } catch (const CLI::ParseError& e) {
        throw ConfigError(std::string("arguments: ") + e.what());
    }

    req.quiet = quiet;
    req.list = list;
    ExperimentConfig& c = req.cfg;
    if (config) c = load_config_file(*config);
    if (exp) c.exp = *exp;
    if (phi) c.phi = *phi;
    if (calibration) c.calibration = *calibration;
    if (dim) c.dim = *dim;
    if (domain) c.domain = *domain;
    if (N) c.N = *N;
    if (triples) c.triples = *triples;
    if (pairs) c.pairs = *pairs;
    if (eps) c.eps = *eps;
    if (rho) c.rho = *rho;
    if (margin) c.margin = *margin;
    if (halvings) c.halvings = *halvings;
    if (horizons) c.horizons = *horizons;
    if (r1) c.r1 = *r1;
    if (r) c.r = *r;
    if (L) c.L = *L;
    if (scales) c.scales = *scales;
    if (t) c.t = *t;
    if (x) c.x = *x;
    if (y) c.y = *y;
    if (green) c.green = *green;
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    if (out) c.out = *out;
    if (!list) validate(c);
    return req;
}

inline CliRequest parse_args(int argc, const char* const* argv) {
    std::vector<std::string> a;
    for (int i = 1; i < argc; ++i) a.emplace_back(argv[i]);
    return parse_args(a);
}

}  // namespace censored
