#pragma once

// Complete Bernstein profiles phi and the scaling-exponent fit.
//
// A profile determines the canonical jump kernel j(r) = c * phi(r^-2) / r^n
// and the scale function Phi(r) = 1 / phi(r^-2). Scaling exponents are fitted
// on psi(s) := phi(s^2), the radial surrogate of the characteristic exponent.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "censored/errors.hpp"

namespace censored {

enum class ProfileFamily { Stable, StableSum, StableLog };

struct BernsteinProfile {
    ProfileFamily family = ProfileFamily::Stable;
    double alpha = 1.0;
    double beta = 0.0;   // StableSum second index
    double gamma = 0.0;  // StableLog log-power

    static BernsteinProfile stable(double alpha);
    static BernsteinProfile stable_sum(double alpha, double beta);
    static BernsteinProfile stable_log(double alpha, double gamma);

    /// Parse "stable:alpha=1.2", "stablesum:alpha=1.4,beta=0.6",
    /// "stablelog:alpha=1.0,gamma=0.2".
    static BernsteinProfile parse(const std::string& text);

    std::string str() const;
};

/// phi(lam) for lam > 0.
inline double phi(const BernsteinProfile& p, double lam) {
    if (!(lam > 0.0)) throw DomainError("phi: argument must be positive, got " + std::to_string(lam));
    switch (p.family) {
        case ProfileFamily::Stable:
            return std::pow(lam, 0.5 * p.alpha);
        case ProfileFamily::StableSum:
            return std::pow(lam, 0.5 * p.alpha) + std::pow(lam, 0.5 * p.beta);
        case ProfileFamily::StableLog:
            return std::pow(lam, 0.5 * p.alpha) * std::pow(std::log1p(lam), p.gamma);
    }
    return 0.0;
}

/// Phi(r) = 1 / phi(r^-2).
inline double big_phi(const BernsteinProfile& p, double r) {
    if (!(r > 0.0)) throw DomainError("big_phi: argument must be positive, got " + std::to_string(r));
    return 1.0 / phi(p, 1.0 / (r * r));
}

/// Exponents and constants of the two-sided power bounds
///   a_lo * lam^{2 d_lo} <= psi(lam t)/psi(t) <= a_hi * lam^{2 d_hi}
/// over t >= 1 (delta1, delta2) and t < 1 (delta3, delta4).
struct ScalingEstimate {
    double delta1 = 0, delta2 = 0, delta3 = 0, delta4 = 0;
    double a1 = 0, a2 = 0, a3 = 0, a4 = 0;
    bool valid_h1 = false;
    bool valid_h2 = false;
    bool valid() const { return valid_h1 && valid_h2; }
};

struct ScalingGrid {
    double large_lo = 1.0;   // t range for the large-scale condition
    double large_hi = 1e6;
    double small_lo = 1e-6;  // t range for the small-scale condition
    double small_hi = 1.0;
    double lam_hi = 1e6;     // dilation range [1, lam_hi]
    int per_decade = 10;
    /// Exponents come from secant slopes with lam >= lam_min; shorter
    /// dilations only enter through the multiplicative constants.
    double lam_min = 10.0;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int per_decade, bool include_hi) {
    std::vector<double> g;
    const double decades = std::log10(hi / lo);
    const int steps = std::max(1, static_cast<int>(std::lround(decades * per_decade)));
    for (int k = 0; k <= steps; ++k) {
        if (k == steps && !include_hi) break;
        g.push_back(lo * std::pow(10.0, decades * k / steps));
    }
    return g;
}

struct ExponentPair {
    double d_lo, d_hi, a_lo, a_hi;
};

inline ExponentPair fit_pair(const BernsteinProfile& p, const std::vector<double>& ts,
                             const std::vector<double>& lams, double lam_min) {
    auto psi = [&](double s) { return phi(p, s * s); };
    double slope_lo = std::numeric_limits<double>::infinity();
    double slope_hi = -std::numeric_limits<double>::infinity();
    for (double t : ts) {
        const double base = psi(t);
        for (double lam : lams) {
            if (lam < lam_min) continue;
            const double s = std::log(psi(lam * t) / base) / std::log(lam);
            slope_lo = std::min(slope_lo, s);
            slope_hi = std::max(slope_hi, s);
        }
    }
    ExponentPair out{0.5 * slope_lo, 0.5 * slope_hi, std::numeric_limits<double>::infinity(), 0.0};
    for (double t : ts) {
        const double base = psi(t);
        for (double lam : lams) {
            const double ratio = psi(lam * t) / base;
            out.a_lo = std::min(out.a_lo, ratio / std::pow(lam, slope_lo));
            out.a_hi = std::max(out.a_hi, ratio / std::pow(lam, slope_hi));
        }
    }
    return out;
}

}  // namespace detail

/// Fit the weak scaling exponents at infinity and at zero on a log-spaced grid. Exact for
/// pure powers; invalid fits are flagged, never thrown.
inline ScalingEstimate estimate_scaling_exponents(const BernsteinProfile& p, const ScalingGrid& g = {}) {
    if (g.large_lo > 1.0 || g.large_hi < 1e6 || g.small_lo > 1e-6 || g.small_hi < 1.0) {
        throw PreconditionError("estimate_scaling_exponents: grid must span [1,1e6] and [1e-6,1]");
    }
    const auto lams = detail::log_grid(1.0, g.lam_hi, g.per_decade, true);
    const auto t_large = detail::log_grid(g.large_lo, g.large_hi, g.per_decade, true);
    const auto t_small = detail::log_grid(g.small_lo, g.small_hi, g.per_decade, false);

    ScalingEstimate e;
    const auto h1 = detail::fit_pair(p, t_large, lams, g.lam_min);
    const auto h2 = detail::fit_pair(p, t_small, lams, g.lam_min);
    e.delta1 = h1.d_lo;
    e.delta2 = h1.d_hi;
    e.a1 = h1.a_lo;
    e.a2 = h1.a_hi;
    e.delta3 = h2.d_lo;
    e.delta4 = h2.d_hi;
    e.a3 = h2.a_lo;
    e.a4 = h2.a_hi;
    e.valid_h1 = e.delta1 > 0.0 && e.delta1 <= e.delta2 && e.delta2 < 1.0;
    e.valid_h2 = e.delta3 > 0.0 && e.delta3 <= e.delta4 && e.delta4 < 1.0;
    return e;
}

inline BernsteinProfile BernsteinProfile::stable(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw ConfigError("stable: alpha must lie in (0,2), got " + std::to_string(alpha));
    return {ProfileFamily::Stable, alpha, 0.0, 0.0};
}

inline BernsteinProfile BernsteinProfile::stable_sum(double alpha, double beta) {
    if (!(beta > 0.0 && beta < alpha && alpha < 2.0))
        throw ConfigError("stablesum: need 0 < beta < alpha < 2");
    return {ProfileFamily::StableSum, alpha, beta, 0.0};
}

inline BernsteinProfile BernsteinProfile::stable_log(double alpha, double gamma) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw ConfigError("stablelog: alpha must lie in (0,2), got " + std::to_string(alpha));
    BernsteinProfile p{ProfileFamily::StableLog, alpha, 0.0, gamma};
    const auto est = estimate_scaling_exponents(p);
    if (!est.valid()) {
        std::ostringstream os;
        os << "stablelog: gamma=" << gamma << " breaks weak scaling: fitted exponents ["
           << est.delta1 << ", " << est.delta2 << "] and [" << est.delta3 << ", " << est.delta4
           << "] must lie in (0,1)";
        throw ConfigError(os.str());
    }
    return p;
}

inline BernsteinProfile BernsteinProfile::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string fam = text.substr(0, colon);
    std::map<std::string, double> kv;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("profile: expected key=value in '" + item + "'");
            const std::string key = item.substr(0, eq);
            try {
                std::size_t used = 0;
                const double v = std::stod(item.substr(eq + 1), &used);
                if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
                kv[key] = v;
            } catch (const std::logic_error&) {
                throw ConfigError("profile: bad number for '" + key + "'");
            }
        }
    }
    auto take = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("profile '" + fam + "': missing " + key);
        const double v = it->second;
        kv.erase(it);
        return v;
    };
    BernsteinProfile p;
    if (fam == "stable") {
        p = stable(take("alpha"));
    } else if (fam == "stablesum") {
        const double a = take("alpha");
        p = stable_sum(a, take("beta"));
    } else if (fam == "stablelog") {
        const double a = take("alpha");
        p = stable_log(a, take("gamma"));
    } else {
        throw ConfigError("profile: unknown family '" + fam + "'");
    }
    if (!kv.empty()) throw ConfigError("profile: unknown key '" + kv.begin()->first + "'");
    return p;
}

inline std::string BernsteinProfile::str() const {
    std::ostringstream os;
    os.precision(17);
    switch (family) {
        case ProfileFamily::Stable:
            os << "stable:alpha=" << alpha;
            break;
        case ProfileFamily::StableSum:
            os << "stablesum:alpha=" << alpha << ",beta=" << beta;
            break;
        case ProfileFamily::StableLog:
            os << "stablelog:alpha=" << alpha << ",gamma=" << gamma;
            break;
    }
    return os.str();
}

}  // namespace censored
