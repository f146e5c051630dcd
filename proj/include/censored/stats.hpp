#pragma once

// Monte Carlo summaries: estimates with standard errors, mergeable moment
// accumulators, ratio errors and binomial intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include <boost/math/distributions/normal.hpp>

namespace censored {

struct Estimate {
    double value = 0;
    double stderr_ = 0;
    std::uint64_t n_paths = 0;
    std::map<std::string, std::uint64_t> diagnostics;

    bool indeterminate(double k = 3.0) const { return std::abs(value) <= k * stderr_; }
};

/// Sums of x and x^2 (and a cross term for paired ratios), mergeable in order.
struct Moments {
    std::uint64_t n = 0;
    double sx = 0, sxx = 0, sy = 0, syy = 0, sxy = 0;

    void add(double x, double y = 0) {
        ++n;
        sx += x;
        sxx += x * x;
        sy += y;
        syy += y * y;
        sxy += x * y;
    }
    void merge(const Moments& o) {
        n += o.n;
        sx += o.sx;
        sxx += o.sxx;
        sy += o.sy;
        syy += o.syy;
        sxy += o.sxy;
    }
    double mean_x() const { return n ? sx / n : 0; }
    double mean_y() const { return n ? sy / n : 0; }
    double var_x() const { return n > 1 ? std::max(0.0, (sxx - sx * sx / n) / (n - 1)) : 0; }
    double var_y() const { return n > 1 ? std::max(0.0, (syy - sy * sy / n) / (n - 1)) : 0; }
    double cov_xy() const { return n > 1 ? (sxy - sx * sy / n) / (n - 1) : 0; }

    Estimate estimate_x(double scale = 1.0) const {
        Estimate e;
        e.value = scale * mean_x();
        e.stderr_ = n ? std::abs(scale) * std::sqrt(var_x() / n) : 0;
        e.n_paths = n;
        return e;
    }
    Estimate estimate_y(double scale = 1.0) const {
        Estimate e;
        e.value = scale * mean_y();
        e.stderr_ = n ? std::abs(scale) * std::sqrt(var_y() / n) : 0;
        e.n_paths = n;
        return e;
    }
    /// mean(x)/mean(y) with delta-method error for paired samples.
    Estimate ratio_xy() const {
        Estimate e;
        e.n_paths = n;
        const double mx = mean_x(), my = mean_y();
        if (my == 0) {
            e.value = std::numeric_limits<double>::quiet_NaN();
            return e;
        }
        const double r = mx / my;
        const double v = (var_x() - 2 * r * cov_xy() + r * r * var_y()) / (my * my);
        e.value = r;
        e.stderr_ = std::sqrt(std::max(0.0, v) / n);
        return e;
    }
};

/// Ratio of independent estimates with first-order error propagation.
inline Estimate ratio(const Estimate& a, const Estimate& b) {
    Estimate e;
    e.n_paths = std::min(a.n_paths, b.n_paths);
    e.value = a.value / b.value;
    const double ra = a.value != 0 ? a.stderr_ / a.value : 0, rb = b.stderr_ / b.value;
    e.stderr_ = std::abs(e.value) * std::sqrt(ra * ra + rb * rb);
    return e;
}

inline double combined_sigma(const Estimate& a, const Estimate& b) {
    return std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
}

/// Wilson score interval for k successes in n trials.
inline std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double level = 0.95) {
    if (n == 0) return {0.0, 1.0};
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2);
    const double p = static_cast<double>(k) / n, nn = static_cast<double>(n);
    const double den = 1 + z * z / nn;
    const double c = (p + z * z / (2 * nn)) / den;
    const double h = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / den;
    return {k == 0 ? 0.0 : std::max(0.0, c - h), k == n ? 1.0 : std::min(1.0, c + h)};
}

}  // namespace censored
