#pragma once

// Domains with closed-form boundary distance, their kappa-fat structure, and
// the corridor quantities r(x,y), eps1 and the witness set used by the
// g-function estimates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "censored/errors.hpp"
#include "censored/point.hpp"
#include "censored/random.hpp"

namespace censored {

// BallPair is the union B(c1, r) u B(c2, r) used by the Harnack sweeps; it
// supports membership, depth and sampling only.
enum class Shape { Ball, Box, Annulus, Interval, BallPair };

/// A piece [from, to) of the complement D^c along a ray, in ray-length units.
/// `to` may be +inf.
struct RaySegment {
    double from;
    double to;
};

class Domain {
  public:
    static Domain ball(Point center, double radius);
    static Domain box(Point lo, Point hi);
    static Domain annulus(Point center, double r_in, double r_out);
    static Domain interval(double a, double b);
    static Domain ball_pair(Point c1, Point c2, double radius);

    /// Parse "ball:r=1", "ball:r=1,c=0.2;0", "box:0,0,2,1",
    /// "annulus:rin=0.5,rout=1", "interval:-1,1". Balls and annuli are
    /// centred at the origin of R^dim unless c= is given.
    static Domain parse(const std::string& text, int dim);

    Shape shape() const { return shape_; }
    int dim() const { return dim_; }
    const Point& center() const { return center_; }
    double radius() const { return r_out_; }
    double inner_radius() const { return r_in_; }
    const Point& lo() const { return lo_; }
    const Point& hi() const { return hi_; }
    double fat_R() const { return fat_R_; }
    double fat_kappa() const { return fat_kappa_; }
    std::string str() const;

    /// Radially symmetric shapes (ball, annulus, interval) admit 1-D tables.
    bool is_radial() const { return shape_ != Shape::Box && shape_ != Shape::BallPair; }

    /// Second centre of a ball pair.
    const Point& second_center() const { return lo_; }

    bool contains(const Point& x) const { return signed_depth(x) > 0.0; }

    /// delta_D(x) = d(x, D^c); zero outside D.
    double dist_to_boundary(const Point& x) const { return std::max(0.0, signed_depth(x)); }

    /// Positive inside, negative outside; |value| is the distance to the
    /// boundary for interior points and for points outside a convex shape.
    /// For a ball pair the interior value is a lower bound.
    double signed_depth(const Point& x) const;

    double diam() const;
    double volume() const;

    /// Closest boundary point; for interior points this realizes delta_D(x).
    Point nearest_boundary_point(const Point& x) const;

    /// Deepest point and its depth.
    Point incenter() const;
    double inradius() const;

    /// Center A_r(Q) of a ball B(A, kappa r) inside D and B(Q, r).
    Point fat_point(const Point& q, double r) const;

    /// Complement of D along {x + t e : t > 0}, as sorted segments.
    int ray_exterior(const Point& x, const Point& e, RaySegment out[2]) const;

    Point sample_interior(Rng& rng, double margin = 0.0) const;
    Point sample_boundary(Rng& rng) const;

  private:
    Shape shape_ = Shape::Ball;
    int dim_ = 1;
    Point center_, lo_, hi_;
    double r_in_ = 0.0, r_out_ = 0.0;
    double fat_R_ = 0.0, fat_kappa_ = 0.5;

    double min_side() const;
    void check_dim(const Point& x) const {
        if (x.dim() != dim_)
            throw DomainError("point of dimension " + std::to_string(x.dim()) + " used with a " +
                              std::to_string(dim_) + "-dimensional domain");
    }
};

// ---------------------------------------------------------------------------

inline Domain Domain::ball(Point center, double radius) {
    if (!(radius > 0)) throw ConfigError("ball: radius must be positive");
    Domain d;
    d.shape_ = Shape::Ball;
    d.dim_ = center.dim();
    d.center_ = center;
    d.r_out_ = radius;
    d.fat_R_ = 2.0 * radius;
    d.fat_kappa_ = 0.5;
    return d;
}

inline Domain Domain::box(Point lo, Point hi) {
    if (lo.dim() != hi.dim()) throw ConfigError("box: corner dimensions differ");
    for (int i = 0; i < lo.dim(); ++i)
        if (!(hi[i] > lo[i])) throw ConfigError("box: need lo < hi in every coordinate");
    Domain d;
    d.shape_ = Shape::Box;
    d.dim_ = lo.dim();
    d.lo_ = lo;
    d.hi_ = hi;
    d.center_ = 0.5 * (lo + hi);
    // Inward diagonal construction: A = Q + (r/2) u with u the unit vector
    // pointing to the centre orthant; valid for r < s sqrt(n)/2.
    const double rn = std::sqrt(static_cast<double>(d.dim_));
    d.fat_R_ = d.min_side() * rn / 2.0;
    d.fat_kappa_ = 1.0 / (2.0 * rn);
    return d;
}

inline Domain Domain::annulus(Point center, double r_in, double r_out) {
    if (!(r_in > 0 && r_out > r_in)) throw ConfigError("annulus: need 0 < rin < rout");
    if (center.dim() < 2) throw ConfigError("annulus: dimension must be at least 2");
    Domain d;
    d.shape_ = Shape::Annulus;
    d.dim_ = center.dim();
    d.center_ = center;
    d.r_in_ = r_in;
    d.r_out_ = r_out;
    d.fat_R_ = r_out - r_in;
    d.fat_kappa_ = 0.5;
    return d;
}

inline Domain Domain::interval(double a, double b) {
    if (!(b > a)) throw ConfigError("interval: need a < b");
    Domain d;
    d.shape_ = Shape::Interval;
    d.dim_ = 1;
    d.lo_ = Point{a};
    d.hi_ = Point{b};
    d.center_ = Point{0.5 * (a + b)};
    d.r_out_ = 0.5 * (b - a);
    d.fat_R_ = b - a;
    d.fat_kappa_ = 0.5;
    return d;
}

inline Domain Domain::ball_pair(Point c1, Point c2, double radius) {
    if (!(radius > 0)) throw ConfigError("ball pair: radius must be positive");
    if (c1.dim() != c2.dim()) throw ConfigError("ball pair: centre dimensions differ");
    Domain d;
    d.shape_ = Shape::BallPair;
    d.dim_ = c1.dim();
    d.center_ = c1;
    d.lo_ = c2;
    d.hi_ = c2;
    d.r_out_ = radius;
    d.fat_R_ = 0.0;
    return d;
}

inline double Domain::min_side() const {
    double s = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim_; ++i) s = std::min(s, hi_[i] - lo_[i]);
    return s;
}

inline double Domain::signed_depth(const Point& x) const {
    check_dim(x);
    switch (shape_) {
        case Shape::Ball:
            return r_out_ - distance(x, center_);
        case Shape::BallPair:
            return r_out_ - std::min(distance(x, center_), distance(x, lo_));
        case Shape::Annulus: {
            const double r = distance(x, center_);
            return std::min(r - r_in_, r_out_ - r);
        }
        case Shape::Interval:
            return std::min(x[0] - lo_[0], hi_[0] - x[0]);
        case Shape::Box: {
            double inside = std::numeric_limits<double>::infinity();
            double out2 = 0.0;
            bool outside = false;
            for (int i = 0; i < dim_; ++i) {
                const double a = x[i] - lo_[i], b = hi_[i] - x[i];
                inside = std::min(inside, std::min(a, b));
                const double o = std::max({-a, -b, 0.0});
                if (o > 0) outside = true;
                out2 += o * o;
            }
            return outside ? -std::sqrt(out2) : inside;
        }
    }
    return 0.0;
}

inline double Domain::diam() const {
    switch (shape_) {
        case Shape::Ball:
        case Shape::Annulus:
        case Shape::Interval:
            return 2.0 * r_out_;
        case Shape::BallPair:
            return 2.0 * r_out_ + distance(center_, lo_);
        case Shape::Box:
            return distance(lo_, hi_);
    }
    return 0.0;
}

inline double Domain::volume() const {
    switch (shape_) {
        case Shape::Ball:
        case Shape::Interval:
            return ball_volume(dim_, r_out_);
        case Shape::Annulus:
            return ball_volume(dim_, r_out_) - ball_volume(dim_, r_in_);
        case Shape::BallPair:
            throw PreconditionError("volume: not available for a ball pair");
        case Shape::Box: {
            double v = 1.0;
            for (int i = 0; i < dim_; ++i) v *= hi_[i] - lo_[i];
            return v;
        }
    }
    return 0.0;
}

inline Point Domain::nearest_boundary_point(const Point& x) const {
    check_dim(x);
    auto radial_dir = [&]() {
        Point d = x - center_;
        const double r = d.norm();
        return r > 0 ? d * (1.0 / r) : Point::axis(dim_, 0);
    };
    switch (shape_) {
        case Shape::Ball:
            return center_ + radial_dir() * r_out_;
        case Shape::BallPair: {
            // boundary point of the ball realizing the depth bound
            const Point& c = distance(x, center_) <= distance(x, lo_) ? center_ : lo_;
            Point d = x - c;
            const double r = d.norm();
            return c + (r > 0 ? d * (1.0 / r) : Point::axis(dim_, 0)) * r_out_;
        }
        case Shape::Annulus: {
            const double r = distance(x, center_);
            const double rad = (r - r_in_ < r_out_ - r) ? r_in_ : r_out_;
            return center_ + radial_dir() * rad;
        }
        case Shape::Interval:
            return Point{(x[0] - lo_[0] <= hi_[0] - x[0]) ? lo_[0] : hi_[0]};
        case Shape::Box: {
            Point q = x;
            int best_axis = 0;
            bool to_lo = true;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < dim_; ++i) {
                q[i] = std::clamp(x[i], lo_[i], hi_[i]);
                if (x[i] - lo_[i] < best) best = x[i] - lo_[i], best_axis = i, to_lo = true;
                if (hi_[i] - x[i] < best) best = hi_[i] - x[i], best_axis = i, to_lo = false;
            }
            if (signed_depth(x) > 0) q[best_axis] = to_lo ? lo_[best_axis] : hi_[best_axis];
            return q;
        }
    }
    return x;
}

inline Point Domain::incenter() const {
    if (shape_ == Shape::Annulus) return center_ + Point::axis(dim_, 0, 0.5 * (r_in_ + r_out_));
    return center_;
}

inline double Domain::inradius() const {
    switch (shape_) {
        case Shape::Ball:
        case Shape::Interval:
        case Shape::BallPair:
            return r_out_;
        case Shape::Annulus:
            return 0.5 * (r_out_ - r_in_);
        case Shape::Box:
            return 0.5 * min_side();
    }
    return 0.0;
}

inline Point Domain::fat_point(const Point& q, double r) const {
    check_dim(q);
    if (shape_ == Shape::BallPair) throw PreconditionError("fat_point: not available for a ball pair");
    if (!(r > 0.0 && r < fat_R_))
        throw DomainError("fat_point: r=" + std::to_string(r) + " outside (0, R=" + std::to_string(fat_R_) + ")");
    const double tol = 1e-9 * diam();
    if (std::abs(signed_depth(q)) > tol && !(shape_ == Shape::Box && std::abs(signed_depth(q)) <= tol))
        throw DomainError("fat_point: Q=" + q.str() + " is not on the boundary");
    switch (shape_) {
        case Shape::Ball: {
            Point u = center_ - q;
            return q + u * (0.5 * r / u.norm());
        }
        case Shape::Annulus: {
            Point u = q - center_;
            const double rq = u.norm();
            const double sgn = (std::abs(rq - r_in_) < std::abs(rq - r_out_)) ? 1.0 : -1.0;
            return q + u * (sgn * 0.5 * r / rq);
        }
        case Shape::Interval:
            return Point{(q[0] - lo_[0] < hi_[0] - q[0]) ? q[0] + 0.5 * r : q[0] - 0.5 * r};
        case Shape::BallPair:
            break;
        case Shape::Box: {
            Point a = q;
            const double step = 0.5 * r / std::sqrt(static_cast<double>(dim_));
            for (int i = 0; i < dim_; ++i) a[i] += (q[i] <= center_[i]) ? step : -step;
            return a;
        }
    }
    return q;
}

namespace detail {
// Roots of |p + t e|^2 = rad^2 with |e| = 1; returns false when the ray's
// line misses the sphere.
inline bool sphere_hits(const Point& p, const Point& e, double rad, double& t1, double& t2) {
    const double b = p.dot(e);
    const double c = p.norm2() - rad * rad;
    const double disc = b * b - c;
    if (disc <= 0) return false;
    const double s = std::sqrt(disc);
    t1 = -b - s;
    t2 = -b + s;
    return true;
}
}  // namespace detail

inline int Domain::ray_exterior(const Point& x, const Point& e, RaySegment out[2]) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const Point p = x - center_;
    switch (shape_) {
        case Shape::Ball: {
            double t1, t2;
            detail::sphere_hits(p, e, r_out_, t1, t2);
            out[0] = {std::max(0.0, t2), inf};
            return 1;
        }
        case Shape::Interval:
            out[0] = {e[0] > 0 ? hi_[0] - x[0] : x[0] - lo_[0], inf};
            return 1;
        case Shape::Box: {
            double t = inf;
            for (int i = 0; i < dim_; ++i) {
                if (e[i] > 0) t = std::min(t, (hi_[i] - x[i]) / e[i]);
                if (e[i] < 0) t = std::min(t, (lo_[i] - x[i]) / e[i]);
            }
            out[0] = {std::max(0.0, t), inf};
            return 1;
        }
        case Shape::Annulus: {
            double t1, t2, s1, s2;
            detail::sphere_hits(p, e, r_out_, t1, t2);
            int k = 0;
            if (detail::sphere_hits(p, e, r_in_, s1, s2) && s1 > 0) out[k++] = {s1, s2};
            out[k++] = {std::max(0.0, t2), inf};
            return k;
        }
        case Shape::BallPair:
            throw PreconditionError("ray_exterior: not available for a ball pair");
    }
    return 0;
}

inline Point Domain::sample_interior(Rng& rng, double margin) const {
    if (margin < 0) throw ConfigError("sample_interior: margin must be nonnegative");
    auto empty = [&] {
        throw ConfigError("sample_interior: no points at depth >= " + std::to_string(margin) + " in " + str());
    };
    switch (shape_) {
        case Shape::Ball: {
            const double rad = r_out_ - margin;
            if (!(rad > 0)) empty();
            const double rr = rad * std::pow(uniform01(rng), 1.0 / dim_);
            return center_ + random_direction(dim_, rng) * rr;
        }
        case Shape::BallPair: {
            // uniform on the union: pick a ball, reject points counted twice
            const double rad = r_out_ - margin;
            if (!(rad > 0)) empty();
            for (;;) {
                const bool first = uniform01(rng) < 0.5;
                const Point& c = first ? center_ : lo_;
                const Point& o = first ? lo_ : center_;
                const Point x = c + random_direction(dim_, rng) * (rad * std::pow(uniform01(rng), 1.0 / dim_));
                if (distance(x, o) < rad && uniform01(rng) < 0.5) continue;
                return x;
            }
        }
        case Shape::Interval: {
            const double a = lo_[0] + margin, b = hi_[0] - margin;
            if (!(b > a)) empty();
            return Point{a + (b - a) * uniform01(rng)};
        }
        case Shape::Box: {
            Point x(dim_);
            for (int i = 0; i < dim_; ++i) {
                const double a = lo_[i] + margin, b = hi_[i] - margin;
                if (!(b > a)) empty();
                x[i] = a + (b - a) * uniform01(rng);
            }
            return x;
        }
        case Shape::Annulus: {
            const double a = r_in_ + margin, b = r_out_ - margin;
            if (!(b > a)) empty();
            const double an = std::pow(a, dim_), bn = std::pow(b, dim_);
            const double rr = std::pow(an + (bn - an) * uniform01(rng), 1.0 / dim_);
            return center_ + random_direction(dim_, rng) * rr;
        }
    }
    return center_;
}

inline Point Domain::sample_boundary(Rng& rng) const {
    switch (shape_) {
        case Shape::Ball:
            return center_ + random_direction(dim_, rng) * r_out_;
        case Shape::BallPair:
            throw PreconditionError("sample_boundary: not available for a ball pair");
        case Shape::Interval:
            return Point{uniform01(rng) < 0.5 ? lo_[0] : hi_[0]};
        case Shape::Annulus: {
            const double w_in = std::pow(r_in_, dim_ - 1), w_out = std::pow(r_out_, dim_ - 1);
            const double rad = uniform01(rng) * (w_in + w_out) < w_in ? r_in_ : r_out_;
            return center_ + random_direction(dim_, rng) * rad;
        }
        case Shape::Box: {
            // Face chosen with probability proportional to its (n-1)-volume.
            std::vector<double> area(dim_, 1.0);
            double total = 0;
            for (int i = 0; i < dim_; ++i) {
                for (int k = 0; k < dim_; ++k)
                    if (k != i) area[i] *= hi_[k] - lo_[k];
                total += 2 * area[i];
            }
            double u = uniform01(rng) * total;
            int axis = 0;
            bool upper = false;
            for (int i = 0; i < dim_; ++i) {
                if (u < area[i]) { axis = i; upper = false; break; }
                u -= area[i];
                if (u < area[i]) { axis = i; upper = true; break; }
                u -= area[i];
                axis = i;
                upper = true;
            }
            Point x(dim_);
            for (int k = 0; k < dim_; ++k) x[k] = lo_[k] + (hi_[k] - lo_[k]) * uniform01(rng);
            x[axis] = upper ? hi_[axis] : lo_[axis];
            return x;
        }
    }
    return center_;
}

inline std::string Domain::str() const {
    std::ostringstream os;
    os.precision(17);
    auto pt = [&](const Point& p) {
        for (int i = 0; i < p.dim(); ++i) os << (i ? ";" : "") << p[i];
    };
    switch (shape_) {
        case Shape::Ball:
            os << "ball:r=" << r_out_ << ",c=";
            pt(center_);
            break;
        case Shape::Annulus:
            os << "annulus:rin=" << r_in_ << ",rout=" << r_out_ << ",c=";
            pt(center_);
            break;
        case Shape::Interval:
            os << "interval:" << lo_[0] << "," << hi_[0];
            break;
        case Shape::BallPair:
            os << "ballpair:r=" << r_out_ << ",c=";
            pt(center_);
            os << ",c2=";
            pt(lo_);
            break;
        case Shape::Box:
            os << "box:";
            for (int i = 0; i < dim_; ++i) os << lo_[i] << ",";
            for (int i = 0; i < dim_; ++i) os << hi_[i] << (i + 1 < dim_ ? "," : "");
            break;
    }
    return os.str();
}

inline Domain Domain::parse(const std::string& text, int dim) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("domain: expected '<shape>:<params>' in '" + text + "'");
    const std::string shape = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    auto number = [](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::logic_error&) {
            throw ConfigError("domain: bad number '" + s + "'");
        }
    };
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, sep)) out.push_back(item);
        return out;
    };

    if (shape == "box" || shape == "interval") {
        std::vector<double> v;
        for (const auto& tok : split(rest, ',')) v.push_back(number(tok));
        if (shape == "interval") {
            if (v.size() != 2) throw ConfigError("interval: expected 'interval:a,b'");
            return interval(v[0], v[1]);
        }
        if (v.size() % 2 != 0 || v.empty() || static_cast<int>(v.size() / 2) > kMaxDim)
            throw ConfigError("box: expected 2n corner coordinates");
        const int n = static_cast<int>(v.size() / 2);
        Point lo(n), hi(n);
        for (int i = 0; i < n; ++i) lo[i] = v[i], hi[i] = v[n + i];
        return box(lo, hi);
    }

    std::map<std::string, std::string> kv;
    for (const auto& tok : split(rest, ',')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ConfigError("domain: expected key=value in '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    Point c = Point::zero(dim);
    if (auto it = kv.find("c"); it != kv.end()) {
        const auto parts = split(it->second, ';');
        if (static_cast<int>(parts.size()) != dim) throw ConfigError("domain: centre must have " + std::to_string(dim) + " coordinates");
        for (int i = 0; i < dim; ++i) c[i] = number(parts[i]);
        kv.erase(it);
    }
    auto take = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError(shape + ": missing " + key);
        const double v = number(it->second);
        kv.erase(it);
        return v;
    };
    Domain d;
    if (shape == "ball") {
        d = ball(c, take("r"));
    } else if (shape == "annulus") {
        const double a = take("rin");
        d = annulus(c, a, take("rout"));
    } else {
        throw ConfigError("domain: unknown shape '" + shape + "'");
    }
    if (!kv.empty()) throw ConfigError("domain: unknown key '" + kv.begin()->first + "'");
    return d;
}

// ---------------------------------------------------------------------------
// Corridor quantities.

struct Corridor {
    double r_xy = 0;  // delta(x) v delta(y) v |x-y|
    double eps1 = 0;  // kappa R / 24
    Point witness;    // canonical element of the witness set
    Point z0;         // deep reference point
    bool uses_z0 = false;
};

/// Deep reference point z0 (the incenter) with kappa R <= delta(z0) <= R.
inline Point reference_point(const Domain& d) {
    const double depth = d.inradius();
    const double kr = d.fat_kappa() * d.fat_R();
    if (depth < kr || depth > d.fat_R())
        throw ConfigError("reference point: incenter depth " + std::to_string(depth) + " outside [kappa R, R] = [" +
                          std::to_string(kr) + ", " + std::to_string(d.fat_R()) + "]");
    return d.incenter();
}

inline Corridor corridor(const Domain& d, const Point& x, const Point& y) {
    if (!d.contains(x) || !d.contains(y)) throw DomainError("corridor: points must be interior");
    Corridor c;
    c.z0 = reference_point(d);
    c.r_xy = std::max({d.dist_to_boundary(x), d.dist_to_boundary(y), distance(x, y)});
    c.eps1 = d.fat_kappa() * d.fat_R() / 24.0;
    if (c.r_xy >= c.eps1) {
        c.witness = c.z0;
        c.uses_z0 = true;
    } else {
        c.witness = d.fat_point(d.nearest_boundary_point(x), c.r_xy);
    }
    return c;
}

/// Membership predicate of the witness set for r(x,y) < eps1.
inline bool in_witness_set(const Domain& d, const Point& x, const Point& y, const Point& a) {
    const double r = std::max({d.dist_to_boundary(x), d.dist_to_boundary(y), distance(x, y)});
    return d.contains(a) && d.dist_to_boundary(a) > 0.5 * d.fat_kappa() * r &&
           std::max(distance(x, a), distance(y, a)) < 5.0 * r;
}

/// Triples of independent interior samples, each at depth >= margin.
struct Triple {
    Point x, y, z;
};

inline std::vector<Triple> sample_triples(const Domain& d, std::size_t n, double margin, Rng& rng) {
    std::vector<Triple> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Point x = d.sample_interior(rng, margin);
        Point y = d.sample_interior(rng, margin);
        Point z = d.sample_interior(rng, margin);
        out.push_back({x, y, z});
    }
    return out;
}

}  // namespace censored
