#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace censored {

/// Largest ambient dimension supported by the fixed-capacity point type.
inline constexpr int kMaxDim = 3;

/// A point (or displacement) in R^n, n <= kMaxDim. Value type; the dimension
/// travels with the value so mixed-dimension arithmetic is caught early.
class Point {
  public:
    Point() = default;
    explicit Point(int dim) : dim_(dim) {
        if (dim < 1 || dim > kMaxDim) {
            throw std::invalid_argument("Point: dimension " + std::to_string(dim) +
                                        " outside [1, " + std::to_string(kMaxDim) + "]");
        }
    }
    Point(std::initializer_list<double> xs) : Point(static_cast<int>(xs.size())) {
        std::copy(xs.begin(), xs.end(), c_.begin());
    }

    static Point zero(int dim) { return Point(dim); }
    static Point axis(int dim, int k, double len = 1.0) {
        Point p(dim);
        p[k] = len;
        return p;
    }

    int dim() const { return dim_; }
    double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    const double* begin() const { return c_.data(); }
    const double* end() const { return c_.data() + dim_; }

    Point& operator+=(const Point& o) {
        for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
        return *this;
    }
    Point& operator-=(const Point& o) {
        for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Point& operator*=(double s) {
        for (int i = 0; i < dim_; ++i) c_[i] *= s;
        return *this;
    }

    friend Point operator+(Point a, const Point& b) { return a += b; }
    friend Point operator-(Point a, const Point& b) { return a -= b; }
    friend Point operator*(Point a, double s) { return a *= s; }
    friend Point operator*(double s, Point a) { return a *= s; }
    friend bool operator==(const Point& a, const Point& b) {
        if (a.dim_ != b.dim_) return false;
        for (int i = 0; i < a.dim_; ++i)
            if (a.c_[i] != b.c_[i]) return false;
        return true;
    }

    double dot(const Point& o) const {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += c_[i] * o.c_[i];
        return s;
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }

    std::string str() const {
        std::string s = "(";
        for (int i = 0; i < dim_; ++i) {
            if (i) s += ", ";
            s += std::to_string(c_[i]);
        }
        return s + ")";
    }

  private:
    int dim_ = 1;
    std::array<double, kMaxDim> c_{};
};

inline double distance(const Point& a, const Point& b) { return (a - b).norm(); }

/// Surface area of the unit sphere S^{n-1} (n=1 gives the two-point sphere).
inline double unit_sphere_area(int n) {
    return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Lebesgue volume of the n-ball of radius r.
inline double ball_volume(int n, double r) {
    return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(r, n);
}

}  // namespace censored
