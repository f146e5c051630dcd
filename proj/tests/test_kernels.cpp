#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "censored/kernels.hpp"

using namespace censored;

namespace {

LevyModel stable(int n, double a) { return LevyModel(n, BernsteinProfile::stable(a)); }

// Closed-form jump rate of Stable(alpha) with unit calibration.
double stable_rate(int n, double a, double eps) { return unit_sphere_area(n) * std::pow(eps, -a) / a; }

}  // namespace

TEST(Kernels, DensityValues) {
    EXPECT_DOUBLE_EQ(levy_density(stable(2, 1.0), 0.5), 8.0);
    EXPECT_DOUBLE_EQ(levy_density(stable(1, 1.0), 2.0), 0.25);
    for (const auto& m : {stable(2, 1.3), LevyModel(2, BernsteinProfile::stable_sum(1.4, 0.6)),
                          LevyModel(3, BernsteinProfile::stable_log(1.0, 0.2))}) {
        EXPECT_GE(levy_density(m, 0.5), levy_density(m, 1.0));
        double prev = levy_density(m, 1e-4);
        for (double r = 1e-4; r < 1e3; r *= 1.1) {
            const double v = levy_density(m, r);
            EXPECT_GT(v, 0);
            EXPECT_LE(v, prev);
            prev = v;
        }
        EXPECT_TRUE(std::isfinite(unit_shift_constant(m)));
    }
    EXPECT_THROW(levy_density(stable(2, 1.0), 0.0), DomainError);
}

TEST(Kernels, Normalization) {
    EXPECT_NEAR(stable_normalization(2, 1.2), 0.17674, 1e-4);
    EXPECT_NEAR(stable_normalization(1, 1.0), 1.0 / M_PI, 1e-14);
    // alpha = 1, n = 2: Gamma(3/2) / (pi Gamma(1/2)) = 1/(2 pi)
    EXPECT_NEAR(stable_normalization(2, 1.0), 1.0 / (2 * M_PI), 1e-14);
}

TEST(Kernels, TailMassValues) {
    EXPECT_NEAR(tail_mass(stable(2, 1.0), 1.0), 2 * M_PI, 1e-8 * 2 * M_PI);
    EXPECT_NEAR(tail_mass(stable(2, 1.0), 0.5), 4 * M_PI, 1e-8 * 4 * M_PI);
    EXPECT_GE(tail_mass(stable(2, 1.0), 0.3), tail_mass(stable(2, 1.0), 0.4));
    EXPECT_THROW(tail_mass(stable(2, 1.0), 0.0), DomainError);
}

TEST(Kernels, TailMassMatchesClosedForm) {
    for (int n : {1, 2, 3})
        for (double a : {0.3, 0.8, 1.2, 1.7})
            for (double eps : {1e-6, 1e-3, 0.1, 1.0, 30.0}) {
                const double exact = stable_rate(n, a, eps);
                EXPECT_NEAR(tail_mass(stable(n, a), eps) / exact, 1.0, 1e-6) << n << " " << a << " " << eps;
            }
}

TEST(Kernels, SumProfileTailIsSumOfTails) {
    const LevyModel m(2, BernsteinProfile::stable_sum(1.4, 0.6));
    for (double eps : {1e-3, 0.5, 10.0})
        EXPECT_NEAR(tail_mass(m, eps) / (stable_rate(2, 1.4, eps) + stable_rate(2, 0.6, eps)), 1.0, 1e-7);
}

TEST(Kernels, SmallJumpVariance) {
    EXPECT_NEAR(small_jump_variance(stable(2, 1.0), 1.0), M_PI, 1e-9);
    EXPECT_NEAR(small_jump_variance(stable(2, 1.0), 0.5), M_PI / 2, 1e-9);
    EXPECT_LT(small_jump_variance(stable(2, 1.5), 1e-16), 1e-6);
    EXPECT_LT(small_jump_variance(stable(2, 1.5), 1e-4), small_jump_variance(stable(2, 1.5), 1e-3));
    // independent check by direct radial quadrature for a log profile
    const LevyModel m(2, BernsteinProfile::stable_log(1.0, 0.2));
    auto f = [&](double r) { return r * r * levy_density(m, r) * r; };
    const double direct = 2 * M_PI / 2 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 0.3, 20, 1e-12);
    EXPECT_NEAR(small_jump_variance(m, 0.3) / direct, 1.0, 1e-6);
}

TEST(Kernels, TailTableIsExactForPowers) {
    const RadialTail t(stable(2, 1.2));
    EXPECT_GE(t.knots(), 2048u);
    for (double s : {1e-12, 3.7e-5, 0.01, 0.77, 5.0, 1e4}) {
        EXPECT_NEAR(t.value(s) / (std::pow(s, -1.2) / 1.2), 1.0, 1e-10);
        EXPECT_NEAR(t.rate(s) / stable_rate(2, 1.2, s), 1.0, 1e-10);
    }
    // extrapolation beyond the table keeps the power law
    EXPECT_NEAR(t.value(1e12) / (std::pow(1e12, -1.2) / 1.2), 1.0, 1e-8);
    EXPECT_EQ(t.value(std::numeric_limits<double>::infinity()), 0.0);
}

TEST(Kernels, TailTableInverse) {
    const RadialTail t(LevyModel(2, BernsteinProfile::stable_log(1.0, 0.2)));
    for (double s : {1e-9, 1e-3, 0.2, 3.0}) {
        EXPECT_NEAR(t.inverse_log(t.log_value(s)) / s, 1.0, 1e-12);
        EXPECT_NEAR(t.value(s) / radial_tail_exact(t.model(), s), 1.0, 1e-5);
    }
    // u = 1 gives the cutoff itself; smaller u gives longer jumps
    EXPECT_NEAR(t.sample_radius(0.01, 1.0), 0.01, 1e-12);
    EXPECT_GT(t.sample_radius(0.01, 0.5), 0.01);
    // n = 2, alpha = 1: T(r) / T(eps) = eps / r
    const RadialTail c(stable(2, 1.0));
    EXPECT_NEAR(c.sample_radius(0.01, 0.25), 0.04, 1e-12);
}

TEST(Kernels, KillingDensityBallAndInterval) {
    const auto disc = Domain::ball(Point{0.0, 0.0}, 1.0);
    EXPECT_NEAR(killing_density(stable(2, 1.0), disc, Point{0.0, 0.0}), 2 * M_PI, 1e-4 * 2 * M_PI);
    EXPECT_NEAR(killing_density(stable(1, 1.0), Domain::interval(-1, 1), Point{0.0}), 2.0, 1e-8);
    const RadialTail t(stable(2, 1.0));
    EXPECT_GT(killing_density(t, disc, Point{0.99, 0.0}), killing_density(t, disc, Point{0.9, 0.0}));
    EXPECT_THROW(killing_density(t, disc, Point{1.0, 0.0}), DomainError);
    EXPECT_THROW(killing_density(t, disc, Point{1.5, 0.0}), DomainError);
}

TEST(Kernels, KillingDensityIntervalClosedForm) {
    const auto m = stable(1, 1.3);
    const auto d = Domain::interval(-1, 1);
    for (double x : {-0.9, 0.0, 0.42, 0.999}) {
        const double exact = (std::pow(1 - x, -1.3) + std::pow(1 + x, -1.3)) / 1.3;
        EXPECT_NEAR(killing_density(m, d, Point{x}) / exact, 1.0, 1e-8);
    }
}

TEST(Kernels, KillingDensityMatchesExteriorQuadrature) {
    // Independent evaluation in polar coordinates about the ball centre:
    // kappa(x) = int_1^inf int_0^2pi j(|y - x|) rho d(theta) d(rho), rho = 1/s.
    const auto m = LevyModel(2, BernsteinProfile::stable_sum(1.4, 0.6));
    const auto disc = Domain::ball(Point{0.0, 0.0}, 1.0);
    const RadialTail t(m);
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    for (double px : {0.0, 0.5, 0.9}) {
        auto outer = [&](double s) {
            const double rho = 1.0 / s;
            auto inner = [&](double th) {
                const double dx = rho * std::cos(th) - px, dy = rho * std::sin(th);
                return levy_density(m, std::hypot(dx, dy));
            };
            return GK::integrate(inner, -M_PI, 0, 20, 1e-11) * rho / (s * s) +
                   GK::integrate(inner, 0, M_PI, 20, 1e-11) * rho / (s * s);
        };
        const double ref = GK::integrate(outer, 0.0, 1.0, 20, 1e-10);
        const auto k = killing_density_report(t, disc, Point{px, 0.0});
        EXPECT_NEAR(k.value / ref, 1.0, 1e-4) << px;
        EXPECT_LT(k.abs_error, 1e-4 * k.value);
    }
}

TEST(Kernels, KillingDensityRadialInvariance) {
    Rng rng(3);
    for (int n : {2, 3}) {
        const auto m = stable(n, 1.2);
        const RadialTail t(m);
        const auto d = Domain::ball(Point::zero(n), 1.0);
        for (double r : {0.1, 0.6, 0.97}) {
            const double k0 = killing_density(t, d, Point::axis(n, 0, r));
            for (int i = 0; i < 5; ++i) {
                const double k = killing_density(t, d, random_direction(n, rng) * r);
                EXPECT_NEAR(k / k0, 1.0, 1e-6) << n << " " << r;
            }
        }
    }
}

TEST(Kernels, KillingDensityThreeDimensionalBall) {
    // 3-d ball centre: 4 pi T(R)
    const auto m = stable(3, 0.9);
    const RadialTail t(m);
    const auto d = Domain::ball(Point{0.0, 0.0, 0.0}, 2.0);
    EXPECT_NEAR(killing_density(t, d, Point{0.0, 0.0, 0.0}) / (4 * M_PI * std::pow(2.0, -0.9) / 0.9), 1.0, 1e-6);
}

TEST(Kernels, KillingDensityBoxAndAnnulus) {
    const auto m = stable(2, 1.0);
    const RadialTail t(m);
    // square centre by symmetry against the disc bound: the inscribed disc
    // complement contains the square complement
    const auto sq = Domain::box(Point{-1.0, -1.0}, Point{1.0, 1.0});
    const double ks = killing_density(t, sq, Point{0.0, 0.0});
    EXPECT_LT(ks, 2 * M_PI);
    EXPECT_GT(ks, 2 * M_PI / std::sqrt(2.0));
    // half-plane limit: kappa ~ pi / delta for alpha = 1 as delta -> 0
    const double kn = killing_density(t, sq, Point{0.0, 0.999});
    EXPECT_NEAR(kn * 0.001 / 2.0, 1.0, 0.01);
    // the annulus kills more than the disc with the same outer radius
    const auto ann = Domain::annulus(Point{0.0, 0.0}, 0.2, 1.0);
    const auto disc = Domain::ball(Point{0.0, 0.0}, 1.0);
    EXPECT_GT(killing_density(t, ann, Point{0.5, 0.0}), killing_density(t, disc, Point{0.5, 0.0}));
    // 3-d box is finite and positive
    const auto cube = Domain::box(Point{0.0, 0.0, 0.0}, Point{1.0, 1.0, 1.0});
    const RadialTail t3(stable(3, 1.0));
    const double kc = killing_density(t3, cube, Point{0.5, 0.5, 0.5});
    const double kb = killing_density(t3, Domain::ball(Point{0.5, 0.5, 0.5}, 0.5), Point{0.5, 0.5, 0.5});
    EXPECT_GT(kc, 0);
    EXPECT_LT(kc, kb);
}

TEST(Kernels, KillingTableMatchesDirect) {
    const auto m = LevyModel(2, BernsteinProfile::stable_sum(1.4, 0.6));
    auto t = std::make_shared<const RadialTail>(m);
    Rng rng(5);
    for (const auto& d : {Domain::ball(Point{0.0, 0.0}, 1.0), Domain::annulus(Point{0.0, 0.0}, 0.5, 1.0),
                          Domain::box(Point{0.0, 0.0}, Point{2.0, 1.0})}) {
        const KillingTable kt(t, d, 1e-9);
        for (int i = 0; i < 30; ++i) {
            const Point x = d.sample_interior(rng);
            EXPECT_NEAR(kt(x) / killing_density(*t, d, x), 1.0, 1e-4) << d.str() << " " << x.str();
        }
        const Point near = d.fat_point(d.sample_boundary(rng), 1e-6);
        EXPECT_NEAR(kt(near) / killing_density(*t, d, near), 1.0, 1e-4);
    }
}
