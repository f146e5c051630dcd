#include <gtest/gtest.h>

#include "censored/geometry.hpp"

using namespace censored;

namespace {

Domain unit_disc() { return Domain::ball(Point{0.0, 0.0}, 1.0); }

// Probe B(A, kr) by rejection sampling and count points outside D or B(Q, r).
int containment_violations(const Domain& d, const Point& q, double r, Rng& rng, int probes) {
    const Point a = d.fat_point(q, r);
    const double rad = d.fat_kappa() * r;
    int bad = 0;
    for (int i = 0; i < probes; ++i) {
        const double s = rad * std::pow(uniform01(rng), 1.0 / d.dim()) * (1 - 1e-12);
        const Point p = a + random_direction(d.dim(), rng) * s;
        if (!d.contains(p) || distance(p, q) >= r) ++bad;
    }
    return bad;
}

}  // namespace

TEST(Geometry, BoundaryDistance) {
    EXPECT_DOUBLE_EQ(unit_disc().dist_to_boundary(Point{0.0, 0.0}), 1.0);
    EXPECT_DOUBLE_EQ(unit_disc().dist_to_boundary(Point{0.75, 0.0}), 0.25);
    EXPECT_DOUBLE_EQ(unit_disc().dist_to_boundary(Point{2.0, 0.0}), 0.0);
    const auto box = Domain::box(Point{0.0, 0.0}, Point{2.0, 1.0});
    EXPECT_DOUBLE_EQ(box.dist_to_boundary(Point{1.0, 0.25}), 0.25);
    const auto ann = Domain::annulus(Point{0.0, 0.0}, 0.5, 1.0);
    EXPECT_DOUBLE_EQ(ann.dist_to_boundary(Point{0.6, 0.0}), 0.1);
    EXPECT_DOUBLE_EQ(ann.dist_to_boundary(Point{0.0, 0.0}), 0.0);
    EXPECT_DOUBLE_EQ(Domain::interval(-1, 1).dist_to_boundary(Point{0.5}), 0.5);
}

TEST(Geometry, DimensionMismatchRejected) {
    EXPECT_THROW(unit_disc().dist_to_boundary(Point{0.0}), DomainError);
}

TEST(Geometry, FatCharacteristics) {
    const auto b = Domain::ball(Point{0.0, 0.0, 0.0}, 0.7);
    EXPECT_DOUBLE_EQ(b.fat_R(), 1.4);
    EXPECT_DOUBLE_EQ(b.fat_kappa(), 0.5);
}

TEST(Geometry, BallFatPoint) {
    const auto d = unit_disc();
    const Point a = d.fat_point(Point{1.0, 0.0}, 0.5);
    EXPECT_NEAR(a[0], 0.75, 1e-15);
    EXPECT_NEAR(a[1], 0.0, 1e-15);
    const Point b = d.fat_point(Point{0.0, 1.0}, 0.2);
    EXPECT_NEAR(b[0], 0.0, 1e-15);
    EXPECT_NEAR(b[1], 0.9, 1e-15);
    EXPECT_THROW(d.fat_point(Point{1.0, 0.0}, 0.0), DomainError);
    EXPECT_THROW(d.fat_point(Point{1.0, 0.0}, 2.0), DomainError);
    EXPECT_THROW(d.fat_point(Point{0.5, 0.0}, 0.1), DomainError);
}

TEST(Geometry, FatPointContainment) {
    Rng rng(11);
    const Domain shapes[] = {unit_disc(), Domain::ball(Point{0.3, -1.0, 2.0}, 0.8),
                             Domain::box(Point{0.0, 0.0}, Point{2.0, 1.0}),
                             Domain::box(Point{0.0, 0.0, 0.0}, Point{1.0, 3.0, 2.0}),
                             Domain::annulus(Point{0.0, 0.0}, 0.5, 1.0), Domain::interval(-1, 2)};
    for (const auto& d : shapes) {
        int bad = 0;
        for (int i = 0; i < 1000; ++i) {
            const Point q = d.sample_boundary(rng);
            const double r = d.fat_R() * uniform_pos(rng) * (1 - 1e-9);
            bad += containment_violations(d, q, r, rng, 20);
        }
        EXPECT_EQ(bad, 0) << d.str();
    }
}

TEST(Geometry, CorridorFarUsesReferencePoint) {
    const auto d = unit_disc();
    const auto c = corridor(d, Point{0.5, 0.0}, Point{-0.5, 0.0});
    EXPECT_DOUBLE_EQ(c.r_xy, 1.0);
    EXPECT_DOUBLE_EQ(c.eps1, 1.0 / 24.0);
    EXPECT_TRUE(c.uses_z0);
    EXPECT_EQ(c.witness, c.z0);
    EXPECT_EQ(c.z0, (Point{0.0, 0.0}));
}

TEST(Geometry, CorridorNearBoundary) {
    const auto d = unit_disc();
    const Point x{0.99, 0.0};
    const auto c = corridor(d, x, x);
    EXPECT_NEAR(c.r_xy, 0.01, 1e-15);
    EXPECT_FALSE(c.uses_z0);
    EXPECT_GT(d.dist_to_boundary(c.witness), 0.5 * d.fat_kappa() * c.r_xy);
    EXPECT_LT(distance(x, c.witness), 5 * c.r_xy);
}

TEST(Geometry, CorridorWitnessInvariant) {
    Rng rng(12);
    for (const auto& d : {unit_disc(), Domain::box(Point{0.0, 0.0}, Point{2.0, 1.0}),
                          Domain::annulus(Point{0.0, 0.0}, 0.5, 1.0), Domain::interval(-1, 1)}) {
        int bad = 0, near = 0;
        for (int i = 0; i < 1000; ++i) {
            // bias pairs towards the boundary so both branches are exercised
            const Point q = d.sample_boundary(rng);
            const double s = 0.05 * uniform_pos(rng);
            Point x = d.fat_point(q, std::min(s, 0.99 * d.fat_R()));
            Point y = x + random_direction(d.dim(), rng) * (0.5 * d.dist_to_boundary(x) * uniform01(rng));
            if (i % 2) y = d.sample_interior(rng);
            const auto c = corridor(d, x, y);
            if (c.r_xy < c.eps1) {
                ++near;
                if (!in_witness_set(d, x, y, c.witness)) ++bad;
            } else if (!(c.witness == c.z0)) {
                ++bad;
            }
        }
        EXPECT_EQ(bad, 0) << d.str();
        EXPECT_GT(near, 100) << d.str();
    }
}

TEST(Geometry, CorridorRejectsExteriorPoints) {
    EXPECT_THROW(corridor(unit_disc(), Point{1.5, 0.0}, Point{0.0, 0.0}), DomainError);
}

TEST(Geometry, InteriorSamplingIsCentred) {
    Rng rng(13);
    const auto d = unit_disc();
    double sx = 0, sy = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const Point p = d.sample_interior(rng);
        ASSERT_TRUE(d.contains(p));
        sx += p[0];
        sy += p[1];
    }
    // per-coordinate variance of the uniform disc is 1/4
    const double se = std::sqrt(0.25 / n);
    EXPECT_LT(std::abs(sx / n), 3 * se);
    EXPECT_LT(std::abs(sy / n), 3 * se);
}

TEST(Geometry, BoundarySamplesOnBoundary) {
    Rng rng(14);
    for (const auto& d : {unit_disc(), Domain::box(Point{0.0, 0.0, 0.0}, Point{1.0, 3.0, 2.0}),
                          Domain::annulus(Point{1.0, 0.0}, 0.5, 1.0), Domain::interval(-1, 1)}) {
        for (int i = 0; i < 1000; ++i) EXPECT_LE(std::abs(d.signed_depth(d.sample_boundary(rng))), 1e-12);
    }
}

TEST(Geometry, TriplesRespectMargin) {
    Rng rng(15);
    const auto d = unit_disc();
    for (const auto& t : sample_triples(d, 500, 0.0, rng)) {
        EXPECT_TRUE(d.contains(t.x) && d.contains(t.y) && d.contains(t.z));
    }
    for (const auto& t : sample_triples(d, 500, 0.1, rng)) {
        EXPECT_GE(d.dist_to_boundary(t.x), 0.1);
        EXPECT_GE(d.dist_to_boundary(t.z), 0.1);
    }
    EXPECT_THROW(sample_triples(d, 1, 1.0, rng), ConfigError);
}

TEST(Geometry, DistanceIsLipschitz) {
    Rng rng(16);
    for (const auto& d : {unit_disc(), Domain::box(Point{0.0, 0.0}, Point{2.0, 1.0}),
                          Domain::annulus(Point{0.0, 0.0}, 0.5, 1.0)}) {
        for (int i = 0; i < 2000; ++i) {
            const Point x = Point{3 * uniform01(rng) - 1.5, 3 * uniform01(rng) - 1.5};
            const Point y = Point{3 * uniform01(rng) - 1.5, 3 * uniform01(rng) - 1.5};
            EXPECT_LE(std::abs(d.dist_to_boundary(x) - d.dist_to_boundary(y)), distance(x, y) + 1e-15);
        }
    }
}

TEST(Geometry, RayExteriorMatchesMembership) {
    Rng rng(17);
    const auto d = Domain::annulus(Point{0.0, 0.0}, 0.5, 1.0);
    for (int i = 0; i < 500; ++i) {
        const Point x = d.sample_interior(rng);
        const Point e = random_direction(2, rng);
        RaySegment seg[2];
        const int k = d.ray_exterior(x, e, seg);
        for (double t = 0.001; t < 3; t += 0.0137) {
            bool outside = false;
            for (int j = 0; j < k; ++j) outside |= (t > seg[j].from && t < seg[j].to);
            const double depth = d.signed_depth(x + e * t);
            if (std::abs(depth) > 1e-9) EXPECT_EQ(outside, depth < 0);
        }
    }
}

TEST(Geometry, Parse) {
    auto d = Domain::parse("ball:r=1", 2);
    EXPECT_EQ(d.shape(), Shape::Ball);
    EXPECT_DOUBLE_EQ(d.radius(), 1.0);
    d = Domain::parse("box:0,0,2,1", 2);
    EXPECT_EQ(d.shape(), Shape::Box);
    EXPECT_DOUBLE_EQ(d.hi()[0], 2.0);
    d = Domain::parse("annulus:rin=0.5,rout=1", 2);
    EXPECT_DOUBLE_EQ(d.inner_radius(), 0.5);
    d = Domain::parse("interval:-1,1", 1);
    EXPECT_DOUBLE_EQ(d.lo()[0], -1.0);
    d = Domain::parse("ball:r=2,c=1;2;3", 3);
    EXPECT_DOUBLE_EQ(d.center()[2], 3.0);
    EXPECT_EQ(Domain::parse(d.str(), 3).str(), d.str());
    EXPECT_THROW(Domain::parse("ball:r=-1", 2), ConfigError);
    EXPECT_THROW(Domain::parse("ball:radius=1", 2), ConfigError);
    EXPECT_THROW(Domain::parse("torus:r=1", 2), ConfigError);
    EXPECT_THROW(Domain::parse("box:0,0,2", 2), ConfigError);
    EXPECT_THROW(Domain::parse("annulus:rin=1,rout=0.5", 2), ConfigError);
}

TEST(Geometry, ReferencePointDepth) {
    for (const auto& d : {unit_disc(), Domain::box(Point{0.0, 0.0}, Point{2.0, 1.0}),
                          Domain::annulus(Point{0.0, 0.0}, 0.5, 1.0), Domain::interval(-1, 1)}) {
        const Point z = reference_point(d);
        EXPECT_GE(d.dist_to_boundary(z), d.fat_kappa() * d.fat_R());
        EXPECT_LE(d.dist_to_boundary(z), d.fat_R());
    }
}

TEST(BallPair, MembershipDepthAndSampling) {
    const Domain u = Domain::ball_pair(Point{0, 0}, Point{0.3, 0}, 0.2);
    EXPECT_TRUE(u.contains(Point{-0.1, 0}));
    EXPECT_TRUE(u.contains(Point{0.45, 0}));
    EXPECT_FALSE(u.contains(Point{0.15, 0.19}));
    EXPECT_NEAR(u.diam(), 0.7, 1e-15);
    Rng rng = make_rng(1, 0, 0);
    int left = 0;
    const int N = 20000;
    for (int i = 0; i < N; ++i) {
        const Point x = u.sample_interior(rng);
        ASSERT_TRUE(u.contains(x));
        // true distance to the complement is at least the reported depth
        const Point q = x + random_direction(2, rng) * (u.dist_to_boundary(x) * 0.999);
        ASSERT_TRUE(u.contains(q));
        left += x[0] < 0.15;
    }
    EXPECT_NEAR(double(left) / N, 0.5, 0.02);
    EXPECT_THROW(u.fat_point(Point{-0.2, 0}, 0.1), PreconditionError);
}
