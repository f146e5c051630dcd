#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "censored/pathsim.hpp"

using namespace censored;

namespace {

struct Recorder {
    std::vector<Point> visited;
    double occupied = 0;
    void sojourn(const Point& x, double, double dt) {
        visited.push_back(x);
        occupied += dt;
    }
    void jump(double, const Point&, const Point&, bool) {}
};

}  // namespace

TEST(Jumps, RadiusLawMatchesTail) {
    const LevyModel m(2, BernsteinProfile::stable(1.0));
    const Simulator sim(m);
    Rng rng = make_rng(7, 0, 0);
    const double eps = 0.01;
    const int N = 1'000'000;
    std::vector<double> r(N);
    for (auto& v : r) v = sample_jump(sim, eps, rng).norm();
    std::sort(r.begin(), r.end());
    EXPECT_GT(r.front(), eps * (1 - 1e-12));
    double ks = 0;
    for (int i = 0; i < N; ++i) {
        const double F = 1.0 - eps / r[i];
        ks = std::max({ks, std::abs(F - double(i) / N), std::abs(F - double(i + 1) / N)});
    }
    EXPECT_LT(ks, 0.002);
}

TEST(Jumps, DirectionsAreIsotropic) {
    for (int n : {1, 2, 3}) {
        const LevyModel m(n, BernsteinProfile::stable(1.2));
        const Simulator sim(m);
        Rng rng = make_rng(3, n, 0);
        const int N = 200'000;
        Point mean = Point::zero(n);
        std::vector<double> second(n, 0.0);
        for (int i = 0; i < N; ++i) {
            const Point j = sample_jump(sim, 0.1, rng);
            const Point u = j * (1.0 / j.norm());
            mean = mean + u * (1.0 / N);
            for (int k = 0; k < n; ++k) second[k] += u[k] * u[k] / N;
        }
        for (int k = 0; k < n; ++k) {
            EXPECT_LT(std::abs(mean[k]), 4.0 / std::sqrt(double(N))) << n;
            EXPECT_NEAR(second[k], 1.0 / n, 0.01) << n;
        }
    }
}

TEST(Jumps, SumProfileRadiusLawMatchesTable) {
    const LevyModel m(2, BernsteinProfile::stable_sum(1.4, 0.6));
    const Simulator sim(m);
    Rng rng = make_rng(11, 0, 0);
    const double eps = 0.05;
    const int N = 100'000;
    std::vector<double> r(N);
    for (auto& v : r) v = sample_jump(sim, eps, rng).norm();
    std::sort(r.begin(), r.end());
    const double T0 = radial_tail_exact(m, eps);
    double ks = 0;
    for (int i = 0; i < N; i += 97) ks = std::max(ks, std::abs(1.0 - radial_tail_exact(m, r[i]) / T0 - double(i) / N));
    EXPECT_LT(ks, 0.006);
}

TEST(Paths, DeterministicPerSeedAndIndex) {
    const Simulator sim(calibrated_stable(2, 1.2));
    const Domain B = Domain::ball(Point{0, 0}, 1);
    SimConfig cfg;
    cfg.record_events = true;
    Rng a = make_rng(5, 1, 42), b = make_rng(5, 1, 42), c = make_rng(5, 1, 43);
    const auto ra = run_killed(sim, B, Point{0.3, 0}, cfg, a);
    const auto rb = run_killed(sim, B, Point{0.3, 0}, cfg, b);
    const auto rc = run_killed(sim, B, Point{0.3, 0}, cfg, c);
    EXPECT_EQ(ra.end_time, rb.end_time);
    EXPECT_EQ(ra.n_events, rb.n_events);
    EXPECT_EQ(ra.post_exit[0], rb.post_exit[0]);
    EXPECT_NE(ra.end_time, rc.end_time);
}

TEST(Paths, ExitInvariants) {
    const Simulator sim(calibrated_stable(2, 1.2));
    const Domain B = Domain::ball(Point{0, 0}, 1);
    SimConfig cfg;
    for (int i = 0; i < 300; ++i) {
        Rng rng = make_rng(9, 0, i);
        const auto r = run_killed(sim, B, Point{0.5, 0.2}, cfg, rng);
        ASSERT_TRUE(r.exited()) << to_string(r.status);
        EXPECT_GT(r.end_time, 0);
        EXPECT_TRUE(B.contains(r.pre_exit));
        EXPECT_FALSE(B.contains(r.post_exit));
    }
}

TEST(Paths, EventRateMatchesTailMass) {
    const LevyModel m(2, BernsteinProfile::stable(1.0));
    const Simulator sim(m);
    const Domain big = Domain::ball(Point{0, 0}, 1e6);
    SimConfig cfg;
    cfg.eps_cut = 0.05;
    cfg.horizon = 50;
    std::uint64_t events = 0;
    const int paths = 40;
    for (int i = 0; i < paths; ++i) {
        Rng rng = make_rng(2, 0, i);
        const auto r = run_killed(sim, big, Point{0, 0}, cfg, rng);
        ASSERT_EQ(r.status, PathStatus::ReachedHorizon);
        events += r.n_events;
    }
    const double expect = tail_mass(m, 0.05) * cfg.horizon * paths;
    EXPECT_LT(std::abs(events - expect), 3 * std::sqrt(expect));
}

TEST(Paths, CensoredPathStaysInside) {
    const Simulator sim(calibrated_stable(2, 1.0));
    const Domain D = Domain::box(Point{0, 0}, Point{2, 1});
    SimConfig cfg;
    cfg.horizon = 0.5;
    cfg.dwell = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 50; ++i) {
        Rng rng = make_rng(4, 0, i);
        Recorder rec;
        const auto r = run_censored_inw(sim, D, Point{1.0, 0.5}, cfg, rng, rec);
        for (const auto& x : rec.visited) ASSERT_TRUE(D.contains(x));
        EXPECT_TRUE(D.contains(r.final_position));
        EXPECT_NEAR(rec.occupied, r.end_time, 1e-9);
    }
}

TEST(Paths, KilledAndCensoredShareRandomnessUntilFirstSuppression) {
    const Simulator sim(calibrated_stable(2, 1.2));
    const Domain D = Domain::ball(Point{0, 0}, 1);
    SimConfig cfg;
    cfg.record_events = true;
    cfg.dwell = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
        Rng a = make_rng(8, 0, i), b = make_rng(8, 0, i);
        const auto killed = run_killed(sim, D, Point{0.2, -0.1}, cfg, a);
        const auto cens = run_censored_inw(sim, D, Point{0.2, -0.1}, cfg, b);
        if (killed.status != PathStatus::ExitedByJump) continue;
        const auto first = std::find_if(cens.events.begin(), cens.events.end(), [](const PathEvent& e) { return e.suppressed; });
        ASSERT_NE(first, cens.events.end());
        EXPECT_EQ(first->t, killed.end_time);
        EXPECT_EQ(first->after[0], killed.post_exit[0]);
        EXPECT_EQ(std::distance(cens.events.begin(), first) + 1, static_cast<long>(killed.events.size()));
    }
}

TEST(Paths, ExitSymmetryFromCentre) {
    const Simulator sim(calibrated_stable(2, 1.5));
    const Domain B = Domain::ball(Point{0, 0}, 1);
    SimConfig cfg;
    const int N = 4000;
    int right = 0;
    for (int i = 0; i < N; ++i) {
        Rng rng = make_rng(12, 0, i);
        const auto r = run_killed(sim, B, Point{0, 0}, cfg, rng);
        right += r.post_exit[0] > 0;
    }
    EXPECT_LT(std::abs(right - N / 2.0), 4 * std::sqrt(N / 4.0));
}

TEST(Paths, GaussianModeExits) {
    const Simulator sim(calibrated_stable(2, 1.5));
    const Domain B = Domain::ball(Point{0, 0}, 1);
    SimConfig cfg;
    cfg.gaussian_mode = true;
    cfg.eps_cut = 0.02;
    cfg.eta_stop = 0.01;
    int diffusive = 0;
    for (int i = 0; i < 200; ++i) {
        Rng rng = make_rng(13, 0, i);
        const auto r = run_killed(sim, B, Point{0.9, 0}, cfg, rng);
        ASSERT_TRUE(r.exited()) << to_string(r.status) << " " << r.final_position.str() << " " << r.end_time;
        EXPECT_FALSE(B.contains(r.post_exit));
        diffusive += r.status == PathStatus::ExitedByDiffusion;
    }
    EXPECT_GT(diffusive, 0);
}

TEST(Paths, RejectsStartOutside) {
    const Simulator sim(calibrated_stable(2, 1.2));
    const Domain B = Domain::ball(Point{0, 0}, 1);
    Rng rng = make_rng(1, 0, 0);
    EXPECT_THROW(run_killed(sim, B, Point{1.5, 0}, SimConfig{}, rng), DomainError);
    EXPECT_THROW(sample_jump(sim, 0.0, rng), DomainError);
}

TEST(Functionals, FeynmanKacMatchesCensored) {
    const Simulator sim(calibrated_stable(2, 1.0));
    const Domain D = Domain::ball(Point{0, 0}, 1);
    SimConfig cfg;
    const std::vector<TestFunction> fs{[](const Point&) { return 1.0; }, [](const Point& x) { return x[0]; }};
    const auto fk = fk_functional(sim, D, Point{0.5, 0}, 0.05, fs, cfg, 4000, 1);
    const auto ce = censored_functional(sim, D, Point{0.5, 0}, 0.05, fs, cfg, 4000, 2);
    ASSERT_EQ(fk.size(), 3u);
    for (int j = 0; j < 2; ++j) EXPECT_LT(std::abs(fk[j].value - ce[j].value), 4 * combined_sigma(fk[j], ce[j])) << j;
    EXPECT_LE(fk[2].value, 1.0);
    EXPECT_GE(fk[0].value, fk[2].value);
}
