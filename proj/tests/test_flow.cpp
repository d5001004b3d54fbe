#include <geobeam/flow.hpp>
#include <geobeam/manifolds.hpp>

#include <gtest/gtest.h>

#include <numbers>

using namespace geobeam;

namespace {

PhasePoint torus_point(double x0, double x1, double a) {
    auto T = FlatTorus::unit(2);
    Vec x(2), xi(2);
    x << x0, x1;
    xi << std::cos(a), std::sin(a);
    return make_shell_point(*T, x, 0, xi);
}

double phase_gap(const Manifold& m, PhasePoint a, PhasePoint b) {
    if (a.chart != b.chart)
        b = to_chart(m, b, a.chart);
    return m.displacement(a.x, b.x, a.chart).norm() + (a.xi - b.xi).norm();
}

} // namespace

TEST(Flow, TorusStraightLine) {
    auto T = FlatTorus::unit(2);
    PhasePoint p = flow_to(*T, torus_point(0, 0, 0), 0.7);
    EXPECT_NEAR(p.x[0], 0.7, 1e-12);
    EXPECT_NEAR(p.x[1], 0.0, 1e-12);
    EXPECT_NEAR(p.xi[0], 1.0, 1e-12);
}

TEST(Flow, SphereGreatCircleCloses) {
    RoundSphere S(2);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k) {
        int chart = 0;
        Vec x = S.random_point(rng, chart);
        Vec xi(2);
        xi << std::cos(k), std::sin(k);
        PhasePoint rho = make_shell_point(S, x, chart, xi);
        PhasePoint q = flow_to(S, rho, 2 * std::numbers::pi);
        EXPECT_LT(phase_gap(S, rho, q), 1e-8);
    }
}

TEST(Flow, Reversibility) {
    auto P = SurfaceOfRevolution::pendulum(3.5);
    Vec x(2), xi(2);
    x << 1.2, 0.3;
    xi << 0.4, 0.9;
    PhasePoint rho = make_shell_point(*P, x, 0, xi);
    PhasePoint q = flow_to(*P, flow_to(*P, rho, 10.0), -10.0);
    EXPECT_LT(phase_gap(*P, rho, q), 1e-8);
}

TEST(Flow, EnergyDrift) {
    auto P = SurfaceOfRevolution::pendulum(3.5);
    Vec x(2), xi(2);
    x << 1.0, 0.0;
    xi << 0.7, 0.5;
    PhasePoint rho = make_shell_point(*P, x, 0, xi);
    Trajectory tr = integrate(*P, rho, 100.0);
    double drift10 = 0, drift100 = 0;
    for (double t = 0; t <= 100.0; t += 0.05) {
        double d = std::abs(tr.at(t).energy - rho.energy);
        drift100 = std::max(drift100, d);
        if (t <= 10.0)
            drift10 = std::max(drift10, d);
    }
    EXPECT_LT(drift10, 1e-9);
    EXPECT_LT(drift100, 1e-7);
    // without projection the raw integrator still stays close
    FlowOptions o;
    o.project = false;
    Trajectory raw = integrate(*P, rho, 10.0, o);
    EXPECT_LT(std::abs(raw.at(10.0).energy - rho.energy), 1e-8);
}

TEST(Flow, GroupLaw) {
    RoundSphere S(2);
    Vec x(2), xi(2);
    x << 0.3, -0.2;
    xi << 1.0, 0.4;
    PhasePoint rho = make_shell_point(S, x, 0, xi);
    PhasePoint a = flow_to(S, flow_to(S, rho, 1.3), 2.4);
    PhasePoint b = flow_to(S, rho, 3.7);
    EXPECT_LT(phase_gap(S, a, b), 1e-8);
}

TEST(Flow, VariationalSymplectic) {
    auto P = SurfaceOfRevolution::pendulum(3.5);
    Vec x(2), xi(2);
    x << 1.0, 0.0;
    xi << 0.7, 0.5;
    PhasePoint rho = make_shell_point(*P, x, 0, xi);
    VariationalFrame vf = variational(*P, rho, {0.0, 5.0, 10.0});
    PhaseMat J = symplectic_form(2);
    EXPECT_LT((vf.matrices[0] - PhaseMat::Identity(4, 4)).norm(), 1e-15);
    for (const auto& M : vf.matrices) {
        EXPECT_LT((M.transpose() * J * M - J).norm(), 1e-6);
        EXPECT_NEAR(M.determinant(), 1.0, 1e-6);
    }
}

TEST(Flow, VariationalMatchesFiniteDifference) {
    RoundSphere S(2);
    Vec x(2), xi(2);
    x << 0.9, 0.5;
    xi << -0.3, 0.8;
    PhasePoint rho = make_shell_point(S, x, 0, xi);
    const double t = 6.0;
    VariationalFrame vf = variational(S, rho, {t});
    FlowOptions o;
    o.project = false;
    PhasePoint base = flow_to(S, rho, t, o);
    for (int i = 0; i < 4; ++i) {
        PhaseVec z = rho.stacked();
        z[i] += 1e-6;
        PhasePoint q = flow_to(S, unstack(z, 0), t, o);
        if (q.chart != base.chart)
            q = to_chart(S, q, base.chart);
        PhaseVec fd = (q.stacked() - base.stacked()) / 1e-6;
        PhaseMat M = vf.matrices[0];
        if (vf.points[0].chart != base.chart)
            M = detail::phase_transition_jacobian(S, vf.points[0].stacked(), vf.points[0].chart, base.chart) * M;
        EXPECT_LT((fd - M.col(i)).norm(), 1e-4 * std::max(1.0, fd.norm()));
    }
}

TEST(Flow, TorusVariationalLinear) {
    auto T = FlatTorus::unit(2);
    VariationalFrame vf = variational(*T, torus_point(0.1, 0.2, 0.4), {3.0});
    EXPECT_LE(spectral_norm(vf.matrices[0]), 1 + 3.0 + 1e-6);
}

TEST(Flow, LambdaMaxTorusFloor) {
    auto T = FlatTorus::unit(2);
    LambdaMaxResult r = lambda_max(*T, 3, 50.0, 1e-3, 7, {}, {0.0});
    EXPECT_LE(r.raw, std::log(51.0) / 50.0 + 1e-9);
    // perturbed shells: transverse Hessian of |xi| is 1/|xi|
    LambdaMaxResult s = lambda_max(*T, 3, 50.0);
    EXPECT_LE(s.raw, std::log(1.0 + 50.0 / 0.9) / 50.0 + 1e-9);
    LambdaMaxResult big = lambda_max(*T, 3, 400.0, 1e-3, 7, {}, {0.0});
    EXPECT_LT(big.raw, r.raw);
    EXPECT_NEAR(ehrenfest_time(std::exp(-2.0), 1.0), 1.0, 1e-15);
}

TEST(Flow, LambdaMaxZeroReplaced) {
    auto T = FlatTorus::unit(2);
    LambdaMaxResult r = lambda_max(*T, 3, 50.0, 0.5);
    EXPECT_TRUE(r.replaced_zero);
    EXPECT_EQ(r.value, 0.5);
}

TEST(Flow, CrossingDiagonal) {
    auto T = FlatTorus::unit(2);
    Vec x = Vec::Zero(2);
    auto ev = transversal_crossings(*T, x, 0, torus_point(0, 0, std::numbers::pi / 4), 1.0, 3.0);
    ASSERT_GE(ev.size(), 1u);
    EXPECT_NEAR(ev[0].t, std::sqrt(2.0), 1e-10);
    EXPECT_LT(ev[0].fiber_distance, 1e-9);
}

TEST(Flow, CrossingAxisAndGolden) {
    auto T = FlatTorus::unit(2);
    Vec x = Vec::Zero(2);
    auto ev = transversal_crossings(*T, x, 0, torus_point(0, 0, 0), 1.6, 2.7);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_NEAR(ev[0].t, 2.0, 1e-10);
    double phi = (1 + std::sqrt(5.0)) / 2;
    auto g = transversal_crossings(*T, x, 0, torus_point(0, 0, std::atan(phi)), 1.6, 2.7);
    for (const auto& e : g)
        EXPECT_GE(e.fiber_distance, 0.01);
    for (const auto& e : g)
        EXPECT_LE(std::abs(Transversal(*T, x, 0).value(e.point)), 1e-10);
}
