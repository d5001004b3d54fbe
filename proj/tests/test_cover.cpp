#include <geobeam/cover.hpp>
#include <geobeam/manifolds.hpp>

#include <gtest/gtest.h>

#include <numbers>

using namespace geobeam;

namespace {
const double kPi = std::numbers::pi;
Vec origin() { return Vec::Zero(2); }
} // namespace

TEST(Cover, CircleCentersCoarse) {
    auto T = FlatTorus::unit(2);
    CenterSet cs = separated_centers(*T, origin(), 0, kPi, 4.0);
    EXPECT_GE(cs.centers.size(), 2u);
    EXPECT_LE(cs.centers.size(), 4u);
}

TEST(Cover, CircleCentersFine) {
    auto T = FlatTorus::unit(2);
    CenterSet cs = separated_centers(*T, origin(), 0, 0.01);
    EXPECT_GE(cs.centers.size(), 628u);
    EXPECT_LE(cs.centers.size(), 1257u);
    LocalGeometry lg = local_geometry(*T, origin(), 0);
    for (std::size_t i = 0; i < cs.centers.size(); ++i)
        for (std::size_t j = i + 1; j < cs.centers.size(); ++j)
            ASSERT_GE(fiber_distance(lg, cs.centers[i].xi, cs.centers[j].xi), 0.005);
}

TEST(Cover, SparseSampleRejected) {
    auto T = FlatTorus::unit(2);
    EXPECT_THROW(separated_centers(*T, origin(), 0, 0.1, 0.2, 0.0, 20), CoverError);
    EXPECT_NO_THROW(separated_centers(*T, origin(), 0, 0.1, 0.2, 0.0, 100));
}

TEST(Cover, CapChartIsTransversal) {
    auto P = SurfaceOfRevolution::pendulum(3.5);
    Vec x(2), xi(2);
    x << 1.3, 0.4;
    xi << 0.3, 1.0;
    PhasePoint c = make_shell_point(*P, x, 0, xi);
    CapChart cap(*P, c);
    Transversal F(*P, x, 0);
    Eigen::VectorXd q(2);
    q << 0.004, -0.007;
    PhasePoint p = cap.point(q);
    EXPECT_LT(std::abs(F.value(p)), 1e-14);
    EXPECT_LT(std::abs(p.energy), 1e-12);
    // with a potential the shell radius varies with the base point, so only comparable
    EXPECT_NEAR(sasaki_distance(*P, p, c).value / q.norm(), 1.0, 0.15);
    auto E = std::make_shared<TriaxialEllipsoid>(1.0, 1.5, 2.0);
    PhasePoint ce = make_shell_point(*E, x, 0, xi);
    CapChart ecap(*E, ce);
    PhasePoint pe = ecap.point(q);
    EXPECT_LT(std::abs(Transversal(*E, x, 0).value(pe)), 1e-14);
    EXPECT_NEAR(sasaki_distance(*E, pe, ce).value, q.norm(), 2e-4);
}

TEST(Cover, TorusGoodCover) {
    auto T = FlatTorus::unit(2);
    TubeCover cv = build_good_cover(*T, origin(), 0, 0.2, 0.01);
    EXPECT_LE(cv.colors, 16);
    EXPECT_EQ(cv.verification.uncovered, 0);
    EXPECT_EQ(cv.verification.disjoint_violations, 0);
    EXPECT_GT(cv.verification.disjoint_checked, 0);
    EXPECT_LE(cv.verification.max_overlap, cv.colors);
    std::cout << "N=" << cv.size() << " D=" << cv.colors << " overlap=" << cv.verification.max_overlap << "\n";
}
