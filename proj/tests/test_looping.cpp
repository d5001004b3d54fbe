#include <geobeam/looping.hpp>
#include <geobeam/manifolds.hpp>
#include <geobeam/oracles.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

using namespace geobeam;

namespace {

Vec origin() { return Vec::Zero(2); }

int nearest_tube(const TubeCover& cv, double angle) {
    auto ang = tube_angles(cv);
    int best = 0;
    for (std::size_t i = 1; i < ang.size(); ++i)
        if (std::abs(detail::wrap_angle(ang[i] - angle)) < std::abs(detail::wrap_angle(ang[best] - angle)))
            best = static_cast<int>(i);
    return best;
}

LoopRelation synthetic(int n, double t0, double T) {
    LoopRelation r;
    r.size = n;
    r.t0 = t0;
    r.T = T;
    return r;
}

// One torus cover and its flow relation for the figure window, shared by the
// tests below since the relation is the slow part.
struct TorusCase {
    std::shared_ptr<FlatTorus> m = FlatTorus::unit(2);
    TubeCover cv;
    LoopRelation fwd;

    TorusCase() {
        CoverOptions co;
        co.verify = false;
        cv = build_good_cover(*m, origin(), 0, 0.2, 0.01, co);
        fwd = loop_relation(cv, 1.6, 2.7);
    }
};

const TorusCase& torus_case() {
    static TorusCase c;
    return c;
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

} // namespace

// --- synthetic relations

TEST(Relation, NormalizeMergesAndSorts) {
    LoopRelation r = synthetic(3, 1.0, 5.0);
    r.add(0, 1, 3.0, 3.5);
    r.add(0, 1, 1.2, 1.4);
    r.add(0, 1, 3.4, 4.0);
    r.normalize();
    ASSERT_EQ(r.intervals(0, 1).size(), 2u);
    EXPECT_DOUBLE_EQ(r.intervals(0, 1)[1].lo, 3.0);
    EXPECT_DOUBLE_EQ(r.intervals(0, 1)[1].hi, 4.0);
    EXPECT_TRUE(r.valid());
    EXPECT_TRUE(r.meets(0, 1, 3.9, 4.5));
    EXPECT_FALSE(r.meets(0, 1, 1.5, 2.9));
    EXPECT_FALSE(r.meets(1, 0, 1.0, 5.0));
}

TEST(Relation, JsonRoundTrip) {
    LoopRelation r = synthetic(4, 1.0, 3.0);
    r.add(2, 2, 1.5, 1.7, 0.003);
    r.add(0, 3, 2.0, 2.5, 0.004);
    LoopRelation s = LoopRelation::from_json(r.to_json());
    EXPECT_EQ(s.to_json(), r.to_json());
}

TEST(ClassifySingle, EmptyRelation) {
    LoopPartition p = classify_single(synthetic(7, 1.0, 2.0));
    EXPECT_TRUE(p.bad.empty());
    ASSERT_EQ(p.good.size(), 1u);
    EXPECT_EQ(p.good[0].tubes.size(), 7u);
    EXPECT_TRUE(p.covers_all());
}

TEST(ClassifySingle, CompleteRelation) {
    LoopRelation r = synthetic(5, 1.0, 2.0);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            r.add(i, j, 1.2, 1.3);
    LoopPartition p = classify_single(r);
    EXPECT_EQ(p.bad.size(), 5u);
    EXPECT_TRUE(p.good.empty());
}

TEST(ClassifySingle, HighestDegreeThenLowestIndex) {
    // star 3 -> {0,1,2}; removing the hub clears every edge
    LoopRelation r = synthetic(5, 1.0, 2.0);
    for (int j : {0, 1, 2})
        r.add(3, j, 1.5, 1.6);
    EXPECT_EQ(classify_single(r).bad, std::vector<int>{3});
    // a single edge: both endpoints have degree 1, the lower index goes
    LoopRelation e = synthetic(5, 1.0, 2.0);
    e.add(4, 2, 1.5, 1.6);
    EXPECT_EQ(classify_single(e).bad, std::vector<int>{2});
}

TEST(ClassifySingle, GoodSetIsNonSelfLooping) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        LoopRelation r = synthetic(30, 1.0, 4.0);
        std::uniform_int_distribution<int> pick(0, 29);
        std::uniform_real_distribution<double> t(1.0, 4.0);
        for (int e = 0; e < 40; ++e) {
            double a = t(rng);
            r.add(pick(rng), pick(rng), a, std::min(4.0, a + 0.1));
        }
        LoopPartition p = classify_single(r);
        EXPECT_TRUE(p.covers_all());
        auto good = p.good.empty() ? std::set<int>{} : as_set(p.good[0].tubes);
        for (const auto& [i, j] : r.edges(1.0, 4.0))
            EXPECT_FALSE(good.count(i) && good.count(j));
    }
}

TEST(ClassifySingle, BackwardChosenWhenSmaller) {
    LoopRelation f = synthetic(4, 1.0, 2.0), b = synthetic(4, 1.0, 2.0);
    b.backward = true;
    f.add(0, 1, 1.5, 1.6);
    f.add(2, 3, 1.5, 1.6);
    b.add(0, 0, 1.5, 1.6);
    LoopPartition p = classify_single(f, &b);
    EXPECT_TRUE(p.backward);
    EXPECT_EQ(p.bad, std::vector<int>{0});
    LoopRelation other = synthetic(4, 1.0, 3.0);
    EXPECT_THROW(classify_single(f, &other), PreconditionError);
}

TEST(ClassifyIterative, NoLoops) {
    LoopPartition p = classify_iterative(synthetic(6, 1.0, 8.0), 1.0);
    EXPECT_TRUE(p.bad.empty());
    ASSERT_EQ(p.good.size(), 1u);
    EXPECT_EQ(p.good[0].tubes.size(), 6u);
    EXPECT_DOUBLE_EQ(p.good[0].t, 1.0);
    EXPECT_DOUBLE_EQ(p.good[0].T, 8.0);
}

TEST(ClassifyIterative, AllLoopAlways) {
    LoopRelation r = synthetic(6, 1.0, 8.0);
    for (int i = 0; i < 6; ++i)
        r.add(i, i, 1.0, 8.0);
    LoopPartition p = classify_iterative(r, 1.0);
    EXPECT_EQ(p.bad.size(), 6u);
    EXPECT_TRUE(p.good.empty());
}

TEST(ClassifyIterative, ShrinkingWindows) {
    // T = 8, C = 1: windows 8, 8 e^-1/2 = 4.85, 8 e^-1 = 2.94
    LoopRelation r = synthetic(3, 1.0, 8.0);
    r.add(0, 0, 6.0, 6.2); // gone after the first window
    r.add(1, 1, 3.5, 3.6); // gone after the second
    r.add(2, 2, 1.5, 1.6); // stays
    LoopPartition p = classify_iterative(r, 1.0);
    EXPECT_EQ(p.bad, std::vector<int>{2});
    ASSERT_EQ(p.good.size(), 2u);
    // the first window keeps everyone in A, so no family is emitted for it
    EXPECT_EQ(p.good[0].tubes, std::vector<int>{0});
    EXPECT_NEAR(p.good[0].T, 8.0 * std::exp(-0.5), 1e-12);
    EXPECT_EQ(p.good[1].tubes, std::vector<int>{1});
    EXPECT_NEAR(p.good[1].T, 8.0 * std::exp(-1.0), 1e-12);
}

TEST(ClassifyIterative, SenderAndReceiver) {
    LoopRelation r = synthetic(2, 1.0, 2.0);
    r.add(0, 1, 1.5, 1.6);
    EXPECT_EQ(classify_iterative(r, 1.0, LoopSense::sender).bad, std::vector<int>{0});
    EXPECT_EQ(classify_iterative(r, 1.0, LoopSense::receiver).bad, std::vector<int>{1});
    EXPECT_THROW(classify_iterative(r, 0.0), PreconditionError);
}

TEST(ClassifyIterative, FamiliesAreNonSelfLooping) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        LoopRelation r = synthetic(25, 1.0, 20.0);
        std::uniform_int_distribution<int> pick(0, 24);
        std::uniform_real_distribution<double> t(1.0, 20.0);
        for (int e = 0; e < 30; ++e) {
            double a = t(rng);
            r.add(pick(rng), pick(rng), a, std::min(20.0, a + 0.2));
        }
        LoopPartition p = classify_iterative(r, 1.0);
        EXPECT_TRUE(p.covers_all());
        for (const auto& g : p.good) {
            auto s = as_set(g.tubes);
            for (const auto& [i, j] : r.edges(g.t, g.T))
                EXPECT_FALSE(s.count(i) && s.count(j)) << i << "->" << j << " in window " << g.T;
        }
    }
}

// --- torus oracle

TEST(TorusOracle, FigureWindowTwelveDirections) {
    auto d = torus_bad_directions(1.6, 2.7, 1e-9, 1e-9);
    ASSERT_EQ(d.size(), 12u);
    std::set<std::pair<int, int>> got;
    for (const auto& x : d)
        got.insert({std::abs(x.p), std::abs(x.q)});
    EXPECT_EQ(got, (std::set<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 2}, {2, 1}}));
    for (const auto& x : d)
        EXPECT_NE(std::abs(x.p), std::abs(x.q)); // (1,1) returns at sqrt 2 and 2 sqrt 2
}

TEST(TorusOracle, ShortWindowAxesOnly) {
    auto d = torus_bad_directions(0.5, 1.2, 1e-9, 1e-9);
    ASSERT_EQ(d.size(), 4u);
    for (const auto& x : d)
        EXPECT_EQ(std::abs(x.p) + std::abs(x.q), 1);
}

TEST(TorusOracle, WindowMonotone) {
    std::size_t prev = 0;
    for (double T : {1.2, 1.6, 2.0, 2.7, 3.5, 5.0}) {
        auto d = torus_bad_directions(0.5, T, 0.01, 0.2);
        EXPECT_GE(d.size(), prev);
        prev = d.size();
    }
}

TEST(TorusOracle, ExactRelationMonotoneInWindow) {
    const auto& c = torus_case();
    auto ang = tube_angles(c.cv);
    const double meet = c.cv.R * 1.1;
    std::size_t prev = 0;
    for (auto [t0, T] : std::vector<std::pair<double, double>>{{1.6, 2.7}, {1.6, 3.2}, {1.0, 3.2}, {1.0, 5.0}}) {
        auto p = classify_single(torus_exact_relation(ang, c.cv.R, meet, t0, T));
        EXPECT_GE(p.bad.size(), prev) << t0 << " " << T;
        prev = p.bad.size();
    }
}

// --- flow relation on the torus

TEST(LoopRelation, PreconditionWindow) {
    const auto& c = torus_case();
    EXPECT_THROW(loop_relation(c.cv, 2.7, 1.6), PreconditionError);
}

TEST(LoopRelation, AxisLoopsAtTwo) {
    const auto& c = torus_case();
    EXPECT_TRUE(c.fwd.valid());
    int i = nearest_tube(c.cv, 0.0);
    bool near2 = false;
    for (const auto& iv : c.fwd.intervals(i, i))
        near2 = near2 || (iv.lo <= 2.05 && iv.hi >= 1.95);
    EXPECT_TRUE(near2);
}

TEST(LoopRelation, DiagonalHasNoLoops) {
    const auto& c = torus_case();
    int i = nearest_tube(c.cv, std::numbers::pi / 4.0);
    for (const auto& [k, v] : c.fwd.pairs)
        EXPECT_NE(k.first, i);
}

TEST(LoopRelation, SingleMatchesOracle) {
    const auto& c = torus_case();
    LoopPartition p = classify_single(c.fwd);
    TorusOracle o = torus_oracle(c.cv, 1.6, 2.7, c.fwd.meet_radius);
    EXPECT_EQ(p.bad, o.partition.bad);
    EXPECT_EQ(o.directions.size(), 12u);
    // every bad tube sits within a few R of one of the twelve directions
    auto ang = tube_angles(c.cv);
    for (int b : p.bad) {
        double best = 1e9;
        for (const auto& d : o.directions)
            best = std::min(best, std::abs(detail::wrap_angle(ang[b] - d.angle)));
        EXPECT_LE(best, 4.0 * c.cv.R) << b;
    }
}

TEST(LoopRelation, IterativeOnTorusMatchesSingle) {
    const auto& c = torus_case();
    LoopPartition s = classify_single(c.fwd);
    LoopPartition it = classify_iterative(c.fwd, 1.0);
    ASSERT_FALSE(it.good.empty());
    EXPECT_DOUBLE_EQ(it.good[0].T, 2.7);
    auto g0 = as_set(it.good[0].tubes);
    for (int i : s.good[0].tubes)
        EXPECT_TRUE(g0.count(i)) << i;
    EXPECT_EQ(it.bad, s.bad);
}

TEST(LoopRelation, ForwardBackwardSymmetric) {
    const auto& c = torus_case();
    LoopOptions bo;
    bo.backward = true;
    LoopRelation bwd = loop_relation(c.cv, 1.6, 2.7, bo);
    SymmetryReport rep = symmetric_consistency(c.fwd, bwd, c.cv.R);
    EXPECT_GT(rep.core, 0);
    EXPECT_EQ(rep.mismatches, 0);
}

TEST(LoopRelation, SampledSoundness) {
    const auto& c = torus_case();
    LoopPartition p = classify_single(c.fwd);
    VerifyOptions vo;
    vo.seeds_per_tube = 20;
    auto checks = verify_partition(c.cv, p, vo);
    ASSERT_EQ(checks.size(), 1u);
    EXPECT_EQ(checks[0].violations, 0);
    EXPECT_GT(checks[0].crossings, 0);
    EXPECT_TRUE(p.verification["pass"].get<bool>());
}

// --- padding radius

TEST(PadRadius, EmptySubset) {
    auto T = FlatTorus::unit(2);
    PadResult r = pad_radius(*T, origin(), 0, FiberSubset{}, 1.0, 5.0, 0.2);
    EXPECT_DOUBLE_EQ(r.radius, 0.2);
    EXPECT_FALSE(r.failed);
    EXPECT_THROW(pad_radius(*T, origin(), 0, FiberSubset{}, 5.0, 1.0), PreconditionError);
}

TEST(PadRadius, IrrationalDirectionPositive) {
    auto T = FlatTorus::unit(2);
    const double phi = std::numbers::phi;
    Vec xi(2);
    xi << 1.0, phi;
    FiberSubset G{{make_shell_point(*T, origin(), 0, xi.normalized())}, {0.0}};
    PadResult r = pad_radius(*T, origin(), 0, G, 1.0, 5.0);
    EXPECT_FALSE(r.failed);
    EXPECT_GT(r.radius, 0.0);
    // the certified ball must stay off the nearest lattice return inside [1, 5]
    auto d = torus_bad_directions(1.0, 5.0, r.radius, 0.0);
    double a = std::atan2(phi, 1.0);
    for (const auto& x : d)
        EXPECT_GT(std::abs(detail::wrap_angle(x.angle - a)) * x.return_time, r.radius) << x.p << "," << x.q;
}

TEST(PadRadius, AxisFlagged) {
    auto T = FlatTorus::unit(2);
    Vec xi(2);
    xi << 1.0, 0.0;
    FiberSubset G{{make_shell_point(*T, origin(), 0, xi)}, {0.0}};
    PadResult r = pad_radius(*T, origin(), 0, G, 1.5, 2.5);
    EXPECT_TRUE(r.failed);
    EXPECT_EQ(r.radius, 0.0);
}

// --- predicates

TEST(CoverPredicates, NonloopingThreshold) {
    EXPECT_TRUE(cover_predicates(9, {}, 0.01, 10.0, 2).nonlooping_ok);
    auto c = cover_predicates(12, {}, 0.01, 10.0, 2);
    EXPECT_FALSE(c.nonlooping_ok);
    EXPECT_NEAR(c.nonlooping_rhs, 10.0, 1e-12);
    EXPECT_NEAR(c.nonlooping_slack(), -2.0, 1e-12);
}

TEST(CoverPredicates, NonrecurrentBoundary) {
    GoodFamily g;
    g.tubes.resize(100);
    g.t = 1.0;
    g.T = 4.0;
    auto c = cover_predicates(0, {g}, 0.01, 4.0, 2);
    EXPECT_NEAR(c.nonrecurrent_lhs, 5.0, 1e-12);
    EXPECT_NEAR(c.nonrecurrent_rhs, 5.0, 1e-12);
    EXPECT_TRUE(c.nonrecurrent_ok);
    g.tubes.resize(101);
    EXPECT_FALSE(cover_predicates(0, {g}, 0.01, 4.0, 2).nonrecurrent_ok);
}

// --- surfaces of revolution

namespace {

struct PendulumCase {
    std::shared_ptr<SurfaceOfRevolution> m = SurfaceOfRevolution::pendulum(3.5);
    TubeCover cv;
    explicit PendulumCase(double R) {
        Vec x(2);
        x << std::numbers::pi / 2.0, 0.0;
        CoverOptions co;
        co.verify = false;
        co.flow.abs_tol = co.flow.rel_tol = 1e-10;
        cv = build_good_cover(*m, x, 0, 0.2, R, co);
    }
};

RevolutionOptions quick() {
    RevolutionOptions o;
    o.validate = false;
    return o;
}

} // namespace

TEST(Revolution, SingularRemovalBounded) {
    PendulumCase c(0.04);
    RevolutionResult r = revolution_bad_set(c.cv, 3.0, 0.5, quick());
    EXPECT_LE(r.singular.size(), static_cast<std::size_t>(std::ceil(std::pow(0.04, -0.5))));
    EXPECT_GT(r.singular.size(), 0u);
    EXPECT_TRUE(r.partition.covers_all());
    EXPECT_EQ(r.partition.bad, r.bad);
}

TEST(Revolution, TorusCountQuadratic) {
    PendulumCase c(0.04);
    double worst = 0.0, best = 1e300;
    for (double T : {3.0, 5.0, 8.0}) {
        RevolutionResult r = revolution_bad_set(c.cv, T, 0.5, quick());
        double ratio = static_cast<double>(r.tori.size()) / (T * T);
        worst = std::max(worst, ratio);
        best = std::min(best, ratio);
        EXPECT_GT(r.tori.size(), 0u);
    }
    // a single C works over the T range
    EXPECT_LE(worst, 1.0);
    EXPECT_LE(worst / best, 4.0);
}

TEST(Revolution, ReturnTimesInWindow) {
    PendulumCase c(0.04);
    RevolutionResult r = revolution_bad_set(c.cv, 5.0, 0.5, quick());
    for (const auto& t : r.returns) {
        EXPECT_GE(t.time, 1.0 - 1e-9);
        EXPECT_LE(t.time, 5.0 + 1e-9);
    }
}

TEST(Revolution, ValidatedFamily) {
    PendulumCase c(0.04);
    RevolutionOptions o;
    o.verify.seeds_per_tube = 8;
    RevolutionResult r = revolution_bad_set(c.cv, 3.0, 0.5, o);
    EXPECT_TRUE(r.validated);
    EXPECT_EQ(r.check.violations, 0);
}

TEST(Revolution, Preconditions) {
    PendulumCase c(0.04);
    EXPECT_THROW(revolution_bad_set(c.cv, 3.0, 1.5, quick()), PreconditionError);
    EXPECT_THROW(revolution_bad_set(c.cv, 100.0, 0.5, quick()), PreconditionError);
    auto T = FlatTorus::unit(2);
    CoverOptions co;
    co.verify = false;
    TubeCover tc = build_good_cover(*T, origin(), 0, 0.2, 0.04, co);
    EXPECT_THROW(revolution_bad_set(tc, 3.0, 0.5, quick()), PreconditionError);
}

TEST(Revolution, RoundSphereDegenerate) {
    auto S = SurfaceOfRevolution::polar_sphere();
    Vec x(2);
    x << std::numbers::pi / 2.0, 0.0;
    CoverOptions co;
    co.verify = false;
    TubeCover cv = build_good_cover(*S, x, 0, 0.2, 0.04, co);
    EXPECT_THROW(revolution_bad_set(cv, 3.0, 0.5, quick()), StructuralError);
}
