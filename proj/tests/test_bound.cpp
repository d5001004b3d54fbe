#include <geobeam/bound.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace geobeam;

namespace {

BoundInputs basic() {
    BoundInputs in;
    in.n = 2;
    in.h = 1e-6;
    in.delta = 0.45; // 8 h^delta = 0.016 <= R
    in.tau = 0.2;
    in.R = 0.04;
    in.colors = 10;
    in.bad = 25;
    in.families = {{100, 1.0, 4.0}};
    in.lambda_max = 0.5;
    in.tubes = 125;
    return in;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

std::vector<FamilySummary> random_families(std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<FamilySummary> f;
    for (int l = 0; l < count; ++l) {
        double t = 0.5 + u(rng);
        f.push_back({std::floor(1 + 500 * u(rng)), t, t + 10 * u(rng)});
    }
    return f;
}

} // namespace

TEST(Bound, WorkedExample) {
    double bt = 0, st = 0;
    EXPECT_NEAR(factor_F(2, 0.04, 25, {{100, 1.0, 4.0}}, &bt, &st), 2.0, 1e-14);
    EXPECT_NEAR(bt, 1.0, 1e-15);
    EXPECT_NEAR(st, 1.0, 1e-15);
}

TEST(Bound, AllBadBaselineIndependentOfR) {
    for (double R : {0.1, 0.04, 0.02, 0.01, 0.001}) {
        double N = std::ceil(2.0 * std::numbers::pi / (R / 2.0));
        double F = factor_F(2, R, N, {});
        EXPECT_NEAR(F, std::sqrt(4.0 * std::numbers::pi), 0.02) << R;
    }
}

TEST(Bound, EmptyPartition) {
    EXPECT_EQ(factor_F(2, 0.01, 0, {}), 0.0);
    EXPECT_EQ(factor_F_check(2, 0.01, 0, {}), 0.0);
}

TEST(Bound, IndependentCheckAgrees) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        int n = 2 + static_cast<int>(3 * u(rng));
        double R = 0.001 + 0.1 * u(rng);
        double bad = std::floor(300 * u(rng));
        auto f = random_families(rng, 1 + static_cast<int>(6 * u(rng)));
        EXPECT_LE(rel(factor_F(n, R, bad, f), factor_F_check(n, R, bad, f)), 1e-14);
    }
}

TEST(Bound, DoublingWindowsScalesSum) {
    std::mt19937_64 rng(4);
    for (int k = 0; k < 200; ++k) {
        auto f = random_families(rng, 4);
        double bt = 0, st = 0, bt2 = 0, st2 = 0;
        factor_F(2, 0.02, 40, f, &bt, &st);
        for (auto& x : f)
            x.T *= 2.0;
        double F2 = factor_F(2, 0.02, 40, f, &bt2, &st2);
        EXPECT_EQ(bt, bt2);
        EXPECT_LE(rel(F2 - bt2, st / std::sqrt(2.0)), 1e-14);
    }
}

TEST(Bound, MonotoneInBadSet) {
    std::mt19937_64 rng(9);
    auto f = random_families(rng, 3);
    double prev = -1.0;
    for (int b = 0; b < 200; ++b) {
        double F = factor_F(2, 0.01, b, f);
        EXPECT_GE(F, prev);
        EXPECT_GE(F, 0.0);
        prev = F;
    }
}

TEST(Bound, MassForm) {
    EXPECT_NEAR(factor_F_mass(2, 0.04, {0.5, 1.5, 2.0}), 0.2 * 4.0, 1e-15);
    EXPECT_NEAR(factor_F_mass(3, 0.04, {1.0}), 0.04, 1e-15);
    EXPECT_EQ(factor_F_mass(2, 0.04, {}), 0.0);
}

TEST(Certificate, ValidExample) {
    BoundCertificate c = certificate(basic());
    EXPECT_TRUE(c.valid) << c.to_json().dump(2);
    EXPECT_NEAR(c.F, 2.0, 1e-14);
    EXPECT_LE(rel(c.F, c.F_check), 1e-14);
    EXPECT_NEAR(c.ehrenfest, std::log(1e6) / 1.0, 1e-12);
    EXPECT_NEAR(c.baseline, 0.2 * std::sqrt(125.0), 1e-14);
    EXPECT_EQ(c.to_json()["status"], "VALID");
}

TEST(Certificate, RadiusGate) {
    BoundInputs in = basic();
    in.h = 1e-3;
    in.delta = 0.4;
    in.R = 0.01;
    BoundCertificate c = certificate(in);
    EXPECT_FALSE(c.valid);
    auto f = c.failing();
    EXPECT_NE(std::find(f.begin(), f.end(), "R(h) >= 8h^delta"), f.end());
    EXPECT_NEAR(c.constraints[0].rhs, 8.0 * std::pow(1e-3, 0.4), 1e-15);
    EXPECT_EQ(c.to_json()["status"], "INVALID");
}

TEST(Certificate, EhrenfestGate) {
    BoundInputs in = basic();
    in.alpha = 0.1; // 2 alpha T_e = 0.2 * 13.8 = 2.76 < 4
    BoundCertificate c = certificate(in);
    EXPECT_FALSE(c.valid);
    auto f = c.failing();
    EXPECT_NE(std::find(f.begin(), f.end(), "T_0 <= 2 alpha T_e(h)"), f.end());
}

TEST(Certificate, AlphaLimitGate) {
    BoundInputs in = basic();
    in.alpha = 0.99; // limit is 1 - 2 log 0.04 / log 1e-6 = 0.534
    BoundCertificate c = certificate(in);
    EXPECT_FALSE(c.valid);
    auto f = c.failing();
    EXPECT_NE(std::find(f.begin(), f.end(), "alpha < 1 - 2 log R / log h"), f.end());
}

TEST(Certificate, WindowOrderGate) {
    BoundInputs in = basic();
    in.families = {{100, 5.0, 4.0}};
    EXPECT_FALSE(certificate(in).valid);
}

TEST(Certificate, NoValidCertificateBreaksAGate) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int valid = 0;
    for (int k = 0; k < 2000; ++k) {
        BoundInputs in = basic();
        in.h = std::pow(10.0, -1 - 11 * u(rng));
        in.delta = 0.01 + 0.48 * u(rng);
        in.R = 0.001 + 0.2 * u(rng);
        in.lambda_max = 0.01 + 2 * u(rng);
        in.families = random_families(rng, 3);
        if (u(rng) < 0.5)
            in.alpha = u(rng);
        BoundCertificate c = certificate(in);
        if (!c.valid)
            continue;
        ++valid;
        EXPECT_GE(in.R, 8.0 * std::pow(in.h, in.delta));
        for (const auto& f : in.families)
            EXPECT_LE(f.T, 2.0 * c.alpha_used * c.ehrenfest * (1.0 + 1e-15));
        EXPECT_LT(c.alpha_used, c.alpha_limit);
    }
    EXPECT_GT(valid, 0);
}

TEST(Certificate, Preconditions) {
    BoundInputs in = basic();
    in.h = 1.5;
    EXPECT_THROW(certificate(in), PreconditionError);
    in = basic();
    in.delta = 0.5;
    EXPECT_THROW(certificate(in), PreconditionError);
    in = basic();
    in.lambda_max = 0.0;
    EXPECT_THROW(certificate(in), PreconditionError);
}

TEST(Certificate, InputsFromPartition) {
    LoopPartition p;
    p.size = 10;
    p.bad = {1, 2};
    p.good = {{{0, 3, 4, 5}, 1.0, 3.0}, {{6, 7, 8, 9}, 1.0, 2.0}};
    BoundInputs in = bound_inputs(p, 2, 1e-6, 0.45, 0.2, 0.04, 7, 0.5, false);
    EXPECT_EQ(in.bad, 2.0);
    ASSERT_EQ(in.families.size(), 2u);
    EXPECT_EQ(in.families[1].count, 4.0);
    EXPECT_EQ(in.tubes, 10);
}

TEST(Sweep, CsvHeader) {
    std::string csv = sweep_csv({{0.04, 2.9, 250, 70, 1.2, 3.6, true}});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "R,T,N_tubes,bad_count,sum_term,F,valid");
    EXPECT_NE(csv.find(",250,70,"), std::string::npos);
}
