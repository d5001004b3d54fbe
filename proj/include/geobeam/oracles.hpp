#ifndef GEOBEAM_ORACLES_HPP
#define GEOBEAM_ORACLES_HPP

#include "looping.hpp"
#include "manifolds.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace geobeam {

// ---------------------------------------------------------------------------
// Unit square torus: lattice returns

struct LatticeDirection {
    int p = 0, q = 0, k = 1;
    double angle = 0.0;       // in [0, 2 pi)
    double return_time = 0.0; // k |(p, q)|, smallest in the window
    double half_width = 0.0;  // asin(min(1, 2R / (k |(p, q)|)))
};

// Primitive lattice directions with a return time k|(p,q)| in [t0, T]; with
// widen set the window grows by tau + 2R on both sides.
inline std::vector<LatticeDirection> torus_bad_directions(double t0, double T, double R, double tau,
                                                          bool widen = false) {
    if (!(0.0 < t0 && t0 <= T))
        throw PreconditionError("torus oracle needs 0 < t0 <= T");
    double lo = t0, hi = T;
    if (widen) {
        lo -= tau + 2.0 * R;
        hi += tau + 2.0 * R;
    }
    std::vector<LatticeDirection> out;
    int B = static_cast<int>(std::ceil(hi)) + 1;
    for (int p = -B; p <= B; ++p)
        for (int q = -B; q <= B; ++q) {
            if ((p == 0 && q == 0) || std::gcd(std::abs(p), std::abs(q)) != 1)
                continue;
            double nrm = std::hypot(static_cast<double>(p), static_cast<double>(q));
            int k = std::max(1, static_cast<int>(std::ceil(lo / nrm - 1e-12)));
            if (k * nrm > hi + 1e-12 || k * nrm < lo - 1e-12)
                continue;
            LatticeDirection d;
            d.p = p;
            d.q = q;
            d.k = k;
            d.return_time = k * nrm;
            d.angle = std::atan2(static_cast<double>(q), static_cast<double>(p));
            if (d.angle < 0)
                d.angle += 2.0 * std::numbers::pi;
            d.half_width = std::asin(std::min(1.0, 2.0 * R / d.return_time));
            out.push_back(d);
        }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.angle < b.angle; });
    return out;
}

namespace detail {

inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * std::numbers::pi);
    if (a > std::numbers::pi)
        a -= 2.0 * std::numbers::pi;
    if (a < -std::numbers::pi)
        a += 2.0 * std::numbers::pi;
    return a;
}

inline double chord(double a) { return 2.0 * std::abs(std::sin(0.5 * a)); }

} // namespace detail

// Exact cap-return relation on the unit torus from lattice geometry. A cap point of
// tube i is (a, phi): base offset a along the normal, fiber rotation phi, with
// a^2 + chord(phi)^2 <= R^2. Following it to the copy x + V gives a return at
// u = V.eta and a landing at normal offset a - V.e_perp, so the landing distance
// to tube j is sqrt((a - V.e_perp)^2 + chord(theta_i + phi - theta_j)^2).
inline LoopRelation torus_exact_relation(const std::vector<double>& angles, double R, double meet_radius, double t0,
                                         double T) {
    LoopRelation rel;
    rel.size = static_cast<int>(angles.size());
    rel.t0 = t0;
    rel.T = T;
    rel.source = "lattice";
    rel.meet_radius = meet_radius;
    const double Rm = meet_radius;
    const double phimax = 2.0 * std::asin(std::min(1.0, R / 2.0));
    const int B = static_cast<int>(std::ceil(T)) + 1;
    const int grid = 2000;
    for (int i = 0; i < rel.size; ++i) {
        const double th = angles[i];
        for (int a = -B; a <= B; ++a)
            for (int b = -B; b <= B; ++b) {
                if (a == 0 && b == 0)
                    continue;
                const double nV = std::hypot(static_cast<double>(a), static_cast<double>(b));
                if (nV < t0) // u <= |V|
                    continue;
                const double psi = std::atan2(static_cast<double>(b), static_cast<double>(a));
                if (nV * std::abs(std::sin(psi - th)) > R + Rm + nV * phimax + 1e-12)
                    continue;
                auto lateral = [&](double phi) { return nV * std::sin(psi - th - phi); };
                auto ret = [&](double phi) { return nV * std::cos(psi - th - phi); };
                for (int j = 0; j < rel.size; ++j) {
                    double dth = detail::wrap_angle(angles[j] - th);
                    if (std::abs(dth) > phimax + 2.0 * std::asin(std::min(1.0, Rm / 2.0)) + 1e-9)
                        continue;
                    auto D2 = [&](double phi) {
                        double u = ret(phi);
                        if (u < t0 || u > T)
                            return std::numeric_limits<double>::infinity();
                        double c = detail::chord(phi);
                        double amax = std::sqrt(std::max(0.0, R * R - c * c));
                        double l = lateral(phi);
                        double as = std::clamp(l, -amax, amax);
                        double cj = detail::chord(th + phi - angles[j]);
                        return (as - l) * (as - l) + cj * cj;
                    };
                    int best = 0;
                    double fb = std::numeric_limits<double>::infinity();
                    for (int g = 0; g <= grid; ++g) {
                        double phi = -phimax + 2.0 * phimax * g / grid;
                        double f = D2(phi);
                        if (f < fb) {
                            fb = f;
                            best = g;
                        }
                    }
                    if (!std::isfinite(fb))
                        continue;
                    double lo = -phimax + 2.0 * phimax * std::max(0, best - 1) / grid;
                    double hi = -phimax + 2.0 * phimax * std::min(grid, best + 1) / grid;
                    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
                    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
                    double f1 = D2(x1), f2 = D2(x2);
                    for (int it = 0; it < 80; ++it) {
                        if (f1 < f2) {
                            hi = x2;
                            x2 = x1;
                            f2 = f1;
                            x1 = hi - gr * (hi - lo);
                            f1 = D2(x1);
                        } else {
                            lo = x1;
                            x1 = x2;
                            f1 = f2;
                            x2 = lo + gr * (hi - lo);
                            f2 = D2(x2);
                        }
                    }
                    double phi_opt = f1 < fb ? x1 : (f2 < fb ? x2 : -phimax + 2.0 * phimax * best / grid);
                    double fopt = std::min({fb, f1, f2});
                    if (std::sqrt(fopt) <= Rm) {
                        double u = ret(phi_opt);
                        rel.add(i, j, u, u, std::sqrt(fopt));
                    }
                }
            }
    }
    rel.normalize(0.05);
    return rel;
}

inline std::vector<double> tube_angles(const TubeCover& cv) {
    std::vector<double> out;
    for (const auto& t : cv.tubes) {
        double a = std::atan2(t.center.xi[1], t.center.xi[0]);
        out.push_back(a < 0 ? a + 2.0 * std::numbers::pi : a);
    }
    return out;
}

struct TorusOracle {
    std::vector<LatticeDirection> directions;
    LoopRelation relation;
    LoopPartition partition;
    // tubes whose center lies within the angular half-width of a bad direction
    std::vector<int> direction_tubes;
};

inline TorusOracle torus_oracle(const TubeCover& cv, double t0, double T, double meet_radius, bool widen = false) {
    TorusOracle o;
    o.directions = torus_bad_directions(t0, T, cv.R, cv.tau, widen);
    std::vector<double> ang = tube_angles(cv);
    o.relation = torus_exact_relation(ang, cv.R, meet_radius, t0, T);
    o.partition = classify_single(o.relation);
    o.partition.provenance = "oracle";
    for (std::size_t i = 0; i < ang.size(); ++i)
        for (const auto& d : o.directions)
            if (std::abs(detail::wrap_angle(ang[i] - d.angle)) <= d.half_width) {
                o.direction_tubes.push_back(static_cast<int>(i));
                break;
            }
    return o;
}

// ---------------------------------------------------------------------------
// Surfaces of revolution: returns from the Clairaut-reduced radial motion

// Half-trip data for the torus xi_theta = ell through the base radius r0: the
// trip "a" goes from r0 up to the upper turning point and back, "b" down and back.
struct ReturnData {
    double ell = 0.0;
    double ta = 0.0, tb = 0.0;
    double theta_a = 0.0, theta_b = 0.0;
    double period() const { return ta + tb; }
    double rotation() const { return theta_a + theta_b; }
};

class RevolutionReturns {
public:
    RevolutionReturns(const SurfaceOfRevolution& m, double r0) : m_(&m), r0_(r0) {
        auto chk = m.check_integrable();
        if (!chk.ok)
            throw StructuralError("profile fails the integrability check");
        rstar_ = chk.r_max;
        speed_ = m.has_potential() ? 2.0 : 1.0;
        ell_max_ = m.clairaut_bound(r0);
    }

    double ell_max() const { return ell_max_; }
    double r_star() const { return rstar_; }

    double V(double r) const { return m_->potential() ? m_->potential()->value(r) : 1.0; }

    // alpha^2 V and its first two derivatives
    double P0(double r) const {
        double a = m_->alpha().value(r);
        return a * a * V(r);
    }
    double P1(double r) const {
        const Profile& al = m_->alpha();
        double a = al.value(r), a1 = al.d1(r);
        double v = V(r), v1 = m_->potential() ? m_->potential()->d1(r) : 0.0;
        return 2.0 * a * a1 * v + a * a * v1;
    }
    double P2(double r) const {
        const Profile& al = m_->alpha();
        double a = al.value(r), a1 = al.d1(r), a2 = al.d2(r);
        const Profile* pv = m_->potential();
        double v = V(r), v1 = pv ? pv->d1(r) : 0.0, v2 = pv ? pv->d2(r) : 0.0;
        return 2.0 * (a1 * a1 + a * a2) * v + 4.0 * a * a1 * v1 + a * a * v2;
    }

    ReturnData at(double ell) const {
        const double al = std::abs(ell);
        if (!(al < ell_max_))
            throw PreconditionError("ell outside the fiber range");
        using boost::math::tools::toms748_solve;
        auto f = [&](double r) { return m_->clairaut_bound(r) - al; };
        boost::math::tools::eps_tolerance<double> tol(50);
        std::uintmax_t it = 200;
        const double g = m_->pole_guard();
        double rm, rp;
        if (al == 0.0) {
            rm = 0.0;
            rp = std::numbers::pi;
        } else {
            double a = g * 1e-3, b = std::min(r0_, rstar_);
            auto rr = toms748_solve(f, a, b, f(a), f(b), tol, it);
            rm = 0.5 * (rr.first + rr.second);
            it = 200;
            a = std::max(r0_, rstar_);
            b = std::numbers::pi - g * 1e-3;
            rr = toms748_solve(f, a, b, f(a), f(b), tol, it);
            rp = 0.5 * (rr.first + rr.second);
        }
        const double w = rp - rm;
        // P(r) = alpha^2 V - ell^2 = (r - rm)(rp - r) Q(r); near a turning point Q comes
        // from a second-order expansion of P, elsewhere from the quotient.
        auto P = [&](double r) { return P0(r) - ell * ell; };
        auto Q = [&](double phi) {
            double sm = std::sin(0.5 * phi), cm = std::cos(0.5 * phi);
            double dm = w * sm * sm, dp = w * cm * cm;
            if (dm < 1e-4 * w)
                return (P1(rm) + 0.5 * P2(rm) * dm) / dp;
            if (dp < 1e-4 * w)
                return (-P1(rp) + 0.5 * P2(rp) * dp) / dm;
            return P(rm + dm) / (dm * dp);
        };
        auto r_of = [&](double phi) { return rm + w * std::pow(std::sin(0.5 * phi), 2); };
        auto dt = [&](double phi) { return m_->alpha().value(r_of(phi)) / (speed_ * std::sqrt(Q(phi))); };
        auto dth = [&](double phi) { return ell / (m_->alpha().value(r_of(phi)) * std::sqrt(Q(phi))); };
        double c = std::clamp(1.0 - 2.0 * (r0_ - rm) / w, -1.0, 1.0);
        double phi0 = std::acos(c);
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        const double pi = std::numbers::pi;
        ReturnData d;
        d.ell = ell;
        d.ta = 2.0 * GK::integrate(dt, phi0, pi, 12, 1e-12);
        d.tb = 2.0 * GK::integrate(dt, 0.0, phi0, 12, 1e-12);
        if (ell != 0.0) {
            d.theta_a = 2.0 * GK::integrate(dth, phi0, pi, 12, 1e-12);
            d.theta_b = 2.0 * GK::integrate(dth, 0.0, phi0, 12, 1e-12);
        }
        return d;
    }

    // Period of the meridian (over both poles); needs V > 0 everywhere.
    double meridian_period() const {
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        return GK::integrate([&](double r) { return 1.0 / (speed_ * std::sqrt(V(r))); }, 0.0, std::numbers::pi, 15,
                             1e-14) *
               2.0;
    }

private:
    const SurfaceOfRevolution* m_;
    double r0_;
    double rstar_ = 0.0;
    double speed_ = 1.0;
    double ell_max_ = 0.0;
};

struct RationalTorus {
    double ell = 0.0;
    int k = 0;       // full radial periods
    int m = 0;       // turns in theta
    int branch = 0;  // 0 same branch; +1 / -1 cross branch starting up / down
    double time = 0.0;
};

struct RevolutionOptions {
    int samples = 4096;
    double t0 = 1.0;
    double width_constant = 0.3;      // C in C T R^a1 (action units)
    double singular_constant = 0.125; // c in c R^(1 - a1)
    double horizon_constant = 2.0;    // T < c R^(a1 - 1)
    bool validate = true;
    VerifyOptions verify{32, 200, 0.1, 11, 1};
};

struct RevolutionResult {
    std::vector<int> bad;
    std::vector<int> singular;
    std::vector<int> rational;
    std::vector<RationalTorus> returns;
    std::vector<double> tori; // distinct ell values
    double width = 0.0;
    double singular_width = 0.0;
    double meridian_period = 0.0;
    double beta = 0.0;           // (|B| - R^-a1) / (T^3 R^(1-a1))
    double beta_corrected = 0.0; // (|B| - R^-a1) / (T^3 R^(a1-1))
    double min_twist = 0.0;
    LoopPartition partition;
    FamilyCheck check;
    bool validated = false;

    nlohmann::json to_json() const {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& t : returns)
            r.push_back({{"ell", t.ell}, {"k", t.k}, {"m", t.m}, {"branch", t.branch}, {"time", t.time}});
        return {{"bad_count", bad.size()},
                {"singular_count", singular.size()},
                {"rational_count", rational.size()},
                {"torus_count", tori.size()},
                {"tori", tori},
                {"returns", r},
                {"width", width},
                {"singular_width", singular_width},
                {"meridian_period", meridian_period},
                {"beta", beta},
                {"beta_corrected", beta_corrected},
                {"min_twist", min_twist},
                {"validated", validated},
                {"check", check.to_json()}};
    }
};

namespace detail {

template <class G>
double bisect_root(G&& g, double a, double b, double ga) {
    for (int it = 0; it < 200 && std::abs(b - a) > 1e-15; ++it) {
        double mid = 0.5 * (a + b);
        double gm = g(mid);
        if (std::abs(gm) <= 1e-10)
            return mid;
        if ((gm < 0) == (ga < 0)) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

// Rational tori through the fiber with a return to x at a time in [t0, T].
inline std::vector<RationalTorus> rational_returns(const RevolutionReturns& rr, double t0, double T, int samples,
                                                   double* min_twist = nullptr) {
    const double pi2 = 2.0 * std::numbers::pi;
    const int half = samples / 2;
    const double L = rr.ell_max();
    std::vector<double> ells;
    for (int k = -(half - 1); k <= half - 1; ++k)
        if (k != 0)
            ells.push_back(L * k / half);
    std::vector<ReturnData> data;
    data.reserve(ells.size());
    for (double e : ells)
        data.push_back(rr.at(e));
    double tmin = 1e300;
    for (const auto& d : data)
        tmin = std::min(tmin, std::min(d.period(), std::min(d.ta, d.tb) + d.period()));
    // iso-energetic twist: the rotation map must be strictly monotone on each side
    double twist = 1e300;
    int sgn = 0;
    for (std::size_t i = 1; i < data.size(); ++i) {
        if ((ells[i] > 0) != (ells[i - 1] > 0))
            continue;
        double dr = (data[i].rotation() - data[i - 1].rotation()) / (ells[i] - ells[i - 1]);
        twist = std::min(twist, std::abs(dr));
        int s = dr > 0 ? 1 : (dr < 0 ? -1 : 0);
        if (sgn == 0)
            sgn = s;
        if (s == 0 || s != sgn)
            throw StructuralError("rotation-number map is degenerate (iso-energetic non-degeneracy fails)");
    }
    if (min_twist)
        *min_twist = twist;
    std::vector<RationalTorus> out;
    const int kmax = static_cast<int>(std::floor(T / tmin)) + 1;
    // value functions: branch 0 -> k Theta, branch +1 -> Theta_a + k Theta, -1 -> Theta_b + k Theta
    auto value = [](const ReturnData& d, int k, int br) {
        double base = br == 1 ? d.theta_a : (br == -1 ? d.theta_b : 0.0);
        return base + k * d.rotation();
    };
    auto time = [](const ReturnData& d, int k, int br) {
        double base = br == 1 ? d.ta : (br == -1 ? d.tb : 0.0);
        return base + k * d.period();
    };
    for (int br : {0, 1, -1})
        for (int k = br == 0 ? 1 : 0; k <= kmax; ++k)
            for (std::size_t i = 1; i < data.size(); ++i) {
                if ((ells[i] > 0) != (ells[i - 1] > 0))
                    continue;
                double va = value(data[i - 1], k, br) / pi2, vb = value(data[i], k, br) / pi2;
                long m0 = static_cast<long>(std::ceil(std::min(va, vb))), m1 = static_cast<long>(std::floor(std::max(va, vb)));
                for (long m = m0; m <= m1; ++m) {
                    auto g = [&](double e) { return value(rr.at(e), k, br) / pi2 - static_cast<double>(m); };
                    double ga = va - m;
                    double root = ga == 0.0 ? ells[i - 1] : detail::bisect_root(g, ells[i - 1], ells[i], ga);
                    ReturnData d = rr.at(root);
                    double t = time(d, k, br);
                    if (t < t0 || t > T)
                        continue;
                    bool dup = false;
                    for (const auto& o : out)
                        if (o.branch == br && o.k == k && o.m == m && std::abs(o.ell - root) < 1e-9)
                            dup = true;
                    if (!dup)
                        out.push_back({root, k, static_cast<int>(m), br, t});
                }
            }
    // meridian: full returns at multiples of its period
    double P0 = rr.meridian_period();
    for (int k = 1; k * P0 <= T; ++k)
        if (k * P0 >= t0)
            out.push_back({0.0, k, k, 0, k * P0});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.ell != b.ell ? a.ell < b.ell : (a.time < b.time);
    });
    return out;
}

inline RevolutionResult revolution_bad_set(const TubeCover& cv, double T, double alpha1,
                                           const RevolutionOptions& o = {}) {
    const auto* m = dynamic_cast<const SurfaceOfRevolution*>(cv.manifold);
    if (!m)
        throw PreconditionError("revolution_bad_set needs a surface of revolution");
    const double r0 = cv.x[0], R = cv.R;
    if (r0 < 0.1 || r0 > std::numbers::pi - 0.1)
        throw PreconditionError("base point too close to a pole");
    if (!(alpha1 > 0.0 && alpha1 < 1.0))
        throw PreconditionError("alpha1 must lie in (0, 1)");
    if (!(T > o.t0 && T < o.horizon_constant * std::pow(R, alpha1 - 1.0)))
        throw PreconditionError("T outside (t0, c R^(alpha1 - 1))");
    RevolutionReturns rr(*m, r0);
    RevolutionResult res;
    res.meridian_period = rr.meridian_period();
    res.returns = rational_returns(rr, o.t0, T, o.samples, &res.min_twist);
    for (const auto& t : res.returns)
        if (res.tori.empty() || std::abs(res.tori.back() - t.ell) > 1e-9)
            res.tori.push_back(t.ell);
    res.width = o.width_constant * T * std::pow(R, alpha1);
    res.singular_width = o.singular_constant * std::pow(R, 1.0 - alpha1);

    LocalGeometry lg = local_geometry(*m, cv.x, cv.chart);
    const double lmax = rr.ell_max();
    Vec s1(2), s2(2);
    s1 << 0.0, lmax;
    s2 << 0.0, -lmax;
    std::vector<char> bad(cv.tubes.size(), 0);
    for (const auto& t : cv.tubes) {
        const Vec& xi = t.center.xi;
        if (fiber_distance(lg, xi, s1) <= res.singular_width || fiber_distance(lg, xi, s2) <= res.singular_width) {
            res.singular.push_back(t.index);
            bad[t.index] = 1;
        }
        bool rat = false;
        for (double e : res.tori)
            if (std::abs(xi[1] - e) <= res.width)
                rat = true;
        if (rat) {
            res.rational.push_back(t.index);
            bad[t.index] = 1;
        }
    }
    LoopPartition& p = res.partition;
    p.size = cv.size();
    p.provenance = "revolution";
    GoodFamily g;
    g.t = o.t0;
    g.T = T;
    for (int i = 0; i < cv.size(); ++i) {
        if (bad[i])
            p.bad.push_back(i);
        else
            g.tubes.push_back(i);
    }
    if (!g.tubes.empty())
        p.good.push_back(g);
    res.bad = p.bad;
    double excess = std::max(0.0, static_cast<double>(res.bad.size()) - std::pow(R, -alpha1));
    res.beta = excess / (T * T * T * std::pow(R, 1.0 - alpha1));
    res.beta_corrected = excess / (T * T * T * std::pow(R, alpha1 - 1.0));
    if (o.validate && !p.good.empty()) {
        res.check = verify_partition(cv, p, o.verify).front();
        res.validated = res.check.violations == 0;
    } else {
        res.validated = true;
    }
    return res;
}

} // namespace geobeam

#endif
