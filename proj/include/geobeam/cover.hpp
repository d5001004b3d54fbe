#ifndef GEOBEAM_COVER_HPP
#define GEOBEAM_COVER_HPP

#include "flow.hpp"
#include "parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <unordered_map>
#include <vector>

namespace geobeam {

// ---------------------------------------------------------------------------
// Cap parameterisation
//
// A cap point around a fiber point rho = (x, xi) is given by c = (p, q) in R^{2n-2}:
// q moves the covector along the fiber sphere (chord length |q|), p moves the base
// point in the g-orthonormal complement of the new covector, so the transversal
// function <y - x, eta> vanishes. |c| is the Sasaki distance to rho at first order
// and exactly on flat metrics.
class CapChart {
public:
    CapChart(const Manifold& m, const PhasePoint& center, double energy = 0.0) : m_(&m), rho_(center), energy_(energy) {
        n_ = m.dim();
        lg_ = local_geometry(m, center.x, center.chart);
        L_ = covector_frame(lg_.g);
        radius_ = fiber_radius(m, lg_, energy);
        Vec u = L_.triangularView<Eigen::Lower>().solve(center.xi);
        u0_ = u / u.norm();
        B_ = complement(u0_);
    }

    int dim() const { return 2 * (n_ - 1); }
    const PhasePoint& center() const { return rho_; }
    double fiber_radius_at_center() const { return radius_; }

    PhasePoint point(const Eigen::VectorXd& c) const {
        const int k = n_ - 1;
        Vec q = c.tail(k), p = c.head(k);
        Vec u = u0_;
        Mat Bu = B_;
        double qn = q.norm();
        if (qn > 0.0) {
            double phi = 2.0 * std::asin(std::min(1.0, qn / (2.0 * radius_)));
            Vec w = B_ * (q / qn);
            // rotation in the plane (u0, w)
            auto rot = [&](const Vec& v) {
                double a = v.dot(u0_), b = v.dot(w);
                return Vec(v + (std::cos(phi) - 1.0) * (a * u0_ + b * w) + std::sin(phi) * (a * w - b * u0_));
            };
            u = rot(u0_);
            for (int j = 0; j < k; ++j)
                Bu.col(j) = rot(B_.col(j));
        }
        Vec eta = radius_ * (L_ * u);
        // V is the initial velocity of the radial geodesic, orthogonal to eta
        Vec V = L_.transpose().triangularView<Eigen::Upper>().solve(Vec(Bu * p));
        Vec y = rho_.x;
        if (p.norm() > 0.0) {
            Transversal F(*m_, rho_.x, rho_.chart);
            y = F.exp_point(V);
            Vec v = y - rho_.x;
            Christoffel gam = christoffel(*m_, Vec(rho_.x + 0.5 * v), rho_.chart);
            eta = transport_covector(gam, v, eta);
            // restore F = 0 exactly (third-order correction)
            Vec w = F.radial(v);
            Vec gw = local_geometry(*m_, y, rho_.chart).g * w;
            eta -= (w.dot(eta) / w.dot(gw)) * gw;
        }
        int chart = rho_.chart;
        m_->canonicalize(y, chart);
        if (!m_->in_domain(y, chart))
            throw DomainError("cap point outside chart domain");
        LocalGeometry ly = local_geometry(*m_, y, chart);
        project_to_shell(*m_, ly, eta, energy_);
        return PhasePoint{y, eta, chart, hamiltonian(*m_, ly, eta)};
    }

    // Unit-sphere direction of a covector at the center's base point.
    Vec direction(const Vec& xi) const {
        Vec u = L_.triangularView<Eigen::Lower>().solve(xi);
        return u / u.norm();
    }

    static Mat complement(const Vec& u0) {
        const int n = static_cast<int>(u0.size());
        Mat B(n, n - 1);
        int col = 0;
        std::vector<Vec> basis{u0};
        for (int e = 0; e < n && col < n - 1; ++e) {
            Vec w = Vec::Zero(n);
            w[e] = 1.0;
            for (const Vec& b : basis)
                w -= w.dot(b) * b;
            if (w.norm() > 1e-6) {
                w.normalize();
                basis.push_back(w);
                B.col(col++) = w;
            }
        }
        if (n == 2) {
            // fixed orientation: rotate u0 by +90 degrees
            B.col(0) = Vec((Vec(2) << -u0[1], u0[0]).finished());
        }
        return B;
    }

private:
    const Manifold* m_;
    PhasePoint rho_;
    double energy_;
    int n_ = 0;
    LocalGeometry lg_;
    Mat L_;
    double radius_ = 1.0;
    Vec u0_;
    Mat B_;
};

// Deterministic points of the ball of radius r in R^d, center first.
inline std::vector<Eigen::VectorXd> ball_pattern(int d, int count, double r, std::uint64_t seed = 17) {
    std::vector<Eigen::VectorXd> out;
    out.push_back(Eigen::VectorXd::Zero(d));
    if (d == 2) {
        // sunflower spiral reaching the boundary
        const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 1; k < count; ++k) {
            double rad = r * std::sqrt(static_cast<double>(k) / (count - 1));
            Eigen::VectorXd c(2);
            c << rad * std::cos(k * ga), rad * std::sin(k * ga);
            out.push_back(c);
        }
        return out;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    while (static_cast<int>(out.size()) < count) {
        Eigen::VectorXd c(d);
        for (int i = 0; i < d; ++i)
            c[i] = nd(rng);
        c *= r * std::pow(U(rng), 1.0 / d) / c.norm();
        out.push_back(c);
    }
    return out;
}

inline Eigen::VectorXd random_ball_point(std::mt19937_64& rng, int d, double r) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Eigen::VectorXd c(d);
    for (int i = 0; i < d; ++i)
        c[i] = nd(rng);
    return c * (r * std::pow(U(rng), 1.0 / d) / c.norm());
}

// Estimated covering radius of a pattern inside the ball of radius r.
inline double pattern_covering_radius(const std::vector<Eigen::VectorXd>& pts, double r, int probes = 4000) {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    const int d = static_cast<int>(pts.front().size());
    for (int i = 0; i < probes; ++i) {
        Eigen::VectorXd c = random_ball_point(rng, d, r);
        if (i % 4 == 0)
            c *= r / std::max(c.norm(), 1e-300); // boundary probes
        double best = 1e300;
        for (const auto& p : pts)
            best = std::min(best, (c - p).norm());
        worst = std::max(worst, best);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Separated centers

struct CenterSet {
    std::vector<PhasePoint> centers;
    int sample_count = 0;
    double sample_covering = 0.0;
};

// Sasaki distance between two covectors over the same base point.
inline double fiber_distance(const LocalGeometry& lg, const Vec& a, const Vec& b) {
    Vec d = a - b;
    return std::sqrt(std::max(0.0, d.dot(lg.ginv * d)));
}

namespace detail {

inline double sample_covering_radius(const Manifold& m, const LocalGeometry& lg, const std::vector<PhasePoint>& s,
                                     double r_f) {
    const int n = m.dim();
    if (n == 1)
        return 0.0;
    Mat L = covector_frame(lg.g);
    std::vector<Vec> us;
    for (const auto& p : s)
        us.push_back(L.triangularView<Eigen::Lower>().solve(p.xi) / r_f);
    if (n == 2) {
        std::vector<double> ang;
        for (const Vec& u : us)
            ang.push_back(std::atan2(u[1], u[0]));
        std::sort(ang.begin(), ang.end());
        double gap = ang.front() + 2.0 * std::numbers::pi - ang.back();
        for (std::size_t i = 1; i < ang.size(); ++i)
            gap = std::max(gap, ang[i] - ang[i - 1]);
        return 2.0 * r_f * std::sin(gap / 4.0);
    }
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int t = 0; t < 2000; ++t) {
        Vec v(n);
        for (int i = 0; i < n; ++i)
            v[i] = nd(rng);
        v.normalize();
        double best = 1e300;
        for (const Vec& u : us)
            best = std::min(best, (u - v).norm());
        worst = std::max(worst, best);
    }
    return r_f * worst;
}

} // namespace detail

// Greedy r/2-separated subset of a dense deterministic fiber sample.
inline CenterSet separated_centers(const Manifold& m, const Vec& x, int chart, double r, double R0 = 0.2,
                                   double energy = 0.0, int sample_count = 0) {
    if (!(r > 0.0 && r < R0))
        throw PreconditionError("separated_centers needs 0 < r < R0");
    LocalGeometry lg = local_geometry(m, x, chart);
    const double r_f = fiber_radius(m, lg, energy);
    const int n = m.dim();
    int M = static_cast<int>(std::ceil(std::pow(10.0 * r_f / r, n - 1) - 1e-9));
    M = sample_count > 0 ? sample_count : std::max(M, 2);
    CenterSet cs;
    std::vector<PhasePoint> s = fiber_sample(m, x, chart, M, energy);
    cs.sample_count = M;
    cs.sample_covering = detail::sample_covering_radius(m, lg, s, r_f);
    if (cs.sample_covering > r / 2.0) {
        int suggest = static_cast<int>(std::ceil(M * std::pow(2.0 * cs.sample_covering / r, n - 1))) + 1;
        throw CoverError("fiber sample too sparse for r; suggested sample count " + std::to_string(suggest));
    }
    for (const auto& p : s) {
        bool ok = true;
        for (const auto& c : cs.centers)
            if (fiber_distance(lg, p.xi, c.xi) < r / 2.0) {
                ok = false;
                break;
            }
        if (ok)
            cs.centers.push_back(p);
    }
    return cs;
}

// ---------------------------------------------------------------------------
// Spatial index on fiber directions

class FiberIndex {
public:
    FiberIndex() = default;
    FiberIndex(const Manifold& m, const Vec& x, int chart, const std::vector<PhasePoint>& centers, double cell,
               double energy = 0.0)
        : cell_(cell) {
        lg_ = local_geometry(m, x, chart);
        L_ = covector_frame(lg_.g);
        r_f_ = fiber_radius(m, lg_, energy);
        n_ = m.dim();
        for (std::size_t i = 0; i < centers.size(); ++i) {
            Vec u = unit(centers[i].xi);
            dirs_.push_back(u);
            grid_[key(u)].push_back(static_cast<int>(i));
        }
    }

    Vec unit(const Vec& xi) const {
        Vec u = L_.triangularView<Eigen::Lower>().solve(xi);
        double nn = u.norm();
        return nn > 0 ? Vec(u / nn) : u;
    }

    // Indices whose direction lies within chord `radius` (Sasaki units) of xi's direction.
    std::vector<int> query(const Vec& xi, double radius) const {
        std::vector<int> out;
        Vec u = unit(xi);
        double ru = radius / r_f_;
        int span = static_cast<int>(std::ceil(ru / cell_));
        std::array<long, kMaxDim> base{};
        for (int i = 0; i < n_; ++i)
            base[i] = static_cast<long>(std::floor(u[i] / cell_));
        std::array<long, kMaxDim> off{};
        for (int i = 0; i < n_; ++i)
            off[i] = -span;
        for (;;) {
            std::array<long, kMaxDim> k{};
            for (int i = 0; i < n_; ++i)
                k[i] = base[i] + off[i];
            auto it = grid_.find(hash(k));
            if (it != grid_.end())
                for (int idx : it->second)
                    if ((dirs_[idx] - u).norm() <= ru)
                        out.push_back(idx);
            int d = 0;
            while (d < n_ && ++off[d] > span) {
                off[d] = -span;
                ++d;
            }
            if (d == n_)
                break;
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    double fiber_radius_value() const { return r_f_; }

private:
    static std::uint64_t hash(const std::array<long, kMaxDim>& k) {
        std::uint64_t h = 1469598103934665603ull;
        for (long v : k) {
            h ^= static_cast<std::uint64_t>(v + (1l << 30));
            h *= 1099511628211ull;
        }
        return h;
    }
    std::uint64_t key(const Vec& u) const {
        std::array<long, kMaxDim> k{};
        for (int i = 0; i < n_; ++i)
            k[i] = static_cast<long>(std::floor(u[i] / cell_));
        return hash(k);
    }

    double cell_ = 0.1;
    LocalGeometry lg_;
    Mat L_;
    double r_f_ = 1.0;
    int n_ = 0;
    std::vector<Vec> dirs_;
    std::unordered_map<std::uint64_t, std::vector<int>> grid_;
};

// ---------------------------------------------------------------------------
// Tubes and covers

struct Tube {
    int index = 0;
    PhasePoint center;
    double radius = 0.0;
    double half_length = 0.0;
    int color = -1;
    std::vector<std::pair<double, PhasePoint>> path; // center trajectory, |t| <= tau + R
};

struct CoverVerification {
    int sample_count = 0;
    int uncovered = 0;
    int max_overlap = 0;
    double min_separation = 0.0;
    int disjoint_checked = 0;
    int disjoint_violations = 0;
    std::vector<PhasePoint> uncovered_witnesses;
};

struct CoverOptions {
    double R0 = 0.2;
    double tau0 = 0.2;
    int color_cap = 64;
    int coverage_samples = 10000;
    int disjoint_samples = 12;
    int disjoint_neighbors = 2;
    double energy = 0.0;
    std::uint64_t seed = 1;
    int jobs = 1;
    bool verify = true;
    bool store_paths = false;
    FlowOptions flow{};
    ScanOptions scan{};
};

class TubeCover {
public:
    const Manifold* manifold = nullptr;
    Vec x;
    int chart = 0;
    double tau = 0.0;
    double R = 0.0;
    double energy = 0.0;
    int colors = 0;
    std::vector<Tube> tubes;
    std::vector<std::vector<int>> families;
    CoverVerification verification;
    FiberIndex index;
    int sample_count = 0;
    ScanOptions scan{};
    FlowOptions flow{};

    int size() const { return static_cast<int>(tubes.size()); }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["manifold"] = manifold->describe();
        j["x"] = std::vector<double>(x.data(), x.data() + x.size());
        j["chart"] = chart;
        j["tau"] = tau;
        j["R"] = R;
        j["colors"] = colors;
        j["fiber_sample_count"] = sample_count;
        nlohmann::json ts = nlohmann::json::array();
        for (const auto& t : tubes)
            ts.push_back({{"index", t.index},
                          {"xi", std::vector<double>(t.center.xi.data(), t.center.xi.data() + t.center.xi.size())},
                          {"color", t.color}});
        j["tubes"] = ts;
        j["verification"] = {{"sample_count", verification.sample_count},
                             {"uncovered", verification.uncovered},
                             {"max_overlap", verification.max_overlap},
                             {"min_separation", verification.min_separation},
                             {"disjoint_checked", verification.disjoint_checked},
                             {"disjoint_violations", verification.disjoint_violations}};
        return j;
    }
};

// Crossings of the fiber transversal by phi_t(rho) for |t| <= s_max.
inline std::vector<CrossingEvent> local_crossings(const Manifold& m, const Transversal& F, const PhasePoint& rho,
                                                  double s_max, const FlowOptions& opt, const ScanOptions& so) {
    std::vector<CrossingEvent> out;
    double e = hamiltonian(m, rho);
    for (int dir : {1, -1}) {
        double lo = dir > 0 ? 0.0 : -s_max, hi = dir > 0 ? s_max : 0.0;
        CrossingScanner sc(F, e, lo, hi, so);
        flow_segments(m, rho, dir * s_max, opt, [&](const PhaseSegment& s) {
            sc.feed(s, [&](const CrossingEvent& ev) {
                for (const auto& o : out)
                    if (std::abs(o.t - ev.t) < 1e-9)
                        return;
                out.push_back(ev);
            });
            return true;
        });
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    return out;
}

struct ContainResult {
    bool inside = false;
    double t = 0.0;
    double distance = std::numeric_limits<double>::infinity();
};

// Membership in tube j: a crossing of the cap within |t| <= tau + R at Sasaki distance <= R.
inline ContainResult tube_contains(const TubeCover& cover, int j, const PhasePoint& rho, double radius = -1.0) {
    const Manifold& m = *cover.manifold;
    double r = radius > 0 ? radius : cover.R;
    if (std::abs(hamiltonian(m, rho) - cover.energy) > 1e-6)
        throw PreconditionError("tube_contains needs a point on the shell");
    Transversal F(m, cover.x, cover.chart);
    ContainResult best;
    for (const auto& ev : local_crossings(m, F, rho, cover.tau + cover.R, cover.flow, cover.scan)) {
        double d = sasaki_distance(m, ev.point, cover.tubes[j].center).value;
        if (d < best.distance) {
            best.distance = d;
            best.t = ev.t;
        }
    }
    best.inside = best.distance <= r;
    return best;
}

// All tubes containing rho (candidates from the index); returns indices.
inline std::vector<int> tubes_containing(const TubeCover& cover, const PhasePoint& rho, double radius) {
    const Manifold& m = *cover.manifold;
    Transversal F(m, cover.x, cover.chart);
    std::vector<int> out;
    for (const auto& ev : local_crossings(m, F, rho, cover.tau + cover.R, cover.flow, cover.scan)) {
        if (ev.base_distance > radius)
            continue;
        for (int j : cover.index.query(ev.point.xi, 2.0 * radius + 1e-12))
            if (sasaki_distance(m, ev.point, cover.tubes[j].center).value <= radius)
                out.push_back(j);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline TubeCover build_good_cover(const Manifold& m, const Vec& x, int chart, double tau, double R,
                                  const CoverOptions& opt = {}) {
    if (!(tau > 0.0 && tau <= opt.tau0))
        throw PreconditionError("tau must lie in (0, tau0]");
    if (!(R > 0.0 && R <= opt.R0))
        throw PreconditionError("R must lie in (0, R0]");
    TubeCover cv;
    cv.manifold = &m;
    cv.x = x;
    cv.chart = chart;
    cv.tau = tau;
    cv.R = R;
    cv.energy = opt.energy;
    cv.flow = opt.flow;
    cv.scan = opt.scan;
    cv.scan.dt_scan = std::min(opt.scan.dt_scan, R / 4.0);
    CenterSet cs = separated_centers(m, x, chart, R, opt.R0 + 1e-12, opt.energy);
    cv.sample_count = cs.sample_count;
    LocalGeometry lg = local_geometry(m, x, chart);
    const double r_f = fiber_radius(m, lg, opt.energy);
    for (std::size_t i = 0; i < cs.centers.size(); ++i) {
        Tube t;
        t.index = static_cast<int>(i);
        t.center = cs.centers[i];
        t.radius = R;
        t.half_length = tau;
        cv.tubes.push_back(std::move(t));
    }
    const double conflict = 6.0 * R + R / 5.0;
    cv.index = FiberIndex(m, x, chart, cs.centers, std::max(conflict / r_f, 1e-3), opt.energy);

    // greedy coloring of the conflict graph
    for (auto& t : cv.tubes) {
        std::vector<char> used(static_cast<std::size_t>(opt.color_cap) + 1, 0);
        for (int j : cv.index.query(t.center.xi, conflict)) {
            if (j == t.index || cv.tubes[j].color < 0)
                continue;
            if (fiber_distance(lg, t.center.xi, cv.tubes[j].center.xi) <= conflict)
                used[static_cast<std::size_t>(std::min(cv.tubes[j].color, opt.color_cap))] = 1;
        }
        int c = 0;
        while (c < opt.color_cap && used[c])
            ++c;
        if (c >= opt.color_cap)
            throw StructuralError("tube coloring exceeded the color cap");
        t.color = c;
        cv.colors = std::max(cv.colors, c + 1);
    }
    cv.families.assign(cv.colors, {});
    for (const auto& t : cv.tubes)
        cv.families[t.color].push_back(t.index);

    if (opt.store_paths) {
        const double span = tau + R;
        parallel_for(cv.tubes.size(), opt.jobs, [&](std::size_t i) {
            Tube& t = cv.tubes[i];
            Trajectory fw = integrate(m, t.center, span, opt.flow), bw = integrate(m, t.center, -span, opt.flow);
            int steps = static_cast<int>(std::ceil(span / (R / 8.0)));
            for (int k = -steps; k <= steps; ++k) {
                double s = span * k / steps;
                t.path.emplace_back(s, s >= 0 ? fw.at(s) : bw.at(s));
            }
        });
    }

    if (!opt.verify)
        return cv;

    // separation
    double minsep = std::numeric_limits<double>::infinity();
    for (const auto& t : cv.tubes)
        for (int j : cv.index.query(t.center.xi, 2.0 * R))
            if (j != t.index)
                minsep = std::min(minsep, fiber_distance(lg, t.center.xi, cv.tubes[j].center.xi));
    cv.verification.min_separation = minsep;
    if (minsep < R / 2.0)
        throw StructuralError("tube centers closer than R/2");

    // 3R-disjointness within families: flow sampled 3R-cap points and look for
    // crossings near nearby same-color centers.
    const Transversal F(m, x, chart);
    const int d = 2 * (m.dim() - 1);
    std::vector<Eigen::VectorXd> pat = ball_pattern(d, opt.disjoint_samples, 3.0 * R);
    std::vector<int> checked(cv.tubes.size(), 0), viol(cv.tubes.size(), 0);
    parallel_for(cv.tubes.size(), opt.jobs, [&](std::size_t i) {
        const Tube& t = cv.tubes[i];
        std::vector<std::pair<double, int>> near;
        for (int j : cv.index.query(t.center.xi, 12.0 * R + conflict))
            if (j != t.index && cv.tubes[j].color == t.color)
                near.emplace_back(fiber_distance(lg, t.center.xi, cv.tubes[j].center.xi), j);
        std::sort(near.begin(), near.end());
        if (near.size() > static_cast<std::size_t>(opt.disjoint_neighbors))
            near.resize(opt.disjoint_neighbors);
        if (near.empty())
            return;
        CapChart cap(m, t.center, opt.energy);
        for (const auto& c : pat) {
            PhasePoint p = cap.point(c);
            for (const auto& ev : local_crossings(m, F, p, 2.0 * (tau + 3.0 * R), opt.flow, cv.scan))
                for (const auto& [dist, j] : near) {
                    (void)dist;
                    ++checked[i];
                    if (sasaki_distance(m, ev.point, cv.tubes[j].center).value <= 3.0 * R + R / 10.0)
                        ++viol[i];
                }
        }
    });
    for (std::size_t i = 0; i < cv.tubes.size(); ++i) {
        cv.verification.disjoint_checked += checked[i];
        cv.verification.disjoint_violations += viol[i];
    }

    // coverage of the R/2 tube around the fiber
    std::mt19937_64 rng(opt.seed);
    std::vector<PhasePoint> samples;
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<PhasePoint> fiber = fiber_sample(m, x, chart, 1, opt.energy);
    const int Ns = opt.coverage_samples;
    std::vector<double> flow_time(Ns);
    std::vector<PhasePoint> base(Ns);
    std::normal_distribution<double> nd;
    Mat Lx = covector_frame(lg.g);
    for (int s = 0; s < Ns; ++s) {
        Vec u(m.dim());
        for (int i = 0; i < m.dim(); ++i)
            u[i] = nd(rng);
        u.normalize();
        PhasePoint zeta = make_shell_point(m, x, chart, Vec(r_f * (Lx * u)), opt.energy);
        CapChart cap(m, zeta, opt.energy);
        base[s] = cap.point(random_ball_point(rng, d, R / 2.0));
        flow_time[s] = U(rng) * (tau + R / 2.0);
    }
    std::vector<int> count(Ns, 0);
    parallel_for(static_cast<std::size_t>(Ns), opt.jobs, [&](std::size_t s) {
        PhasePoint p = flow_to(m, base[s], flow_time[s], opt.flow);
        count[s] = static_cast<int>(tubes_containing(cv, p, R).size());
    });
    cv.verification.sample_count = Ns;
    for (int s = 0; s < Ns; ++s) {
        cv.verification.max_overlap = std::max(cv.verification.max_overlap, count[s]);
        if (count[s] == 0) {
            ++cv.verification.uncovered;
            if (cv.verification.uncovered_witnesses.size() < 10)
                cv.verification.uncovered_witnesses.push_back(base[s]);
        }
    }
    if (cv.verification.uncovered > 0)
        throw CoverError("cover verification found " + std::to_string(cv.verification.uncovered) +
                         " uncovered samples");
    return cv;
}

} // namespace geobeam

#endif
