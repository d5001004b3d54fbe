#ifndef GEOBEAM_FLOW_HPP
#define GEOBEAM_FLOW_HPP

#include "manifold.hpp"
#include "ode.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <vector>

namespace geobeam {

using PhaseSegment = DenseSegment<PhaseVec>;

namespace detail {

// Linearisation of the chart transition on phase space, by central differences.
inline PhaseMat phase_transition_jacobian(const Manifold& m, const PhaseVec& z, int from, int to) {
    const int n = m.dim();
    PhaseMat D(2 * n, 2 * n);
    for (int i = 0; i < 2 * n; ++i) {
        double h = 1e-6 * std::max(1.0, std::abs(z[i]));
        PhaseVec a = z, b = z;
        a[i] += h;
        b[i] -= h;
        PhaseVec fa = to_chart(m, unstack(a, from), to).stacked();
        PhaseVec fb = to_chart(m, unstack(b, from), to).stacked();
        D.col(i) = (fa - fb) / (2.0 * h);
    }
    return D;
}

} // namespace detail

// Hamilton's equations with shell projection and chart management.
struct PhaseSystem {
    const Manifold& m;
    double energy = 0.0;
    bool project = true;

    // Stage points outside the chart domain give NaN, so the step is retried shorter.
    void rhs(const PhaseVec& z, int chart, PhaseVec& dz) const {
        if (!m.in_domain(z.head(m.dim()), chart)) {
            dz = PhaseVec::Constant(z.size(), std::numeric_limits<double>::quiet_NaN());
            return;
        }
        dz = hamilton_field(m, z, chart);
    }

    bool after_step(PhaseVec& z, int& chart) const {
        const int n = m.dim();
        Vec x = z.head(n), xi = z.tail(n);
        if (!m.in_domain(x, chart))
            throw IntegrationError("trajectory entered a chart guard region");
        m.canonicalize(x, chart);
        bool changed = false;
        int c2 = m.preferred_chart(x, chart);
        if (c2 != chart) {
            PhasePoint q = to_chart(m, PhasePoint{x, xi, chart, energy}, c2);
            x = q.x;
            xi = q.xi;
            chart = c2;
            changed = true;
        }
        if (project)
            project_to_shell(m, local_geometry(m, x, chart), xi, energy);
        z << x, xi;
        return changed;
    }
};

// Dense solution of the Hamiltonian flow from a seed point.
class Trajectory {
public:
    PhasePoint seed;
    std::vector<PhaseSegment> segments;
    bool complete = true;
    bool projected = true;
    std::string error;
    double t_end = 0.0;

    Trajectory() = default;
    Trajectory(const Manifold& m, PhasePoint s) : seed(std::move(s)), m_(&m) {}

    const Manifold& manifold() const { return *m_; }

    bool covers(double t) const {
        return t_end >= 0.0 ? (t >= 0.0 && t <= t_end) : (t <= 0.0 && t >= t_end);
    }

    const PhaseSegment& segment_at(double t) const {
        if (segments.empty())
            throw PreconditionError("empty trajectory");
        const bool fwd = segments.front().h > 0.0;
        auto it = std::upper_bound(segments.begin(), segments.end(), t, [fwd](double tt, const PhaseSegment& s) {
            return fwd ? tt < s.t0 : tt > s.t0;
        });
        if (it != segments.begin())
            --it;
        return *it;
    }

    PhasePoint at(double t) const {
        if (t == 0.0 || segments.empty())
            return seed;
        const PhaseSegment& s = segment_at(t);
        PhasePoint p = unstack(s.eval(t), s.chart);
        m_->canonicalize(p.x, p.chart);
        LocalGeometry lg = local_geometry(*m_, p.x, p.chart);
        if (projected)
            project_to_shell(*m_, lg, p.xi, seed.energy);
        p.energy = hamiltonian(*m_, lg, p.xi);
        return p;
    }

    std::vector<double> time_grid() const {
        std::vector<double> g{0.0};
        for (const auto& s : segments)
            g.push_back(s.t1());
        return g;
    }

    // CSV rows (t, x..., xi..., p) at the integrator nodes.
    void write_csv(std::ostream& os) const {
        const int n = static_cast<int>(seed.x.size());
        os << "t";
        for (int i = 0; i < n; ++i)
            os << ",x" << i;
        for (int i = 0; i < n; ++i)
            os << ",xi" << i;
        os << ",p\n";
        os.precision(17);
        for (double t : time_grid()) {
            PhasePoint p = at(t);
            os << t;
            for (int i = 0; i < n; ++i)
                os << "," << p.x[i];
            for (int i = 0; i < n; ++i)
                os << "," << p.xi[i];
            os << "," << p.energy << "\n";
        }
    }

private:
    const Manifold* m_ = nullptr;
};

inline void check_flow_request(const Manifold& m, const PhasePoint& rho, double t_final, const FlowOptions& opt) {
    if (std::abs(t_final) > opt.horizon)
        throw PreconditionError("requested time exceeds the flow horizon");
    m.check_domain(rho.x, rho.chart);
}

// Streams dense segments of phi_t(rho) for t between 0 and t_final.
template <class OnSegment>
double flow_segments(const Manifold& m, const PhasePoint& rho, double t_final, const FlowOptions& opt,
                     OnSegment&& on_segment) {
    check_flow_request(m, rho, t_final, opt);
    double e = hamiltonian(m, local_geometry(m, rho.x, rho.chart), rho.xi);
    PhaseSystem sys{m, e, opt.project};
    PhaseVec z = rho.stacked();
    int chart = rho.chart;
    return dopri5(sys, z, chart, 0.0, t_final, opt, on_segment);
}

inline Trajectory integrate(const Manifold& m, const PhasePoint& rho, double t_final, const FlowOptions& opt = {},
                            bool allow_partial = false) {
    Trajectory tr(m, rho);
    tr.seed.energy = hamiltonian(m, rho);
    tr.projected = opt.project;
    try {
        tr.t_end = flow_segments(m, rho, t_final, opt, [&](const PhaseSegment& s) {
            tr.segments.push_back(s);
            return true;
        });
    } catch (const IntegrationError& e) {
        tr.complete = false;
        tr.error = e.what();
        tr.t_end = tr.segments.empty() ? 0.0 : tr.segments.back().t1();
        if (!allow_partial)
            throw;
    }
    return tr;
}

// Endpoint of the flow only.
inline PhasePoint flow_to(const Manifold& m, const PhasePoint& rho, double t, const FlowOptions& opt = {}) {
    if (t == 0.0)
        return rho;
    PhaseSegment last;
    flow_segments(m, rho, t, opt, [&](const PhaseSegment& s) {
        last = s;
        return true;
    });
    const int n = m.dim();
    PhaseVec z = last.eval(last.t1());
    PhaseSystem sys{m, hamiltonian(m, rho), opt.project};
    int chart = last.chart;
    sys.after_step(z, chart);
    PhasePoint p = unstack(z, chart);
    (void)n;
    p.energy = hamiltonian(m, local_geometry(m, p.x, p.chart), p.xi);
    return p;
}

// ---------------------------------------------------------------------------
// Variational equation

struct VariationalSystem {
    const Manifold& m;
    double energy = 0.0;
    bool project = true;

    PhaseMat generator(const PhaseVec& z, int chart) const {
        const int n2 = static_cast<int>(z.size());
        PhaseMat H(n2, n2);
        for (int i = 0; i < n2; ++i) {
            double h = 1e-5 * std::max(1.0, std::abs(z[i]));
            PhaseVec a = z, b = z;
            a[i] += h;
            b[i] -= h;
            H.col(i) = (hamiltonian_gradient(m, a, chart) - hamiltonian_gradient(m, b, chart)) / (2.0 * h);
        }
        H = 0.5 * (H + H.transpose()).eval();
        const int n = n2 / 2;
        PhaseMat A(n2, n2);
        A.topRows(n) = H.bottomRows(n);
        A.bottomRows(n) = -H.topRows(n);
        return A;
    }

    void rhs(const Eigen::VectorXd& y, int chart, Eigen::VectorXd& dy) const {
        const int n2 = 2 * m.dim();
        PhaseVec z = y.head(n2);
        dy.resize(y.size());
        if (!m.in_domain(z.head(n2 / 2), chart)) {
            dy.setConstant(std::numeric_limits<double>::quiet_NaN());
            return;
        }
        dy.head(n2) = hamilton_field(m, z, chart);
        Eigen::Map<const Eigen::MatrixXd> M(y.data() + n2, n2, n2);
        Eigen::Map<Eigen::MatrixXd> dM(dy.data() + n2, n2, n2);
        dM = generator(z, chart) * M;
    }

    bool after_step(Eigen::VectorXd& y, int& chart) const {
        const int n2 = 2 * m.dim();
        PhaseVec z = y.head(n2);
        int c0 = chart;
        PhaseSystem ps{m, energy, project};
        PhaseVec zc = z;
        bool changed = ps.after_step(zc, chart);
        if (changed) {
            PhaseMat D = detail::phase_transition_jacobian(m, z, c0, chart);
            Eigen::Map<Eigen::MatrixXd> M(y.data() + n2, n2, n2);
            Eigen::MatrixXd Mn = D * M;
            M = Mn;
        }
        y.head(n2) = zc;
        return changed;
    }
};

struct VariationalFrame {
    Trajectory base;
    std::vector<double> times;
    std::vector<PhaseMat> matrices;
    std::vector<PhasePoint> points;
};

inline VariationalFrame variational(const Manifold& m, const PhasePoint& rho, std::vector<double> times,
                                    const FlowOptions& opt = {}) {
    VariationalFrame vf;
    std::sort(times.begin(), times.end());
    double tmax = 0.0, tmin = 0.0;
    for (double t : times) {
        tmax = std::max(tmax, t);
        tmin = std::min(tmin, t);
    }
    check_flow_request(m, rho, std::abs(tmin) > tmax ? tmin : tmax, opt);
    vf.base = integrate(m, rho, tmax, opt);
    const int n2 = 2 * m.dim();
    double e = hamiltonian(m, rho);
    VariationalSystem sys{m, e, opt.project};
    vf.times = times;
    vf.matrices.assign(times.size(), PhaseMat::Identity(n2, n2));
    vf.points.assign(times.size(), rho);
    for (int sgn : {1, -1}) {
        double tf = sgn > 0 ? tmax : tmin;
        if (tf == 0.0)
            continue;
        Eigen::VectorXd y(n2 + n2 * n2);
        y.head(n2) = rho.stacked();
        Eigen::Map<Eigen::MatrixXd>(y.data() + n2, n2, n2).setIdentity();
        int chart = rho.chart;
        dopri5(sys, y, chart, 0.0, tf, opt, [&](const DenseSegment<Eigen::VectorXd>& s) {
            double lo = std::min(s.t0, s.t1()), hi = std::max(s.t0, s.t1());
            for (std::size_t i = 0; i < times.size(); ++i) {
                double t = times[i];
                if (t == 0.0 || (t > 0) != (sgn > 0) || t < lo || t > hi)
                    continue;
                Eigen::VectorXd v = s.eval(t);
                vf.matrices[i] = Eigen::Map<const Eigen::MatrixXd>(v.data() + n2, n2, n2);
                PhasePoint p = unstack(v.head(n2), s.chart);
                m.canonicalize(p.x, p.chart);
                vf.points[i] = p;
            }
            return true;
        });
    }
    return vf;
}

inline PhaseMat symplectic_form(int n) {
    PhaseMat J = PhaseMat::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = Mat::Identity(n, n);
    J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return J;
}

inline double spectral_norm(const PhaseMat& M) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(M)};
    return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// Expansion rate and Ehrenfest time

struct LambdaMaxResult {
    double value = 0.0;
    double raw = 0.0;
    bool replaced_zero = false;
    double t_probe = 0.0;
    std::vector<std::vector<std::pair<double, double>>> growth; // per sample (t, log norm / t)
};

// Shell offsets: the zero shell plus small perturbations, since tubes live near p = 0.
inline LambdaMaxResult lambda_max(const Manifold& m, int sample_count, double t_probe, double floor = 1e-3,
                                  std::uint64_t seed = 7, const FlowOptions& opt = {},
                                  std::vector<double> offsets = {0.0, 0.1, -0.1}) {
    if (t_probe < 1.0 || sample_count < 1)
        throw PreconditionError("lambda_max needs T_probe >= 1 and sample_count >= 1");
    std::mt19937_64 rng(seed);
    LambdaMaxResult res;
    res.t_probe = t_probe;
    res.raw = -1e300;
    if (offsets.empty())
        offsets.push_back(0.0);
    for (int s = 0; s < sample_count; ++s) {
        int chart = 0;
        Vec x = m.random_point(rng, chart);
        LocalGeometry lg = local_geometry(m, x, chart);
        std::normal_distribution<double> nd;
        Vec u(m.dim());
        for (int i = 0; i < m.dim(); ++i)
            u[i] = nd(rng);
        u.normalize();
        double e = offsets[static_cast<std::size_t>(s) % offsets.size()];
        if (m.has_potential() && lg.V + e <= 0.0)
            e = 0.0;
        Vec xi = covector_frame(lg.g) * u;
        PhasePoint rho = make_shell_point(m, x, chart, xi, e);
        std::vector<double> times{0.25 * t_probe, 0.5 * t_probe, 0.75 * t_probe, t_probe};
        VariationalFrame vf = variational(m, rho, times, opt);
        std::vector<std::pair<double, double>> curve;
        for (std::size_t i = 0; i < times.size(); ++i)
            curve.emplace_back(times[i], std::log(spectral_norm(vf.matrices[i])) / times[i]);
        res.raw = std::max(res.raw, curve.back().second);
        res.growth.push_back(std::move(curve));
    }
    res.value = res.raw;
    if (res.raw < floor) {
        res.value = floor;
        res.replaced_zero = true;
    }
    return res;
}

inline double ehrenfest_time(double h, double lambda) { return std::log(1.0 / h) / (2.0 * lambda); }

// ---------------------------------------------------------------------------
// Transversal crossings

struct CrossingEvent {
    double t = 0.0;
    PhasePoint point; // expressed in the base point's chart
    double fiber_distance = 0.0;
    double base_distance = 0.0;
    int sign = 0;
};

struct CrossingDiagnostics {
    int refinements = 0;
    int discarded = 0;
};

// F(y, eta) = <w, eta> with w the radial velocity at y of the geodesic from x, i.e.
// g(exp_x^{-1} y, eta#) up to third order. Vanishes on the fiber over x and is
// transverse to the flow near it. On flat charts w is the chart displacement.
class Transversal {
public:
    Transversal(const Manifold& m, Vec x, int chart) : m_(&m), x_(std::move(x)), chart_(chart) {
        lg_ = local_geometry(m, x_, chart_);
        radius_ = fiber_radius(m, lg_);
        gam_ = christoffel(lg_);
    }

    // Velocity at y of the geodesic from x through y, to second order in the chart
    // displacement v: w = v - Gamma_x(v, v) / 2.
    Vec radial(const Vec& v) const {
        const int n = static_cast<int>(v.size());
        Vec w = v;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    w[i] -= 0.5 * gam_(i, j, k) * v[j] * v[k];
        return w;
    }

    // exp_x(V) to second order.
    Vec exp_point(const Vec& V) const { return x_ + radial(V); }

    const Christoffel& christoffel_at_base() const { return gam_; }

    const Vec& x() const { return x_; }
    int chart() const { return chart_; }
    const Manifold& manifold() const { return *m_; }

    // Point re-expressed in the base chart; false if the conversion is unusable.
    bool localize(const PhasePoint& p, PhasePoint& out) const {
        if (p.chart == chart_) {
            out = p;
            return true;
        }
        out = to_chart(*m_, p, chart_);
        return out.x.allFinite() && out.xi.allFinite() && m_->in_domain(out.x, chart_);
    }

    double value_local(const PhasePoint& q) const { return radial(m_->displacement(x_, q.x, chart_)).dot(q.xi); }

    double value(const PhasePoint& p) const {
        PhasePoint q;
        if (!localize(p, q))
            return std::numeric_limits<double>::quiet_NaN();
        return value_local(q);
    }

    // dF/dt along the flow at q (local chart).
    double rate_local(const PhasePoint& q) const {
        PhaseVec f = hamilton_field(*m_, q.stacked(), chart_);
        const int n = m_->dim();
        Vec v = m_->displacement(x_, q.x, chart_);
        Vec dFdy = q.xi;
        for (int mm = 0; mm < n; ++mm)
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k)
                    dFdy[mm] -= gam_(i, mm, k) * v[k] * q.xi[i];
        return dFdy.dot(f.head(n)) + radial(v).dot(f.tail(n));
    }

    double base_distance(const PhasePoint& q) const { return geobeam::base_distance(*m_, x_, q.x, chart_); }

    // Sasaki-type distance from q (local chart) to the fiber over x.
    double fiber_distance(const PhasePoint& q) const {
        Vec d = m_->displacement(q.x, x_, chart_);
        LocalGeometry lm = local_geometry(*m_, q.x + 0.5 * d, chart_);
        double base = std::sqrt(std::max(0.0, d.dot(lm.g * d)));
        Vec eta = transport_covector(christoffel(lm), d, q.xi);
        double r = std::sqrt(std::max(0.0, eta.dot(lg_.ginv * eta)));
        double rad = r - radius_;
        return std::sqrt(base * base + rad * rad);
    }

    double radius() const { return radius_; }
    const LocalGeometry& geometry() const { return lg_; }

private:
    const Manifold* m_;
    Vec x_;
    int chart_;
    LocalGeometry lg_;
    Christoffel gam_;
    double radius_ = 1.0;
};

namespace detail {

// Single Dormand-Prince step from the segment start to time t.
inline PhasePoint precise_point(const Manifold& m, const PhaseSegment& s, double t, double energy) {
    PhaseSystem sys{m, energy, true};
    PhaseVec z = s.r[0];
    int chart = s.chart;
    FlowOptions o;
    o.h_init = std::abs(t - s.t0);
    o.h_max = o.h_init;
    o.abs_tol = o.rel_tol = 1e300; // accept the single step
    if (t != s.t0)
        dopri5(sys, z, chart, s.t0, t, o, [](const PhaseSegment&) { return true; });
    PhasePoint p = unstack(z, chart);
    m.canonicalize(p.x, p.chart);
    return p;
}

struct ScanSample {
    double t;
    double f;
};

} // namespace detail

struct ScanOptions {
    double dt_scan = 0.01;
    int max_halvings = 4;
    double valid_fraction = 0.5; // of the injectivity radius
};

// Scans a stream of dense segments for zeros of the transversal function at
// times in [lo, hi] (|t| ordering follows the flow direction).
class CrossingScanner {
public:
    CrossingScanner(const Transversal& F, double energy, double lo, double hi, const ScanOptions& so)
        : F_(F), energy_(energy), lo_(lo), hi_(hi), so_(so) {}

    template <class OnEvent>
    void feed(const PhaseSegment& s, OnEvent&& on_event) {
        double a = std::min(s.t0, s.t1()), b = std::max(s.t0, s.t1());
        double wa = std::max(a, lo_), wb = std::min(b, hi_);
        if (wa > wb) {
            prev_seg_ = s;
            has_prev_seg_ = true;
            return;
        }
        const bool fwd = s.h > 0.0;
        // grid anchored at the window edge in the flow direction
        const double anchor = fwd ? lo_ : hi_;
        const double dt = so_.dt_scan;
        auto grid_index = [&](double t) { return (t - anchor) / (fwd ? dt : -dt); };
        long k0 = static_cast<long>(std::ceil(grid_index(fwd ? wa : wb) - 1e-12));
        long k1 = static_cast<long>(std::floor(grid_index(fwd ? wb : wa) + 1e-12));
        std::vector<double> ts;
        for (long k = k0; k <= k1; ++k)
            ts.push_back(anchor + (fwd ? dt : -dt) * static_cast<double>(k));
        // the window end is always sampled
        double wend = fwd ? hi_ : lo_;
        if (wend >= a && wend <= b && (ts.empty() || ts.back() != wend))
            ts.push_back(wend);
        for (double t : ts) {
            double f = value_at(s, t);
            if (have_prev_ && std::isfinite(f) && std::isfinite(prev_.f)) {
                bool change = (prev_.f < 0.0) != (f < 0.0) || f == 0.0;
                if (change && prev_.f != 0.0)
                    locate(prev_.t, t, prev_.f, f, s, on_event);
                else if (!change)
                    probe(prev_.t, t, prev_.f, f, s, on_event, 0);
            } else if (!have_prev_ && f == 0.0) {
                emit(t, s, on_event);
            }
            prev_ = {t, f};
            have_prev_ = true;
        }
        prev_seg_ = s;
        has_prev_seg_ = true;
    }

    const CrossingDiagnostics& diagnostics() const { return diag_; }

private:
    const PhaseSegment& seg_for(double t, const PhaseSegment& cur) const {
        double a = std::min(cur.t0, cur.t1()), b = std::max(cur.t0, cur.t1());
        if ((t >= a && t <= b) || !has_prev_seg_)
            return cur;
        return prev_seg_;
    }

    double value_at(const PhaseSegment& s, double t) const {
        PhasePoint p = unstack(s.eval(t), s.chart);
        return F_.value(p);
    }

    // Sign-preserving interval with small values on both ends: look for a hidden pair of zeros.
    template <class OnEvent>
    void probe(double ta, double tb, double fa, double fb, const PhaseSegment& cur, OnEvent&& on_event, int depth) {
        if (depth >= so_.max_halvings)
            return;
        double scale = 2.0 * std::abs(tb - ta) * std::max(1.0, F_.radius());
        if (std::abs(fa) > scale || std::abs(fb) > scale)
            return;
        double tm = 0.5 * (ta + tb);
        double fm = value_at(seg_for(tm, cur), tm);
        if (!std::isfinite(fm))
            return;
        if ((fm < 0.0) != (fa < 0.0)) {
            ++diag_.refinements;
            locate(ta, tm, fa, fm, cur, on_event);
            locate(tm, tb, fm, fb, cur, on_event);
            return;
        }
        probe(ta, tm, fa, fm, cur, on_event, depth + 1);
        probe(tm, tb, fm, fb, cur, on_event, depth + 1);
    }

    template <class OnEvent>
    void locate(double ta, double tb, double fa, double fb, const PhaseSegment& cur, OnEvent&& on_event) {
        (void)fb;
        for (int it = 0; it < 60 && std::abs(tb - ta) > 1e-13; ++it) {
            double tm = 0.5 * (ta + tb);
            double fm = value_at(seg_for(tm, cur), tm);
            if (!std::isfinite(fm))
                return;
            if ((fm < 0.0) == (fa < 0.0)) {
                ta = tm;
                fa = fm;
            } else {
                tb = tm;
            }
        }
        emit(0.5 * (ta + tb), seg_for(0.5 * (ta + tb), cur), on_event);
    }

    template <class OnEvent>
    void emit(double t, const PhaseSegment& s, OnEvent&& on_event) {
        const Manifold& m = F_.manifold();
        PhasePoint p = detail::precise_point(m, s, t, energy_);
        PhasePoint q;
        if (!F_.localize(p, q)) {
            ++diag_.discarded;
            return;
        }
        // Newton polish along the vector field
        for (int it = 0; it < 3; ++it) {
            double f = F_.value_local(q);
            double rate = F_.rate_local(q);
            if (std::abs(f) <= 1e-15 || std::abs(rate) < 1e-12)
                break;
            double dt = -f / rate;
            if (std::abs(dt) > 1e-6)
                break;
            PhaseVec z = q.stacked() + dt * hamilton_field(m, q.stacked(), q.chart);
            q = unstack(z, q.chart);
            t += dt;
        }
        CrossingEvent ev;
        ev.t = t;
        ev.base_distance = F_.base_distance(q);
        if (!(ev.base_distance < so_.valid_fraction * m.injectivity_radius()) ||
            std::abs(F_.value_local(q)) > 1e-10) {
            ++diag_.discarded;
            return;
        }
        q.energy = hamiltonian(m, local_geometry(m, q.x, q.chart), q.xi);
        ev.point = q;
        ev.fiber_distance = F_.fiber_distance(q);
        double rate = F_.rate_local(q);
        ev.sign = rate > 0 ? 1 : (rate < 0 ? -1 : 0);
        on_event(ev);
    }

    const Transversal& F_;
    double energy_;
    double lo_, hi_;
    ScanOptions so_;
    detail::ScanSample prev_{0.0, 0.0};
    bool have_prev_ = false;
    PhaseSegment prev_seg_;
    bool has_prev_seg_ = false;
    CrossingDiagnostics diag_;
};

// Returns of phi_t(rho) to the transversal through the fiber over x, for t in
// [t0, T] (or [-T, -t0] when backward is set).
inline std::vector<CrossingEvent> transversal_crossings(const Manifold& m, const Vec& x, int chart,
                                                        const PhasePoint& rho, double t0, double T,
                                                        const FlowOptions& opt = {}, ScanOptions so = {},
                                                        bool backward = false, CrossingDiagnostics* diag = nullptr) {
    if (!(0.0 < t0 && t0 < T))
        throw PreconditionError("crossing window needs 0 < t0 < T");
    Transversal F(m, x, chart);
    double e = hamiltonian(m, rho);
    std::vector<CrossingEvent> out;
    double lo = backward ? -T : t0, hi = backward ? -t0 : T;
    CrossingScanner sc(F, e, lo, hi, so);
    flow_segments(m, rho, backward ? -T : T, opt, [&](const PhaseSegment& s) {
        sc.feed(s, [&](const CrossingEvent& ev) { out.push_back(ev); });
        return true;
    });
    if (diag)
        *diag = sc.diagnostics();
    std::sort(out.begin(), out.end(), [backward](const CrossingEvent& a, const CrossingEvent& b) {
        return backward ? a.t > b.t : a.t < b.t;
    });
    return out;
}

} // namespace geobeam

#endif
