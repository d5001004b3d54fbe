#ifndef GEOBEAM_CONJUGATE_HPP
#define GEOBEAM_CONJUGATE_HPP

#include "flow.hpp"
#include "parallel.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <vector>

namespace geobeam {

// Geodesic plus Jacobi fields in a parallel orthonormal normal frame.
// State layout: z (2n) | frame E (n x (n-1)) | Y ((n-1)^2) | Y' ((n-1)^2).
struct JacobiSystem {
    const Manifold& m;
    double energy = 0.0;

    int n() const { return m.dim(); }
    int k() const { return m.dim() - 1; }
    int size() const { return 2 * n() + n() * k() + 2 * k() * k(); }

    void rhs(const Eigen::VectorXd& y, int chart, Eigen::VectorXd& dy) const {
        const int n = this->n(), k = this->k();
        dy.resize(y.size());
        PhaseVec z = y.head(2 * n);
        PhaseVec f = hamilton_field(m, z, chart);
        dy.head(2 * n) = f;
        Vec x = z.head(n);
        Vec v = f.head(n);
        LocalGeometry lg = local_geometry(m, x, chart);
        Christoffel gam = christoffel(lg);
        Riemann R = riemann(m, x, chart);
        Eigen::Map<const Eigen::MatrixXd> E(y.data() + 2 * n, n, k);
        Eigen::Map<Eigen::MatrixXd> dE(dy.data() + 2 * n, n, k);
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l)
                        s -= gam(i, j, l) * v[j] * E(l, a);
                dE(i, a) = s;
            }
        // K_ab = g(R(E_a, v) v, E_b)
        Eigen::MatrixXd RE(n, k);
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j)
                    for (int kk = 0; kk < n; ++kk)
                        for (int l = 0; l < n; ++l)
                            s += R(i, j, kk, l) * v[j] * E(kk, a) * v[l];
                RE(i, a) = s;
            }
        Eigen::MatrixXd K = E.transpose() * lg.g * RE;
        K = 0.5 * (K + K.transpose()).eval();
        const int off = 2 * n + n * k;
        Eigen::Map<const Eigen::MatrixXd> Y(y.data() + off, k, k);
        Eigen::Map<const Eigen::MatrixXd> Yp(y.data() + off + k * k, k, k);
        Eigen::Map<Eigen::MatrixXd>(dy.data() + off, k, k) = Yp;
        Eigen::Map<Eigen::MatrixXd>(dy.data() + off + k * k, k, k) = -K * Y;
    }

    bool after_step(Eigen::VectorXd& y, int& chart) const {
        const int n = this->n(), k = this->k();
        PhaseVec z = y.head(2 * n);
        Vec x_old = z.head(n);
        int c0 = chart;
        PhaseSystem ps{m, energy, true};
        bool changed = ps.after_step(z, chart);
        if (changed) {
            Mat J = m.transition_jacobian(x_old, c0, chart);
            Eigen::Map<Eigen::MatrixXd> E(y.data() + 2 * n, n, k);
            Eigen::MatrixXd En = J * E;
            E = En;
        }
        y.head(2 * n) = z;
        return changed;
    }
};

struct ConjugateTime {
    double t = 0.0;
    int multiplicity = 0;
    double sigma = 0.0;
    Eigen::MatrixXd kernel; // initial-velocity directions (frame coordinates) of vanishing fields
};

class JacobiProfile {
public:
    PhasePoint seed;
    double horizon = 0.0;
    int n = 0;
    std::vector<DenseSegment<Eigen::VectorXd>> segments;
    std::vector<double> times;                 // analysis grid
    std::vector<Eigen::VectorXd> singular;     // per grid node, descending
    std::vector<ConjugateTime> conjugate;
    Eigen::MatrixXd initial_frame;             // E(0), columns orthonormal normal vectors

    Eigen::VectorXd state(double t) const {
        auto it = std::upper_bound(segments.begin(), segments.end(), t,
                                   [](double tt, const auto& s) { return tt < s.t0; });
        if (it != segments.begin())
            --it;
        return it->eval(t);
    }

    Eigen::MatrixXd jacobi_matrix(double t) const {
        if (t == 0.0)
            return Eigen::MatrixXd::Zero(n - 1, n - 1);
        Eigen::VectorXd y = state(t);
        const int k = n - 1;
        return Eigen::Map<const Eigen::MatrixXd>(y.data() + 2 * n + n * k, k, k);
    }

    Eigen::VectorXd singular_values(double t) const {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd{jacobi_matrix(t)};
        return svd.singularValues();
    }

    // |J(t)| for the field with J(0) = 0, J'(0) = sum_a c_a E_a(0).
    double field_norm(double t, const Eigen::VectorXd& c) const { return (jacobi_matrix(t) * c).norm(); }

    PhasePoint point(double t) const {
        if (t == 0.0)
            return seed;
        auto it = std::upper_bound(segments.begin(), segments.end(), t,
                                   [](double tt, const auto& s) { return tt < s.t0; });
        if (it != segments.begin())
            --it;
        Eigen::VectorXd y = it->eval(t);
        return unstack(PhaseVec(y.head(2 * n)), it->chart);
    }
};

struct JacobiOptions {
    double dt_grid = 0.01;
    double threshold = 1e-8; // relative to the running singular value scale
    FlowOptions flow{};
};

namespace detail {

inline Eigen::MatrixXd normal_frame(const Manifold& m, const LocalGeometry& lg, const Vec& v) {
    const int n = m.dim();
    std::vector<Vec> basis{v / std::sqrt(v.dot(lg.g * v))};
    for (int e = 0; e < n && static_cast<int>(basis.size()) < n; ++e) {
        Vec w = Vec::Zero(n);
        w[e] = 1.0;
        for (const Vec& b : basis)
            w -= w.dot(lg.g * b) * b;
        double nn = std::sqrt(std::max(0.0, w.dot(lg.g * w)));
        if (nn > 1e-6)
            basis.push_back(w / nn);
    }
    Eigen::MatrixXd E(n, n - 1);
    for (int a = 0; a < n - 1; ++a)
        E.col(a) = basis[a + 1];
    return E;
}

} // namespace detail

inline JacobiProfile jacobi_profile(const Manifold& m, const Vec& x, int chart, const Vec& xi, double T,
                                    const JacobiOptions& opt = {}) {
    if (!(T > 0.0))
        throw PreconditionError("jacobi_profile needs T > 0");
    if (m.has_potential())
        throw PreconditionError("Jacobi fields are defined for pure metrics");
    if (m.dim() < 2)
        throw PreconditionError("Jacobi fields need dimension >= 2");
    const int n = m.dim(), k = n - 1;
    PhasePoint rho = make_shell_point(m, x, chart, xi, 0.0);
    LocalGeometry lg = local_geometry(m, x, chart);
    Vec v = lg.ginv * rho.xi;
    JacobiSystem sys{m, 0.0};
    JacobiProfile prof;
    prof.seed = rho;
    prof.horizon = T;
    prof.n = n;
    prof.initial_frame = detail::normal_frame(m, lg, v);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(sys.size());
    y.head(2 * n) = rho.stacked();
    Eigen::Map<Eigen::MatrixXd>(y.data() + 2 * n, n, k) = prof.initial_frame;
    Eigen::Map<Eigen::MatrixXd>(y.data() + 2 * n + n * k + k * k, k, k).setIdentity();
    int c = chart;
    // padded so that minima at the horizon are interior to the sweep
    const double Tpad = T + 3.0 * opt.dt_grid;
    dopri5(sys, y, c, 0.0, Tpad, opt.flow, [&](const DenseSegment<Eigen::VectorXd>& s) {
        prof.segments.push_back(s);
        return true;
    });

    // singular value sweep
    const int steps = std::max(8, static_cast<int>(std::ceil(Tpad / opt.dt_grid)));
    const double dt = Tpad / steps;
    double scale = 0.0;
    std::vector<double> scales;
    for (int i = 1; i <= steps; ++i) {
        double t = dt * i;
        prof.times.push_back(t);
        prof.singular.push_back(prof.singular_values(t));
        scale = std::max(scale, prof.singular.back()[0]);
        scales.push_back(scale);
    }
    auto smin = [&](double t) { return prof.singular_values(t)[k - 1]; };
    for (int i = 0; i + 1 < steps; ++i) {
        double s0 = i == 0 ? std::numeric_limits<double>::infinity() : prof.singular[i - 1][k - 1];
        double s1 = prof.singular[i][k - 1], s2 = prof.singular[i + 1][k - 1];
        if (!(s1 <= s0 && s1 <= s2))
            continue;
        // golden-section refinement of the local minimum
        double a = prof.times[i] - dt, b = prof.times[i] + dt;
        a = std::max(a, 0.25 * dt);
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
        double f1 = smin(c1), f2 = smin(c2);
        for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
            if (f1 < f2) {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - gr * (b - a);
                f1 = smin(c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + gr * (b - a);
                f2 = smin(c2);
            }
        }
        double ts = 0.5 * (a + b);
        if (ts > T + 1e-9)
            continue;
        double thr = opt.threshold * std::max(scales[i], 1e-300);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(prof.jacobi_matrix(ts), Eigen::ComputeFullV);
        Eigen::VectorXd sv = svd.singularValues();
        if (!(sv[k - 1] <= thr))
            continue;
        if (!prof.conjugate.empty() && std::abs(prof.conjugate.back().t - ts) < 1e-9)
            continue;
        ConjugateTime ct;
        ct.t = ts;
        ct.sigma = sv[k - 1];
        for (int q = 0; q < k; ++q)
            if (sv[q] <= thr)
                ++ct.multiplicity;
        if (ct.multiplicity > n - 1)
            throw NumericError("conjugate multiplicity exceeds n - 1");
        ct.kernel = svd.matrixV().rightCols(ct.multiplicity);
        prof.conjugate.push_back(ct);
    }
    return prof;
}

struct ConjugateMembership {
    bool member = false;
    int multiplicity_sum = 0;
    int span_dimension = 0;
    std::vector<double> witness;
};

// Conjugate points along gamma in (t - r, t + r) whose vanishing fields span all
// n - 1 normal directions.
inline ConjugateMembership in_conjugate_set(const JacobiProfile& prof, double t, double r) {
    if (!(0.0 < r && r < t && t <= prof.horizon))
        throw PreconditionError("in_conjugate_set needs 0 < r < t <= horizon");
    ConjugateMembership out;
    const int k = prof.n - 1;
    std::vector<Eigen::VectorXd> cols;
    for (const auto& c : prof.conjugate) {
        if (c.t > t - r && c.t < t + r) {
            out.witness.push_back(c.t);
            out.multiplicity_sum += c.multiplicity;
            for (int q = 0; q < c.kernel.cols(); ++q)
                cols.push_back(c.kernel.col(q));
        }
    }
    if (!cols.empty()) {
        Eigen::MatrixXd K(k, static_cast<int>(cols.size()));
        for (std::size_t q = 0; q < cols.size(); ++q)
            K.col(static_cast<int>(q)) = cols[q];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd{K};
        for (int q = 0; q < svd.singularValues().size(); ++q)
            if (svd.singularValues()[q] > 1e-6)
                ++out.span_dimension;
    }
    out.member = out.span_dimension >= k;
    return out;
}

struct NoConjWitness {
    int direction = 0;
    Vec xi;
    double endpoint_distance = 0.0;
    std::vector<double> conjugate_times;
};

struct NoConjRow {
    double t = 0.0;
    double r_t = 0.0;
    bool pass = true;
    bool coarse = false; // direction spacing times t exceeds r_t
    std::vector<NoConjWitness> witnesses;
};

struct NoConjReport {
    double a = 0.0;
    int direction_count = 0;
    std::vector<NoConjRow> rows;

    bool pass() const {
        for (const auto& r : rows)
            if (!r.pass)
                return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["a"] = a;
        j["direction_count"] = direction_count;
        j["pass"] = pass();
        j["rows"] = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json w = nlohmann::json::array();
            for (const auto& x : r.witnesses)
                w.push_back({{"direction", x.direction},
                             {"xi", std::vector<double>(x.xi.data(), x.xi.data() + x.xi.size())},
                             {"endpoint_distance", x.endpoint_distance},
                             {"conjugate_times", x.conjugate_times}});
            j["rows"].push_back({{"t", r.t}, {"r_t", r.r_t}, {"pass", r.pass}, {"coarse_sampling", r.coarse},
                                 {"witnesses", w}});
        }
        return j;
    }
};

// Checks inf d(x, C_x^{r_t, t}) >= r_t with r_t = exp(-a t) / a by sampling geodesics from x.
inline NoConjReport noconj_hypothesis_check(const Manifold& m, const Vec& x, int chart, double a,
                                            std::vector<double> t_grid, int direction_count, double t0 = 1.0,
                                            int jobs = 1, const JacobiOptions& opt = {}) {
    if (!(a > 0.0) || t_grid.empty() || direction_count < 1)
        throw PreconditionError("noconj check needs a > 0, a nonempty t grid and directions");
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        if ((i > 0 && !(t_grid[i] > t_grid[i - 1])) || t_grid[i] < t0)
            throw PreconditionError("t grid must be increasing and >= t0");
    NoConjReport rep;
    rep.a = a;
    rep.direction_count = direction_count;
    double horizon = 0.0;
    for (double t : t_grid)
        horizon = std::max(horizon, t + std::exp(-a * t) / a);
    std::vector<PhasePoint> dirs = fiber_sample(m, x, chart, direction_count);
    std::vector<JacobiProfile> profiles(dirs.size());
    parallel_for(dirs.size(), jobs, [&](std::size_t i) {
        profiles[i] = jacobi_profile(m, x, chart, dirs[i].xi, horizon, opt);
    });
    const double spacing = 2.0 * std::numbers::pi / std::pow(direction_count, 1.0 / std::max(1, m.dim() - 1));
    for (double t : t_grid) {
        NoConjRow row;
        row.t = t;
        row.r_t = std::exp(-a * t) / a;
        row.coarse = spacing * t > row.r_t;
        if (row.r_t < t) {
            for (std::size_t i = 0; i < profiles.size(); ++i) {
                ConjugateMembership cm = in_conjugate_set(profiles[i], t, row.r_t);
                if (!cm.member)
                    continue;
                PhasePoint end = to_chart(m, profiles[i].point(t), chart);
                double d = base_distance(m, x, end.x, chart);
                if (d < row.r_t) {
                    row.pass = false;
                    row.witnesses.push_back({static_cast<int>(i), dirs[i].xi, d, cm.witness});
                }
            }
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

} // namespace geobeam

#endif
