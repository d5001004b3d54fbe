#ifndef GEOBEAM_MANIFOLD_HPP
#define GEOBEAM_MANIFOLD_HPP

#include "types.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

namespace geobeam {

struct LocalGeometry {
    Mat g;
    Mat ginv;
    std::array<Mat, kMaxDim> dg; // dg[k] = d_k g
    double V = 0.0;
    Vec dV;
};

// Chart-based Riemannian manifold, optionally carrying a potential.
// Without a potential the Hamiltonian is |xi|_g - 1, otherwise |xi|_g^2 - V.
class Manifold {
public:
    virtual ~Manifold() = default;

    virtual int dim() const = 0;
    virtual std::string kind() const = 0;
    virtual nlohmann::json describe() const = 0;
    virtual double injectivity_radius() const = 0;

    virtual int chart_count() const { return 1; }
    virtual int preferred_chart(const Vec&, int chart) const { return chart; }
    virtual Vec transition_point(const Vec& x, int, int) const { return x; }
    virtual Mat transition_jacobian(const Vec& x, int, int) const {
        return Mat::Identity(x.size(), x.size());
    }

    virtual bool in_domain(const Vec&, int) const { return true; }
    virtual void canonicalize(Vec&, int) const {}
    virtual Vec displacement(const Vec& from, const Vec& to, int) const { return to - from; }

    // Fills g and dg (not ginv).
    virtual void metric_data(const Vec& x, int chart, LocalGeometry& out) const = 0;

    virtual bool has_potential() const { return false; }
    virtual void potential_data(const Vec& x, int, double& V, Vec& dV) const {
        V = 0.0;
        dV = Vec::Zero(x.size());
    }

    virtual bool symbolic_curvature(const Vec&, int, Riemann&) const { return false; }

    virtual Vec random_point(std::mt19937_64& rng, int& chart) const = 0;

    void check_domain(const Vec& x, int chart) const {
        if (x.size() != dim())
            throw DomainError("point has wrong dimension for " + kind());
        for (int i = 0; i < x.size(); ++i)
            if (!std::isfinite(x[i]))
                throw DomainError("non-finite coordinate");
        if (!in_domain(x, chart))
            throw DomainError("point outside chart domain of " + kind());
    }
};

using ManifoldPtr = std::shared_ptr<const Manifold>;

inline LocalGeometry local_geometry(const Manifold& m, const Vec& x, int chart) {
    LocalGeometry lg;
    m.metric_data(x, chart, lg);
    lg.ginv = lg.g.inverse();
    if (m.has_potential())
        m.potential_data(x, chart, lg.V, lg.dV);
    else
        lg.dV = Vec::Zero(x.size());
    return lg;
}

inline double covector_norm(const LocalGeometry& lg, const Vec& xi) {
    return std::sqrt(std::max(0.0, xi.dot(lg.ginv * xi)));
}

inline double hamiltonian(const Manifold& m, const LocalGeometry& lg, const Vec& xi) {
    if (m.has_potential())
        return xi.dot(lg.ginv * xi) - lg.V;
    return covector_norm(lg, xi) - 1.0;
}

inline double hamiltonian(const Manifold& m, const PhasePoint& p) {
    m.check_domain(p.x, p.chart);
    return hamiltonian(m, local_geometry(m, p.x, p.chart), p.xi);
}

// dx = dp/dxi, dxi = -dp/dx.
inline void hamilton_rhs(const Manifold& m, const LocalGeometry& lg, const Vec& xi, Vec& dx, Vec& dxi) {
    const int n = static_cast<int>(xi.size());
    Vec v = lg.ginv * xi;
    dxi.resize(n);
    if (m.has_potential()) {
        dx = 2.0 * v;
        for (int k = 0; k < n; ++k)
            dxi[k] = v.dot(lg.dg[k] * v) + lg.dV[k];
    } else {
        double s = std::sqrt(std::max(1e-300, xi.dot(v)));
        dx = v / s;
        for (int k = 0; k < n; ++k)
            dxi[k] = 0.5 * v.dot(lg.dg[k] * v) / s;
    }
}

inline PhaseVec hamilton_field(const Manifold& m, const PhaseVec& z, int chart) {
    const int n = m.dim();
    Vec x = z.head(n), xi = z.tail(n);
    LocalGeometry lg = local_geometry(m, x, chart);
    Vec dx, dxi;
    hamilton_rhs(m, lg, xi, dx, dxi);
    PhaseVec out(2 * n);
    out << dx, dxi;
    return out;
}

// Gradient (dp/dx, dp/dxi) stacked.
inline PhaseVec hamiltonian_gradient(const Manifold& m, const PhaseVec& z, int chart) {
    const int n = m.dim();
    PhaseVec f = hamilton_field(m, z, chart);
    PhaseVec g(2 * n);
    g << -f.tail(n), f.head(n);
    return g;
}

inline Christoffel christoffel(const LocalGeometry& lg) {
    const int n = static_cast<int>(lg.g.rows());
    Christoffel c;
    c.n = n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int l = 0; l < n; ++l)
                    s += lg.ginv(i, l) * (lg.dg[j](l, k) + lg.dg[k](l, j) - lg.dg[l](j, k));
                c(i, j, k) = 0.5 * s;
            }
    return c;
}

inline Christoffel christoffel(const Manifold& m, const Vec& x, int chart) {
    return christoffel(local_geometry(m, x, chart));
}

struct MetricAndChristoffel {
    Mat g;
    Christoffel gamma;
};

inline MetricAndChristoffel metric_and_derivatives(const Manifold& m, const Vec& x, int chart) {
    m.check_domain(x, chart);
    LocalGeometry lg = local_geometry(m, x, chart);
    Eigen::SelfAdjointEigenSolver<Mat> es(lg.g);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12)
        throw NumericError("degenerate metric");
    return {lg.g, christoffel(lg)};
}

inline Riemann riemann(const Manifold& m, const Vec& x, int chart) {
    Riemann r;
    const int n = m.dim();
    r.n = n;
    if (m.symbolic_curvature(x, chart, r))
        return r;
    // d_k Gamma by 5-point stencils
    const double h = 1e-3;
    std::array<Christoffel, kMaxDim> dgam;
    for (int k = 0; k < n; ++k) {
        auto at = [&](double s) {
            Vec y = x;
            y[k] += s;
            return christoffel(m, y, chart);
        };
        Christoffel a = at(-2 * h), b = at(-h), c = at(h), d = at(2 * h);
        dgam[k].n = n;
        for (std::size_t q = 0; q < a.v.size(); ++q)
            dgam[k].v[q] = (a.v[q] - 8.0 * b.v[q] + 8.0 * c.v[q] - d.v[q]) / (12.0 * h);
    }
    Christoffel g0 = christoffel(m, x, chart);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = dgam[k](i, l, j) - dgam[l](i, k, j);
                    for (int p = 0; p < n; ++p)
                        s += g0(i, k, p) * g0(p, l, j) - g0(i, l, p) * g0(p, k, j);
                    r(i, j, k, l) = s;
                }
    return r;
}

inline PhasePoint to_chart(const Manifold& m, const PhasePoint& p, int chart) {
    if (p.chart == chart)
        return p;
    PhasePoint q;
    q.chart = chart;
    q.x = m.transition_point(p.x, p.chart, chart);
    Mat J = m.transition_jacobian(p.x, p.chart, chart);
    q.xi = J.transpose().partialPivLu().solve(p.xi);
    q.energy = p.energy;
    return q;
}

inline double fiber_radius(const Manifold& m, const LocalGeometry& lg, double energy = 0.0) {
    if (m.has_potential())
        return std::sqrt(std::max(0.0, lg.V + energy));
    return 1.0 + energy;
}

// Rescales xi so that p = energy (xi along its own ray).
inline void project_to_shell(const Manifold& m, const LocalGeometry& lg, Vec& xi, double energy) {
    double r = fiber_radius(m, lg, energy);
    double nrm = covector_norm(lg, xi);
    if (nrm > 0.0)
        xi *= r / nrm;
}

inline PhasePoint make_phase_point(const Manifold& m, const Vec& x, int chart, const Vec& xi) {
    PhasePoint p{x, xi, chart, 0.0};
    m.check_domain(x, chart);
    p.energy = hamiltonian(m, local_geometry(m, x, chart), xi);
    return p;
}

inline PhasePoint make_shell_point(const Manifold& m, const Vec& x, int chart, Vec xi, double energy = 0.0) {
    m.check_domain(x, chart);
    LocalGeometry lg = local_geometry(m, x, chart);
    project_to_shell(m, lg, xi, energy);
    PhasePoint p{x, xi, chart, 0.0};
    p.energy = hamiltonian(m, lg, xi);
    return p;
}

// Lower-triangular L with g = L L^T; covectors xi = L u have |xi|_g = |u|.
inline Mat covector_frame(const Mat& g) { return Eigen::LLT<Mat>(g).matrixL(); }

// Coordinates of a covector in the orthonormal covector frame at x.
inline Vec frame_coordinates(const Mat& g, const Vec& xi) {
    return covector_frame(g).triangularView<Eigen::Lower>().solve(xi);
}

inline std::vector<Vec> sphere_directions(int n, int count) {
    std::vector<Vec> out;
    out.reserve(count);
    const double pi = std::numbers::pi;
    if (n == 1) {
        for (int k = 0; k < count; ++k) {
            Vec u(1);
            u[0] = (k % 2 == 0) ? 1.0 : -1.0;
            out.push_back(u);
        }
    } else if (n == 2) {
        for (int k = 0; k < count; ++k) {
            double a = 2.0 * pi * k / count;
            Vec u(2);
            u << std::cos(a), std::sin(a);
            out.push_back(u);
        }
    } else if (n == 3) {
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        for (int k = 0; k < count; ++k) {
            double z = 1.0 - (2.0 * k + 1.0) / count;
            double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            double a = 2.0 * pi * k / golden;
            Vec u(3);
            u << rho * std::cos(a), rho * std::sin(a), z;
            out.push_back(u);
        }
    } else {
        // Hopf-style grid on S^3: two angles from a rank-1 lattice, one from a radius split.
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        for (int k = 0; k < count; ++k) {
            double s = (k + 0.5) / count;
            double a = 2.0 * pi * std::fmod(k / golden, 1.0);
            double b = 2.0 * pi * std::fmod(k * std::sqrt(2.0), 1.0);
            double r1 = std::sqrt(s), r2 = std::sqrt(1.0 - s);
            Vec u(4);
            u << r1 * std::cos(a), r1 * std::sin(a), r2 * std::cos(b), r2 * std::sin(b);
            out.push_back(u);
        }
    }
    return out;
}

// Deterministic sample of the cosphere fiber {p = energy} over x.
inline std::vector<PhasePoint> fiber_sample(const Manifold& m, const Vec& x, int chart, int count,
                                            double energy = 0.0) {
    if (count < 1)
        throw PreconditionError("fiber_sample needs count >= 1");
    m.check_domain(x, chart);
    LocalGeometry lg = local_geometry(m, x, chart);
    Mat L = covector_frame(lg.g);
    double r = fiber_radius(m, lg, energy);
    std::vector<PhasePoint> out;
    out.reserve(count);
    for (const Vec& u : sphere_directions(m.dim(), count)) {
        Vec xi = r * (L * u);
        project_to_shell(m, lg, xi, energy);
        out.push_back({x, xi, chart, hamiltonian(m, lg, xi)});
    }
    return out;
}

// First-order parallel transport of a covector at `from` to `to` in one chart.
inline Vec transport_covector(const Christoffel& gam, const Vec& step, const Vec& xi) {
    const int n = static_cast<int>(xi.size());
    Vec out = xi;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out[k] += gam(j, i, k) * step[i] * xi[j];
    return out;
}

struct SasakiResult {
    double value = 0.0;
    bool proxy = false;
};

// Symmetric midpoint scheme: metric and Christoffel symbols are evaluated at the
// chart midpoint; both covectors are carried there to first order.
inline SasakiResult sasaki_distance(const Manifold& m, const PhasePoint& a, const PhasePoint& b0) {
    PhasePoint b = to_chart(m, b0, a.chart);
    Vec d = m.displacement(a.x, b.x, a.chart);
    if (d.norm() == 0.0 && (a.xi - b.xi).norm() == 0.0)
        return {0.0, false};
    Vec mid = a.x + 0.5 * d;
    LocalGeometry lg = local_geometry(m, mid, a.chart);
    double base = std::sqrt(std::max(0.0, d.dot(lg.g * d)));
    Christoffel gam = christoffel(lg);
    Vec ta = transport_covector(gam, 0.5 * d, a.xi);
    Vec tb = transport_covector(gam, -0.5 * d, b.xi);
    Vec diff = ta - tb;
    double fib = std::sqrt(std::max(0.0, diff.dot(lg.ginv * diff)));
    return {std::sqrt(base * base + fib * fib), base >= 0.5 * m.injectivity_radius()};
}

inline double base_distance(const Manifold& m, const Vec& a, const Vec& b, int chart) {
    Vec d = m.displacement(a, b, chart);
    LocalGeometry lg;
    m.metric_data(a + 0.5 * d, chart, lg);
    return std::sqrt(std::max(0.0, d.dot(lg.g * d)));
}

} // namespace geobeam

#endif
