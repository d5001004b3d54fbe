#ifndef GEOBEAM_MANIFOLDS_HPP
#define GEOBEAM_MANIFOLDS_HPP

#include "manifold.hpp"
#include "profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace geobeam {

namespace detail {

inline double wrap_symmetric(double v, double period) {
    v = std::fmod(v, period);
    if (v > 0.5 * period)
        v -= period;
    else if (v <= -0.5 * period)
        v += period;
    return v;
}

inline double wrap_positive(double v, double period) {
    v = std::fmod(v, period);
    if (v < 0.0)
        v += period;
    if (v >= period)
        v -= period;
    return v;
}

} // namespace detail

class FlatTorus final : public Manifold {
public:
    explicit FlatTorus(std::vector<double> periods) : periods_(std::move(periods)) {
        if (periods_.empty() || static_cast<int>(periods_.size()) > kMaxDim)
            throw PreconditionError("flat torus dimension out of range");
        for (double L : periods_)
            if (!(L > 0.0))
                throw PreconditionError("flat torus periods must be positive");
    }
    static std::shared_ptr<FlatTorus> unit(int n) { return std::make_shared<FlatTorus>(std::vector<double>(n, 1.0)); }

    int dim() const override { return static_cast<int>(periods_.size()); }
    std::string kind() const override { return "flat-torus"; }
    nlohmann::json describe() const override { return {{"kind", kind()}, {"periods", periods_}}; }
    double injectivity_radius() const override {
        return 0.5 * *std::min_element(periods_.begin(), periods_.end());
    }
    void canonicalize(Vec& x, int) const override {
        for (int i = 0; i < dim(); ++i)
            x[i] = detail::wrap_positive(x[i], periods_[i]);
    }
    Vec displacement(const Vec& from, const Vec& to, int) const override {
        Vec d = to - from;
        for (int i = 0; i < dim(); ++i)
            d[i] = detail::wrap_symmetric(d[i], periods_[i]);
        return d;
    }
    void metric_data(const Vec&, int, LocalGeometry& out) const override {
        const int n = dim();
        out.g = Mat::Identity(n, n);
        for (int k = 0; k < n; ++k)
            out.dg[k] = Mat::Zero(n, n);
    }
    bool symbolic_curvature(const Vec&, int, Riemann& r) const override {
        r.n = dim();
        r.v.fill(0.0);
        return true;
    }
    Vec random_point(std::mt19937_64& rng, int& chart) const override {
        chart = 0;
        Vec x(dim());
        for (int i = 0; i < dim(); ++i)
            x[i] = std::uniform_real_distribution<double>(0.0, periods_[i])(rng);
        return x;
    }
    const std::vector<double>& periods() const { return periods_; }

private:
    std::vector<double> periods_;
};

// Unit round sphere S^n in two stereographic charts; chart 0 projects from the
// south pole, chart 1 from the north pole, and they are related by inversion.
class RoundSphere final : public Manifold {
public:
    explicit RoundSphere(int n) : n_(n) {
        if (n < 1 || n > kMaxDim)
            throw PreconditionError("round sphere dimension out of range");
    }
    int dim() const override { return n_; }
    std::string kind() const override { return "round-sphere"; }
    nlohmann::json describe() const override { return {{"kind", kind()}, {"dimension", n_}}; }
    double injectivity_radius() const override { return std::numbers::pi; }
    int chart_count() const override { return 2; }
    int preferred_chart(const Vec& x, int chart) const override { return x.squaredNorm() > 2.25 ? 1 - chart : chart; }
    Vec transition_point(const Vec& x, int from, int to) const override {
        if (from == to)
            return x;
        return x / x.squaredNorm();
    }
    Mat transition_jacobian(const Vec& x, int from, int to) const override {
        if (from == to)
            return Mat::Identity(n_, n_);
        double s = x.squaredNorm();
        return (Mat::Identity(n_, n_) * s - 2.0 * x * x.transpose()) / (s * s);
    }
    bool in_domain(const Vec& x, int) const override { return x.squaredNorm() < 1e8; }
    void metric_data(const Vec& x, int, LocalGeometry& out) const override {
        double lam = 2.0 / (1.0 + x.squaredNorm());
        out.g = Mat::Identity(n_, n_) * lam * lam;
        for (int k = 0; k < n_; ++k)
            out.dg[k] = Mat::Identity(n_, n_) * (-2.0 * lam * lam * lam * x[k]);
    }
    bool symbolic_curvature(const Vec& x, int, Riemann& r) const override {
        double lam = 2.0 / (1.0 + x.squaredNorm());
        double g = lam * lam;
        r.n = n_;
        r.v.fill(0.0);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
                // R^i_{jkl} = delta^i_k g_{lj} - delta^i_l g_{kj}
                if (i != j) {
                    r(i, j, i, j) += g;
                    r(i, j, j, i) -= g;
                }
            }
        return true;
    }
    Vec random_point(std::mt19937_64& rng, int& chart) const override {
        std::normal_distribution<double> nd;
        Eigen::VectorXd X(n_ + 1);
        for (int i = 0; i <= n_; ++i)
            X[i] = nd(rng);
        X.normalize();
        return from_embedding(X, chart);
    }
    Vec from_embedding(const Eigen::VectorXd& X, int& chart) const {
        double last = X[n_];
        chart = last >= 0.0 ? 0 : 1;
        Vec u = X.head(n_);
        return chart == 0 ? Vec(u / (1.0 + last)) : Vec(u / (1.0 - last));
    }
    Eigen::VectorXd embedding(const Vec& u, int chart) const {
        double s = u.squaredNorm();
        Eigen::VectorXd X(n_ + 1);
        X.head(n_) = 2.0 * u / (1.0 + s);
        X[n_] = (chart == 0 ? 1.0 : -1.0) * (1.0 - s) / (1.0 + s);
        return X;
    }

private:
    int n_;
};

// dr^2 + alpha(r)^2 dtheta^2 on (0, pi) x S^1, optionally with a potential V(r).
class SurfaceOfRevolution final : public Manifold {
public:
    SurfaceOfRevolution(ProfilePtr alpha, ProfilePtr potential = nullptr, double injectivity = std::numbers::pi,
                        double pole_guard = 1e-6)
        : alpha_(std::move(alpha)), potential_(std::move(potential)), inj_(injectivity), guard_(pole_guard) {
        const double pi = std::numbers::pi;
        caps_ = std::abs(alpha_->value(0.0)) < 1e-8 && std::abs(alpha_->d1(0.0) - 1.0) < 1e-6 &&
                std::abs(alpha_->value(pi)) < 1e-8 && std::abs(alpha_->d1(pi) + 1.0) < 1e-6;
        if (potential_)
            caps_ = caps_ && std::abs(potential_->d1(0.0)) < 1e-8 && std::abs(potential_->d1(pi)) < 1e-8;
        if (caps_)
            for (int pole = 0; pole < 2; ++pole) {
                auto Q = [&](double h) {
                    double a = cap_alpha(pole, h).first;
                    return (a * a / (h * h) - 1.0) / (h * h);
                };
                k2_[pole] = (4.0 * Q(5e-3) - Q(1e-2)) / 3.0;
            }
    }

    static std::shared_ptr<SurfaceOfRevolution> pendulum(double energy) {
        return std::make_shared<SurfaceOfRevolution>(std::make_shared<SineProfile>(),
                                                     std::make_shared<PendulumPotential>(energy));
    }
    static std::shared_ptr<SurfaceOfRevolution> polar_sphere() {
        return std::make_shared<SurfaceOfRevolution>(std::make_shared<SineProfile>());
    }

    int dim() const override { return 2; }
    std::string kind() const override { return "surface-of-revolution"; }
    nlohmann::json describe() const override {
        nlohmann::json j{{"kind", kind()}, {"alpha", alpha_->describe()}, {"injectivity_radius", inj_},
                         {"pole_guard", guard_}, {"pole_charts", caps_}};
        j["potential"] = potential_ ? potential_->describe() : nlohmann::json(nullptr);
        return j;
    }
    double injectivity_radius() const override { return inj_; }

    // Chart 0: polar (r, theta). Charts 1 and 2, when the profile closes up smoothly
    // at the poles: w = s (cos theta, sin theta) with s = r (north) or pi - r (south).
    int chart_count() const override { return caps_ ? 3 : 1; }
    int preferred_chart(const Vec& x, int chart) const override {
        if (!caps_)
            return chart;
        if (chart == 0) {
            if (x[0] < kEnter)
                return 1;
            if (x[0] > std::numbers::pi - kEnter)
                return 2;
            return 0;
        }
        return x.norm() > kLeave ? 0 : chart;
    }
    Vec transition_point(const Vec& x, int from, int to) const override {
        if (from == to)
            return x;
        Vec p = from == 0 ? x : to_polar(x, from);
        return to == 0 ? p : from_polar(p, to);
    }
    Mat transition_jacobian(const Vec& x, int from, int to) const override {
        if (from == to)
            return Mat::Identity(2, 2);
        Mat J = Mat::Identity(2, 2);
        Vec p = x;
        if (from != 0) {
            J = polar_jacobian(x, from);
            p = to_polar(x, from);
        }
        if (to != 0)
            J = (cap_jacobian(p, to) * J).eval();
        return J;
    }
    bool in_domain(const Vec& x, int chart) const override {
        if (chart != 0)
            return caps_ && x.norm() < kCapMax;
        return x[0] > guard_ && x[0] < std::numbers::pi - guard_;
    }
    void canonicalize(Vec& x, int chart) const override {
        if (chart == 0)
            x[1] = detail::wrap_positive(x[1], 2.0 * std::numbers::pi);
    }
    Vec displacement(const Vec& from, const Vec& to, int chart) const override {
        Vec d = to - from;
        if (chart == 0)
            d[1] = detail::wrap_symmetric(d[1], 2.0 * std::numbers::pi);
        return d;
    }
    void metric_data(const Vec& x, int chart, LocalGeometry& out) const override {
        if (chart != 0) {
            cap_metric(x, chart, out);
            return;
        }
        double a = alpha_->value(x[0]), da = alpha_->d1(x[0]);
        out.g = Mat::Zero(2, 2);
        out.g(0, 0) = 1.0;
        out.g(1, 1) = a * a;
        out.dg[0] = Mat::Zero(2, 2);
        out.dg[0](1, 1) = 2.0 * a * da;
        out.dg[1] = Mat::Zero(2, 2);
    }
    bool has_potential() const override { return potential_ != nullptr; }
    void potential_data(const Vec& x, int chart, double& V, Vec& dV) const override {
        dV = Vec::Zero(2);
        if (!potential_) {
            V = 0.0;
            return;
        }
        if (chart == 0) {
            V = potential_->value(x[0]);
            dV[0] = potential_->d1(x[0]);
            return;
        }
        const double pi = std::numbers::pi, s = x.norm();
        const bool north = chart == 1;
        V = potential_->value(north ? s : pi - s);
        // dV/ds / s, which tends to V''(pole)
        double ratio = s < kSmall ? potential_->d2(north ? 0.0 : pi)
                                  : (north ? potential_->d1(s) : -potential_->d1(pi - s)) / s;
        dV = ratio * x;
    }
    Vec random_point(std::mt19937_64& rng, int& chart) const override {
        chart = 0;
        Vec x(2);
        x[0] = std::uniform_real_distribution<double>(0.2, std::numbers::pi - 0.2)(rng);
        x[1] = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
        return x;
    }

    const Profile& alpha() const { return *alpha_; }
    const Profile* potential() const { return potential_.get(); }
    double pole_guard() const { return guard_; }

    // f(r) = alpha(r) sqrt(V(r)) (or alpha alone without potential).
    double clairaut_bound(double r) const {
        double v = potential_ ? potential_->value(r) : 1.0;
        return alpha_->value(r) * std::sqrt(std::max(0.0, v));
    }

    struct ProfileCheck {
        bool ok = false;
        int critical_points = 0;
        double r_max = 0.0;
        double second_derivative = 0.0;
    };

    // Grid check that r -> alpha sqrt(V) has one interior critical point, a
    // non-degenerate maximum.
    ProfileCheck check_integrable(int grid = 4096) const {
        ProfileCheck c;
        const double lo = 1e-3, hi = std::numbers::pi - 1e-3;
        auto df = [&](double r) {
            double h = 1e-6;
            return (clairaut_bound(r + h) - clairaut_bound(r - h)) / (2.0 * h);
        };
        double prev = df(lo);
        for (int i = 1; i <= grid; ++i) {
            double r = lo + (hi - lo) * i / grid;
            double cur = df(r);
            if ((prev > 0.0) != (cur > 0.0)) {
                ++c.critical_points;
                double a = lo + (hi - lo) * (i - 1) / grid, b = r;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (a + b);
                    if ((df(mid) > 0.0) == (df(a) > 0.0))
                        a = mid;
                    else
                        b = mid;
                }
                c.r_max = 0.5 * (a + b);
                double h = 1e-4;
                c.second_derivative = (clairaut_bound(c.r_max + h) - 2.0 * clairaut_bound(c.r_max) +
                                       clairaut_bound(c.r_max - h)) / (h * h);
            }
            prev = cur;
        }
        c.ok = c.critical_points == 1 && c.second_derivative < -1e-8;
        return c;
    }

private:
    static constexpr double kEnter = 0.3;  // polar -> cap below this distance to a pole
    static constexpr double kLeave = 0.6;  // cap -> polar above this
    static constexpr double kCapMax = 1.0; // cap chart domain
    static constexpr double kSmall = 1e-4; // series branch near the pole itself

    // alpha and d alpha / ds as functions of the distance s to the pole
    std::pair<double, double> cap_alpha(int pole, double s) const {
        if (pole == 0)
            return {alpha_->value(s), alpha_->d1(s)};
        const double r = std::numbers::pi - s;
        return {alpha_->value(r), -alpha_->d1(r)};
    }

    static Vec to_polar(const Vec& w, int chart) {
        const double s = w.norm();
        Vec p(2);
        p[0] = chart == 1 ? s : std::numbers::pi - s;
        p[1] = detail::wrap_positive(std::atan2(w[1], w[0]), 2.0 * std::numbers::pi);
        return p;
    }
    static Vec from_polar(const Vec& p, int chart) {
        const double s = chart == 1 ? p[0] : std::numbers::pi - p[0];
        Vec w(2);
        w << s * std::cos(p[1]), s * std::sin(p[1]);
        return w;
    }
    // d(r, theta) / dw
    static Mat polar_jacobian(const Vec& w, int chart) {
        const double s2 = w.squaredNorm(), s = std::sqrt(s2), sg = chart == 1 ? 1.0 : -1.0;
        Mat J(2, 2);
        J << sg * w[0] / s, sg * w[1] / s, -w[1] / s2, w[0] / s2;
        return J;
    }
    // dw / d(r, theta)
    static Mat cap_jacobian(const Vec& p, int chart) {
        const double s = chart == 1 ? p[0] : std::numbers::pi - p[0], sg = chart == 1 ? 1.0 : -1.0;
        const double c = std::cos(p[1]), sn = std::sin(p[1]);
        Mat J(2, 2);
        J << sg * c, -s * sn, sg * sn, s * c;
        return J;
    }

    // g = q I + c w w^T with q = a^2 / s^2 and c = (1 - q) / s^2;
    // d_k g_ij = (q'/s) w_k d_ij + (c'/s) w_k w_i w_j + c (d_ik w_j + w_i d_jk).
    void cap_metric(const Vec& w, int chart, LocalGeometry& out) const {
        const int pole = chart - 1;
        const double s = w.norm();
        double q, c, qr, cr;
        if (s < kSmall) {
            q = 1.0 + k2_[pole] * s * s;
            c = -k2_[pole];
            qr = 2.0 * k2_[pole];
            cr = 0.0;
        } else {
            auto [a, da] = cap_alpha(pole, s);
            const double s2 = s * s, s3 = s2 * s;
            q = a * a / s2;
            const double dq = 2.0 * a * da / s2 - 2.0 * a * a / s3;
            c = (1.0 - q) / s2;
            const double dc = -dq / s2 - 2.0 * (1.0 - q) / s3;
            qr = dq / s;
            cr = dc / s;
        }
        const Mat I = Mat::Identity(2, 2);
        out.g = q * I + c * w * w.transpose();
        for (int k = 0; k < 2; ++k) {
            Mat d = qr * w[k] * I + cr * w[k] * w * w.transpose();
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    d(i, j) += c * ((i == k ? w[j] : 0.0) + (j == k ? w[i] : 0.0));
            out.dg[k] = d;
        }
    }

    ProfilePtr alpha_;
    ProfilePtr potential_;
    double inj_;
    double guard_;
    bool caps_ = false;
    double k2_[2] = {0.0, 0.0};
};

// Riemannian product with block-diagonal metric; chart index c1 * k2 + c2.
class ProductManifold final : public Manifold {
public:
    ProductManifold(ManifoldPtr a, ManifoldPtr b) : a_(std::move(a)), b_(std::move(b)) {
        if (a_->dim() + b_->dim() > kMaxDim)
            throw PreconditionError("product dimension exceeds supported maximum");
        if (a_->has_potential() || b_->has_potential())
            throw PreconditionError("product factors must be pure metrics");
    }
    int dim() const override { return a_->dim() + b_->dim(); }
    std::string kind() const override { return "product"; }
    nlohmann::json describe() const override {
        return {{"kind", kind()}, {"factors", {a_->describe(), b_->describe()}}};
    }
    double injectivity_radius() const override {
        return std::min(a_->injectivity_radius(), b_->injectivity_radius());
    }
    int chart_count() const override { return a_->chart_count() * b_->chart_count(); }
    int preferred_chart(const Vec& x, int c) const override {
        return join(a_->preferred_chart(head(x), ca(c)), b_->preferred_chart(tail(x), cb(c)));
    }
    Vec transition_point(const Vec& x, int from, int to) const override {
        return cat(a_->transition_point(head(x), ca(from), ca(to)), b_->transition_point(tail(x), cb(from), cb(to)));
    }
    Mat transition_jacobian(const Vec& x, int from, int to) const override {
        Mat J = Mat::Zero(dim(), dim());
        J.topLeftCorner(na(), na()) = a_->transition_jacobian(head(x), ca(from), ca(to));
        J.bottomRightCorner(nb(), nb()) = b_->transition_jacobian(tail(x), cb(from), cb(to));
        return J;
    }
    bool in_domain(const Vec& x, int c) const override {
        return a_->in_domain(head(x), ca(c)) && b_->in_domain(tail(x), cb(c));
    }
    void canonicalize(Vec& x, int c) const override {
        Vec h = head(x), t = tail(x);
        a_->canonicalize(h, ca(c));
        b_->canonicalize(t, cb(c));
        x = cat(h, t);
    }
    Vec displacement(const Vec& from, const Vec& to, int c) const override {
        return cat(a_->displacement(head(from), head(to), ca(c)), b_->displacement(tail(from), tail(to), cb(c)));
    }
    void metric_data(const Vec& x, int c, LocalGeometry& out) const override {
        LocalGeometry la, lb;
        a_->metric_data(head(x), ca(c), la);
        b_->metric_data(tail(x), cb(c), lb);
        const int n = dim();
        out.g = Mat::Zero(n, n);
        out.g.topLeftCorner(na(), na()) = la.g;
        out.g.bottomRightCorner(nb(), nb()) = lb.g;
        for (int k = 0; k < n; ++k) {
            out.dg[k] = Mat::Zero(n, n);
            if (k < na())
                out.dg[k].topLeftCorner(na(), na()) = la.dg[k];
            else
                out.dg[k].bottomRightCorner(nb(), nb()) = lb.dg[k - na()];
        }
    }
    bool symbolic_curvature(const Vec& x, int c, Riemann& r) const override {
        Riemann ra, rb;
        if (!a_->symbolic_curvature(head(x), ca(c), ra) || !b_->symbolic_curvature(tail(x), cb(c), rb))
            return false;
        r.n = dim();
        r.v.fill(0.0);
        const int p = na(), q = nb();
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                for (int k = 0; k < p; ++k)
                    for (int l = 0; l < p; ++l)
                        r(i, j, k, l) = ra(i, j, k, l);
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j)
                for (int k = 0; k < q; ++k)
                    for (int l = 0; l < q; ++l)
                        r(p + i, p + j, p + k, p + l) = rb(i, j, k, l);
        return true;
    }
    Vec random_point(std::mt19937_64& rng, int& chart) const override {
        int c1 = 0, c2 = 0;
        Vec h = a_->random_point(rng, c1);
        Vec t = b_->random_point(rng, c2);
        chart = join(c1, c2);
        return cat(h, t);
    }
    const Manifold& first() const { return *a_; }
    const Manifold& second() const { return *b_; }

private:
    int na() const { return a_->dim(); }
    int nb() const { return b_->dim(); }
    int ca(int c) const { return c / b_->chart_count(); }
    int cb(int c) const { return c % b_->chart_count(); }
    int join(int c1, int c2) const { return c1 * b_->chart_count() + c2; }
    Vec head(const Vec& x) const { return x.head(na()); }
    Vec tail(const Vec& x) const { return x.tail(nb()); }
    static Vec cat(const Vec& a, const Vec& b) {
        Vec out(a.size() + b.size());
        out << a, b;
        return out;
    }

    ManifoldPtr a_, b_;
};

// Triaxial ellipsoid x^2/a^2 + y^2/b^2 + z^2/c^2 = 1 with two angular charts.
// Chart 0 has its poles on the c axis, chart 1 on the a axis.
class TriaxialEllipsoid final : public Manifold {
public:
    TriaxialEllipsoid(double a, double b, double c) : ax_{a, b, c} {
        if (!(0.0 < a && a < b && b < c))
            throw PreconditionError("ellipsoid semi-axes must satisfy 0 < a < b < c");
    }
    int dim() const override { return 2; }
    std::string kind() const override { return "triaxial-ellipsoid"; }
    nlohmann::json describe() const override { return {{"kind", kind()}, {"axes", {ax_[0], ax_[1], ax_[2]}}}; }
    double injectivity_radius() const override { return ax_[0]; }
    int chart_count() const override { return 2; }
    int preferred_chart(const Vec& x, int chart) const override {
        return std::sin(x[0]) < 0.35 ? 1 - chart : chart;
    }
    Vec transition_point(const Vec& x, int from, int to) const override {
        if (from == to)
            return x;
        return inverse(embed(x, from), to);
    }
    Mat transition_jacobian(const Vec& x, int from, int to) const override {
        if (from == to)
            return Mat::Identity(2, 2);
        Vec y = transition_point(x, from, to);
        Eigen::Matrix<double, 3, 2> J1 = jacobian(x, from), J2 = jacobian(y, to);
        Eigen::Matrix2d G2 = J2.transpose() * J2;
        Eigen::Matrix2d T = G2.inverse() * (J2.transpose() * J1);
        return T;
    }
    bool in_domain(const Vec& x, int) const override { return std::sin(x[0]) > 1e-6 && x[0] > 0.0 && x[0] < std::numbers::pi; }
    void canonicalize(Vec& x, int) const override { x[1] = detail::wrap_positive(x[1], 2.0 * std::numbers::pi); }
    Vec displacement(const Vec& from, const Vec& to, int) const override {
        Vec d = to - from;
        d[1] = detail::wrap_symmetric(d[1], 2.0 * std::numbers::pi);
        return d;
    }
    void metric_data(const Vec& x, int chart, LocalGeometry& out) const override {
        Eigen::Matrix<double, 3, 2> J = jacobian(x, chart);
        std::array<Eigen::Matrix<double, 3, 2>, 2> H = second(x, chart);
        out.g = J.transpose() * J;
        for (int k = 0; k < 2; ++k)
            out.dg[k] = H[k].transpose() * J + J.transpose() * H[k];
    }
    Vec random_point(std::mt19937_64& rng, int& chart) const override {
        chart = 0;
        Vec x(2);
        x[0] = std::uniform_real_distribution<double>(0.4, std::numbers::pi - 0.4)(rng);
        x[1] = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
        return x;
    }

    Eigen::Vector3d embed(const Vec& x, int chart) const {
        auto [A, B, C] = axes(chart);
        Eigen::Vector3d Y(A * std::sin(x[0]) * std::cos(x[1]), B * std::sin(x[0]) * std::sin(x[1]), C * std::cos(x[0]));
        return unpermute(Y, chart);
    }

private:
    std::array<double, 3> axes(int chart) const {
        if (chart == 0)
            return {ax_[0], ax_[1], ax_[2]};
        return {ax_[1], ax_[2], ax_[0]};
    }
    static Eigen::Vector3d unpermute(const Eigen::Vector3d& Y, int chart) {
        if (chart == 0)
            return Y;
        return {Y[2], Y[0], Y[1]};
    }
    static Eigen::Vector3d permute(const Eigen::Vector3d& X, int chart) {
        if (chart == 0)
            return X;
        return {X[1], X[2], X[0]};
    }
    Vec inverse(const Eigen::Vector3d& X, int chart) const {
        auto [A, B, C] = axes(chart);
        Eigen::Vector3d Y = permute(X, chart);
        Vec x(2);
        x[0] = std::acos(std::clamp(Y[2] / C, -1.0, 1.0));
        x[1] = detail::wrap_positive(std::atan2(Y[1] / B, Y[0] / A), 2.0 * std::numbers::pi);
        return x;
    }
    Eigen::Matrix<double, 3, 2> jacobian(const Vec& x, int chart) const {
        auto [A, B, C] = axes(chart);
        double su = std::sin(x[0]), cu = std::cos(x[0]), sv = std::sin(x[1]), cv = std::cos(x[1]);
        Eigen::Matrix<double, 3, 2> J;
        J.col(0) = unpermute({A * cu * cv, B * cu * sv, -C * su}, chart);
        J.col(1) = unpermute({-A * su * sv, B * su * cv, 0.0}, chart);
        return J;
    }
    // H[k](:, i) = d_k d_i X
    std::array<Eigen::Matrix<double, 3, 2>, 2> second(const Vec& x, int chart) const {
        auto [A, B, C] = axes(chart);
        double su = std::sin(x[0]), cu = std::cos(x[0]), sv = std::sin(x[1]), cv = std::cos(x[1]);
        Eigen::Vector3d uu = unpermute({-A * su * cv, -B * su * sv, -C * cu}, chart);
        Eigen::Vector3d uv = unpermute({-A * cu * sv, B * cu * cv, 0.0}, chart);
        Eigen::Vector3d vv = unpermute({-A * su * cv, -B * su * sv, 0.0}, chart);
        std::array<Eigen::Matrix<double, 3, 2>, 2> H;
        H[0].col(0) = uu;
        H[0].col(1) = uv;
        H[1].col(0) = uv;
        H[1].col(1) = vv;
        return H;
    }

    std::array<double, 3> ax_;
};

} // namespace geobeam

#endif
