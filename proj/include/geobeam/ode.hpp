#ifndef GEOBEAM_ODE_HPP
#define GEOBEAM_ODE_HPP

#include "types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace geobeam {

struct FlowOptions {
    double abs_tol = 1e-11;
    double rel_tol = 1e-11;
    double horizon = 1e3;
    double h_init = 1e-2;
    double h_max = 0.5;
    double h_min = 1e-12;
    bool project = true;
    long max_steps = 20000000;
};

// One accepted Dormand-Prince step with its continuous extension.
template <class V>
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    int chart = 0;
    std::array<V, 5> r;

    double t1() const { return t0 + h; }

    V eval(double t) const {
        double s = (t - t0) / h, s1 = 1.0 - s;
        return r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4])));
    }
};

namespace dopri {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
} // namespace dopri

// Integrates an autonomous system from t0 to t1.
//   sys.rhs(y, chart, dy)
//   sys.after_step(y, chart) -> bool  (projection, wrapping, chart changes; true if
//                                       the derivative at y must be recomputed)
//   on_segment(const DenseSegment<V>&) -> bool (false stops)
// Returns the final time reached; y and chart hold the final state.
template <class V, class System, class OnSegment>
double dopri5(const System& sys, V& y, int& chart, double t0, double t1, const FlowOptions& opt,
              OnSegment&& on_segment) {
    using namespace dopri;
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    double t = t0;
    if (t1 == t0)
        return t;
    const long m = y.size();
    V k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), yt(m), y1(m), err(m);
    sys.rhs(y, chart, k1);
    double h = dir * std::min(opt.h_init, std::abs(t1 - t0));
    long steps = 0;
    bool last_rejected = false;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > opt.max_steps)
            throw IntegrationError("step budget exhausted at t=" + std::to_string(t));
        if (dir * (t + h - t1) > 0.0)
            h = t1 - t;
        yt = y + h * a21 * k1;
        sys.rhs(yt, chart, k2);
        yt = y + h * (a31 * k1 + a32 * k2);
        sys.rhs(yt, chart, k3);
        yt = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        sys.rhs(yt, chart, k4);
        yt = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        sys.rhs(yt, chart, k5);
        yt = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        sys.rhs(yt, chart, k6);
        y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        sys.rhs(y1, chart, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double en = 0.0;
        for (long i = 0; i < m; ++i) {
            double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
            double q = err[i] / sc;
            en += q * q;
        }
        en = std::sqrt(en / static_cast<double>(m));
        if (!std::isfinite(en)) {
            h *= 0.25;
            last_rejected = true;
            if (std::abs(h) < opt.h_min && dir * (t1 - t) > opt.h_min)
                throw IntegrationError("non-finite state near t=" + std::to_string(t));
            continue;
        }
        if (en <= 1.0) {
            DenseSegment<V> seg;
            seg.t0 = t;
            seg.h = h;
            seg.chart = chart;
            V ydiff = y1 - y;
            V bspl = h * k1 - ydiff;
            seg.r[0] = y;
            seg.r[1] = ydiff;
            seg.r[2] = bspl;
            seg.r[3] = ydiff - h * k7 - bspl;
            seg.r[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            t += h;
            y = y1;
            bool recompute = sys.after_step(y, chart);
            if (recompute)
                sys.rhs(y, chart, k1);
            else
                k1 = k7;
            if (!on_segment(seg))
                return t;
            double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            h = dir * std::min(std::abs(h) * fac, opt.h_max);
            last_rejected = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            last_rejected = true;
        }
        if (std::abs(h) < opt.h_min && dir * (t1 - t) > opt.h_min)
            throw IntegrationError("step-size underflow near t=" + std::to_string(t));
    }
    return t;
}

} // namespace geobeam

#endif
