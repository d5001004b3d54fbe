#ifndef GEOBEAM_IO_HPP
#define GEOBEAM_IO_HPP

// Tabular and diagram outputs: tubes.csv and fiber.svg.

#include "looping.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace geobeam {

namespace detail {

inline std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

inline std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Spherical angles of a covector direction: one angle for n = 2, n - 1 in general.
inline std::vector<double> direction_angles(const Vec& xi) {
    std::vector<double> out;
    const int n = static_cast<int>(xi.size());
    if (n == 1)
        return {xi[0] >= 0 ? 0.0 : std::numbers::pi};
    for (int k = 0; k + 2 < n; ++k) {
        double tail = xi.tail(n - k - 1).norm();
        out.push_back(std::atan2(tail, xi[k]));
    }
    double a = std::atan2(xi[n - 1], xi[n - 2]);
    out.push_back(a < 0 ? a + 2.0 * std::numbers::pi : a);
    return out;
}

} // namespace detail

// index, angle(s), color, class, loop intervals ("j@lo:hi" separated by spaces).
inline std::string tubes_csv(const TubeCover& cv, const LoopPartition* p = nullptr, const LoopRelation* rel = nullptr) {
    std::vector<int> labels;
    if (p)
        labels = p->labels();
    std::vector<std::vector<std::string>> loops(cv.tubes.size());
    if (rel)
        for (const auto& [k, v] : rel->pairs)
            for (const auto& iv : v)
                loops[k.first].push_back(std::to_string(k.second) + "@" + detail::fmt(iv.lo, 4) + ":" +
                                         detail::fmt(iv.hi, 4));
    std::ostringstream os;
    os << "index,angle,color,class,intervals\n";
    for (const auto& t : cv.tubes) {
        os << t.index << ',';
        auto ang = detail::direction_angles(t.center.xi);
        for (std::size_t a = 0; a < ang.size(); ++a)
            os << (a ? ";" : "") << detail::fmt(ang[a], 9);
        os << ',' << t.color << ',';
        if (!p)
            os << "unclassified";
        else if (labels[t.index] < 0)
            os << "bad";
        else
            os << "good:" << labels[t.index];
        os << ',';
        for (std::size_t s = 0; s < loops[t.index].size(); ++s)
            os << (s ? " " : "") << loops[t.index][s];
        os << '\n';
    }
    return os.str();
}

struct SvgOptions {
    double t0 = 1.6;
    double T = 2.7;
    bool lattice = true;
    std::vector<LatticeDirection> directions; // drawn as dashed rays when present
    std::set<int> disagreements;              // tubes highlighted in red
};

// Fiber diagram in the chart plane of x: a radial segment of length 2(tau + R)
// per tube direction, green when good and orange when bad.
inline std::string fiber_svg(const TubeCover& cv, const LoopPartition* p, const SvgOptions& o) {
    if (cv.manifold->dim() != 2)
        throw PreconditionError("fiber.svg is only supported for n = 2");
    const double size = 800.0, half = size / 2.0;
    const double extent = o.T + 0.5;
    const double scale = half / extent;
    auto X = [&](double u) { return detail::fmt(half + scale * u, 3); };
    auto Y = [&](double v) { return detail::fmt(half - scale * v, 3); };
    std::vector<int> labels = p ? p->labels() : std::vector<int>(cv.tubes.size(), 0);

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << size << "\" height=\"" << size
       << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n";
    if (o.lattice) {
        os << "<g id=\"lattice\" fill=\"#444444\">\n";
        const int B = static_cast<int>(std::ceil(extent));
        for (int a = -B; a <= B; ++a)
            for (int b = -B; b <= B; ++b)
                if (std::hypot(a, b) <= extent)
                    os << "<circle cx=\"" << X(a) << "\" cy=\"" << Y(b) << "\" r=\"2\"/>\n";
        os << "</g>\n";
    }
    os << "<g id=\"windows\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\">\n";
    for (double r : {o.t0, o.T})
        os << "<circle cx=\"" << X(0) << "\" cy=\"" << Y(0) << "\" r=\"" << detail::fmt(scale * r, 3) << "\"/>\n";
    os << "</g>\n";
    if (!o.directions.empty()) {
        os << "<g id=\"returns\" stroke=\"#d9822b\" stroke-width=\"0.6\" stroke-dasharray=\"4 3\" opacity=\"0.6\">\n";
        for (const auto& d : o.directions)
            os << "<line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(d.return_time * std::cos(d.angle))
               << "\" y2=\"" << Y(d.return_time * std::sin(d.angle)) << "\"/>\n";
        os << "</g>\n";
    }
    const double len = 2.0 * (cv.tau + cv.R);
    os << "<g id=\"tubes\" stroke-width=\"0.8\">\n";
    for (const auto& t : cv.tubes) {
        const Vec& xi = t.center.xi;
        double a = std::atan2(xi[1], xi[0]);
        std::string color = labels[t.index] < 0 ? "#f28e2b" : "#2ca02c";
        std::string extra;
        if (o.disagreements.count(t.index)) {
            color = "#d62728";
            extra = " stroke-width=\"3\"";
        }
        os << "<line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(len * std::cos(a)) << "\" y2=\""
           << Y(len * std::sin(a)) << "\" stroke=\"" << color << "\"" << extra << "/>\n";
    }
    os << "</g>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace geobeam

#endif
