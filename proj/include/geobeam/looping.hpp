#ifndef GEOBEAM_LOOPING_HPP
#define GEOBEAM_LOOPING_HPP

#include "cover.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace geobeam {

struct TimeInterval {
    double lo = 0.0;
    double hi = 0.0;
};

// For each ordered pair (i, j): the times |u| in [t0, T] at which a cap point of
// tube i returns to the transversal inside the (inflated) cap of tube j.
struct LoopRelation {
    int size = 0;
    double t0 = 0.0;
    double T = 0.0;
    bool backward = false;
    std::map<std::pair<int, int>, std::vector<TimeInterval>> pairs;
    std::map<std::pair<int, int>, double> closest; // smallest landing distance found

    // sampling metadata
    std::string source = "synthetic";
    int seed_count = 0;
    double dt_scan = 0.0;
    double lipschitz = 0.0;
    double dilation = 1.0;      // 1 + L dt_scan
    double margin = 0.0;        // absolute verification margin added to the radius
    double meet_radius = 0.0;   // R * dilation + margin
    double candidate_radius = 0.0;
    int refinements = 0;
    bool partial = false;
    bool from_cache = false;

    void add(int i, int j, double lo, double hi, double dist = 0.0) {
        pairs[{i, j}].push_back({std::min(lo, hi), std::max(lo, hi)});
        auto it = closest.find({i, j});
        if (it == closest.end() || dist < it->second)
            closest[{i, j}] = dist;
    }

    double distance(int i, int j) const {
        auto it = closest.find({i, j});
        return it == closest.end() ? std::numeric_limits<double>::infinity() : it->second;
    }

    // Sorts and merges intervals closer than gap.
    void normalize(double gap = 0.0) {
        for (auto& [k, v] : pairs) {
            std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
            std::vector<TimeInterval> out;
            for (const auto& iv : v) {
                if (!out.empty() && iv.lo - out.back().hi <= gap)
                    out.back().hi = std::max(out.back().hi, iv.hi);
                else
                    out.push_back(iv);
            }
            v = std::move(out);
        }
        for (auto it = pairs.begin(); it != pairs.end();)
            it = it->second.empty() ? pairs.erase(it) : std::next(it);
    }

    bool meets(int i, int j, double lo, double hi) const {
        auto it = pairs.find({i, j});
        if (it == pairs.end())
            return false;
        for (const auto& iv : it->second)
            if (iv.hi >= lo && iv.lo <= hi)
                return true;
        return false;
    }

    std::vector<std::pair<int, int>> edges(double lo, double hi) const {
        std::vector<std::pair<int, int>> out;
        for (const auto& [k, v] : pairs)
            for (const auto& iv : v)
                if (iv.hi >= lo && iv.lo <= hi) {
                    out.push_back(k);
                    break;
                }
        return out;
    }

    std::vector<TimeInterval> intervals(int i, int j) const {
        auto it = pairs.find({i, j});
        return it == pairs.end() ? std::vector<TimeInterval>{} : it->second;
    }

    bool valid() const {
        for (const auto& [k, v] : pairs) {
            for (std::size_t a = 0; a < v.size(); ++a) {
                if (v[a].lo > v[a].hi || v[a].lo < t0 - 1e-12 || v[a].hi > T + 1e-12)
                    return false;
                if (a > 0 && v[a].lo <= v[a - 1].hi)
                    return false;
            }
        }
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["size"] = size;
        j["t0"] = t0;
        j["T"] = T;
        j["backward"] = backward;
        j["source"] = source;
        j["seed_count"] = seed_count;
        j["dt_scan"] = dt_scan;
        j["lipschitz"] = lipschitz;
        j["dilation"] = dilation;
        j["margin"] = margin;
        j["meet_radius"] = meet_radius;
        j["candidate_radius"] = candidate_radius;
        j["refinements"] = refinements;
        j["partial"] = partial;
        nlohmann::json ps = nlohmann::json::array();
        for (const auto& [k, v] : pairs) {
            nlohmann::json iv = nlohmann::json::array();
            for (const auto& x : v)
                iv.push_back({x.lo, x.hi});
            ps.push_back({{"i", k.first}, {"j", k.second}, {"closest", distance(k.first, k.second)}, {"intervals", iv}});
        }
        j["pairs"] = ps;
        return j;
    }

    static LoopRelation from_json(const nlohmann::json& j) {
        LoopRelation r;
        r.size = j.at("size");
        r.t0 = j.at("t0");
        r.T = j.at("T");
        r.backward = j.at("backward");
        r.source = j.value("source", "synthetic");
        r.seed_count = j.value("seed_count", 0);
        r.dt_scan = j.value("dt_scan", 0.0);
        r.lipschitz = j.value("lipschitz", 0.0);
        r.dilation = j.value("dilation", 1.0);
        r.margin = j.value("margin", 0.0);
        r.meet_radius = j.value("meet_radius", 0.0);
        r.candidate_radius = j.value("candidate_radius", 0.0);
        r.refinements = j.value("refinements", 0);
        r.partial = j.value("partial", false);
        for (const auto& p : j.at("pairs"))
            for (const auto& iv : p.at("intervals"))
                r.add(p.at("i"), p.at("j"), iv.at(0), iv.at(1), p.value("closest", 0.0));
        return r;
    }
};

// ---------------------------------------------------------------------------
// Relation from the flow

struct LoopOptions {
    int seed_count = 32;
    bool backward = false;
    int jobs = 1;
    bool refine = true;
    double margin_fraction = 0.1; // verification margin, in units of R
    int lipschitz_samples = 6;
    double merge_gap = 0.05;
    int refine_evals = 80;
    bool use_cache = true;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string cache_dir() {
    const char* d = std::getenv("GEOBEAM_CACHE_DIR");
    return d && *d ? std::string(d) : std::string();
}

inline std::string relation_key(const TubeCover& cv, double t0, double T, const LoopOptions& o) {
    nlohmann::json k;
    k["v"] = 3;
    k["manifold"] = cv.manifold->describe();
    k["x"] = std::vector<double>(cv.x.data(), cv.x.data() + cv.x.size());
    k["chart"] = cv.chart;
    k["tau"] = cv.tau;
    k["R"] = cv.R;
    k["energy"] = cv.energy;
    k["tubes"] = cv.size();
    k["window"] = {t0, T};
    k["backward"] = o.backward;
    k["seeds"] = o.seed_count;
    k["refine"] = o.refine;
    k["margin"] = o.margin_fraction;
    k["lip"] = o.lipschitz_samples;
    k["evals"] = o.refine_evals;
    k["tol"] = {cv.flow.abs_tol, cv.flow.rel_tol, cv.flow.h_max, cv.scan.dt_scan};
    std::ostringstream os;
    os << std::hex << fnv1a(k.dump());
    return os.str();
}

// Minimal Nelder-Mead; stops as soon as f <= target.
template <class F>
std::pair<Eigen::VectorXd, double> nelder_mead(F&& f, Eigen::VectorXd x0, double step, int max_evals,
                                               double target) {
    const int d = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> s{x0};
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd v = x0;
        v[i] += step;
        s.push_back(v);
    }
    std::vector<double> fv;
    int evals = 0;
    for (const auto& v : s) {
        fv.push_back(f(v));
        ++evals;
    }
    auto order = [&] {
        std::vector<int> idx(s.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            idx[i] = static_cast<int>(i);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        std::vector<Eigen::VectorXd> s2;
        std::vector<double> f2;
        for (int i : idx) {
            s2.push_back(s[i]);
            f2.push_back(fv[i]);
        }
        s = s2;
        fv = f2;
    };
    order();
    while (evals < max_evals && fv[0] > target) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i)
            c += s[i];
        c /= d;
        Eigen::VectorXd xr = c + (c - s[d]);
        double fr = f(xr);
        ++evals;
        if (fr < fv[0]) {
            Eigen::VectorXd xe = c + 2.0 * (c - s[d]);
            double fe = f(xe);
            ++evals;
            if (fe < fr) {
                s[d] = xe;
                fv[d] = fe;
            } else {
                s[d] = xr;
                fv[d] = fr;
            }
        } else if (fr < fv[d - 1]) {
            s[d] = xr;
            fv[d] = fr;
        } else {
            Eigen::VectorXd xc = c + 0.5 * (s[d] - c);
            double fc = f(xc);
            ++evals;
            if (fc < fv[d]) {
                s[d] = xc;
                fv[d] = fc;
            } else {
                for (int i = 1; i <= d; ++i) {
                    s[i] = s[0] + 0.5 * (s[i] - s[0]);
                    fv[i] = f(s[i]);
                    ++evals;
                }
            }
        }
        order();
        double spread = 0.0;
        for (int i = 1; i <= d; ++i)
            spread = std::max(spread, (s[i] - s[0]).norm());
        if (spread < 1e-9)
            break;
    }
    return {s[0], fv[0]};
}

struct Meeting {
    int j;
    double t;
    double d;
};

struct Candidate {
    int j;
    double t;
    double d;
    Eigen::VectorXd c;
};

} // namespace detail

// Largest sampled singular value of d(phi_t) over the window, along a few tube centers.
inline double sampled_lipschitz(const TubeCover& cv, double t0, double T, bool backward, int samples) {
    double L = 1.0;
    const int N = cv.size();
    if (N == 0)
        return L;
    samples = std::max(1, std::min(samples, N));
    double s = backward ? -1.0 : 1.0;
    for (int k = 0; k < samples; ++k) {
        int i = static_cast<int>((static_cast<long>(k) * N) / samples);
        VariationalFrame vf = variational(*cv.manifold, cv.tubes[i].center, {s * t0, s * 0.5 * (t0 + T), s * T},
                                          cv.flow);
        for (const auto& M : vf.matrices)
            L = std::max(L, spectral_norm(M));
    }
    return L;
}

inline LoopRelation loop_relation(const TubeCover& cv, double t0, double T, const LoopOptions& o = {}) {
    if (!(0.0 < t0 && t0 < T))
        throw PreconditionError("loop_relation needs 0 < t0 < T");
    const Manifold& m = *cv.manifold;
    LoopRelation rel;
    rel.size = cv.size();
    rel.t0 = t0;
    rel.T = T;
    rel.backward = o.backward;
    rel.source = "flow";
    rel.seed_count = o.seed_count;
    double Tint = T;
    if (T > cv.flow.horizon) {
        rel.partial = true;
        Tint = cv.flow.horizon;
    }

    std::string path;
    if (o.use_cache && !detail::cache_dir().empty()) {
        path = detail::cache_dir() + "/relation-" + detail::relation_key(cv, t0, T, o) + ".json";
        std::ifstream in(path);
        if (in) {
            try {
                LoopRelation r = LoopRelation::from_json(nlohmann::json::parse(in));
                r.from_cache = true;
                return r;
            } catch (const std::exception&) {
                // stale or truncated entry: recompute
            }
        }
    }

    const double R = cv.R;
    rel.dt_scan = cv.scan.dt_scan;
    rel.lipschitz = sampled_lipschitz(cv, t0, std::min(T, Tint), o.backward, o.lipschitz_samples);
    rel.dilation = 1.0 + rel.lipschitz * rel.dt_scan;
    rel.margin = o.margin_fraction * R;
    rel.meet_radius = R * rel.dilation + rel.margin;
    const int d = 2 * (m.dim() - 1);
    std::vector<Eigen::VectorXd> pat = ball_pattern(d, o.seed_count, R);
    const double h_seed = pattern_covering_radius(pat, R);
    rel.candidate_radius = rel.meet_radius + 2.0 * rel.lipschitz * h_seed;
    const double Rm = rel.meet_radius, Rc = rel.candidate_radius;
    const double sgn = o.backward ? -1.0 : 1.0;
    const Transversal F(m, cv.x, cv.chart);
    const double wlo = o.backward ? -std::min(T, Tint) : t0, whi = o.backward ? -t0 : std::min(T, Tint);

    std::vector<std::vector<detail::Meeting>> found(cv.tubes.size());
    std::vector<int> refined(cv.tubes.size(), 0);
    std::vector<char> partial(cv.tubes.size(), 0);

    parallel_for(cv.tubes.size(), o.jobs, [&](std::size_t i) {
        CapChart cap(m, cv.tubes[i].center, cv.energy);
        std::vector<detail::Meeting> meet;
        std::vector<detail::Candidate> cand;
        for (const auto& c : pat) {
            PhasePoint p = cap.point(c);
            std::vector<CrossingEvent> evs;
            try {
                evs = transversal_crossings(m, cv.x, cv.chart, p, t0, std::min(T, Tint), cv.flow, cv.scan,
                                            o.backward);
            } catch (const IntegrationError&) {
                partial[i] = 1;
                continue;
            }
            for (const auto& ev : evs) {
                if (ev.base_distance > Rc)
                    continue;
                for (int j : cv.index.query(ev.point.xi, Rc + 1e-12)) {
                    double dist = sasaki_distance(m, ev.point, cv.tubes[j].center).value;
                    double u = std::abs(ev.t);
                    if (dist <= Rm)
                        meet.push_back({j, u, dist});
                    else if (dist <= Rc)
                        cand.push_back({j, u, dist, c});
                }
            }
        }
        if (o.refine && !cand.empty()) {
            std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
                return a.j != b.j ? a.j < b.j : (a.t != b.t ? a.t < b.t : a.d < b.d);
            });
            // one refinement per (j, time cluster), started from the closest seed
            std::size_t a = 0;
            while (a < cand.size()) {
                std::size_t b = a + 1;
                while (b < cand.size() && cand[b].j == cand[a].j && cand[b].t - cand[b - 1].t <= o.merge_gap)
                    ++b;
                std::size_t best = a;
                for (std::size_t k = a; k < b; ++k)
                    if (cand[k].d < cand[best].d)
                        best = k;
                const int j = cand[a].j;
                const double tref = cand[best].t;
                bool known = false;
                for (const auto& mt : meet)
                    if (mt.j == j && std::abs(mt.t - tref) <= o.merge_gap)
                        known = true;
                if (!known) {
                    const double delta = 0.05 + 4.0 * R;
                    const double lo = std::max(t0, tref - delta), hi = std::min(std::min(T, Tint), tref + delta);
                    double t_hit = tref;
                    auto landing = [&](const Eigen::VectorXd& w) {
                        double wn = w.norm();
                        Eigen::VectorXd c = wn > 0 ? Eigen::VectorXd(w * (R * std::tanh(wn) / wn))
                                                   : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
                        double bestd = std::numeric_limits<double>::infinity(), bestdt = 1e300, bt = tref;
                        try {
                            PhasePoint p = cap.point(c);
                            CrossingScanner sc(F, hamiltonian(m, p), o.backward ? -hi : lo, o.backward ? -lo : hi,
                                               cv.scan);
                            flow_segments(m, p, sgn * hi, cv.flow, [&](const PhaseSegment& s) {
                                sc.feed(s, [&](const CrossingEvent& ev) {
                                    double u = std::abs(ev.t);
                                    if (std::abs(u - tref) < bestdt) {
                                        bestdt = std::abs(u - tref);
                                        bestd = sasaki_distance(m, ev.point, cv.tubes[j].center).value;
                                        bt = u;
                                    }
                                });
                                return true;
                            });
                        } catch (const std::exception&) {
                            return 1e3 * R;
                        }
                        if (bestd <= Rm)
                            t_hit = bt;
                        return std::isfinite(bestd) ? bestd : 1e3 * R;
                    };
                    Eigen::VectorXd c0 = cand[best].c;
                    double cn = c0.norm();
                    Eigen::VectorXd w0 = cn > 0 ? Eigen::VectorXd(c0 * (std::atanh(std::min(cn / R, 0.995)) / cn))
                                                : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
                    auto [wbest, fbest] = detail::nelder_mead(landing, w0, 0.3, o.refine_evals, Rm);
                    (void)wbest;
                    ++refined[i];
                    if (fbest <= Rm)
                        meet.push_back({j, t_hit, fbest});
                }
                a = b;
            }
        }
        found[i] = std::move(meet);
    });

    for (std::size_t i = 0; i < found.size(); ++i) {
        rel.refinements += refined[i];
        if (partial[i])
            rel.partial = true;
        for (const auto& mt : found[i])
            rel.add(static_cast<int>(i), mt.j, mt.t, mt.t, mt.d);
    }
    rel.normalize(o.merge_gap);

    if (!path.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(detail::cache_dir(), ec);
        std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp);
            out << rel.to_json().dump();
        }
        std::filesystem::rename(tmp, path, ec);
    }
    return rel;
}

// Symmetry check between a forward and a backward relation on the same window.
// A pair meeting at the core radius R (landing distance <= core) maps a cap point
// of i onto a cap point of j, so the reversed flow must show (j, i) around the same
// time. Pairs found only through the inflated radius are not required to match.
struct SymmetryReport {
    int checked = 0;
    int core = 0;
    int mismatches = 0;
    std::vector<std::pair<int, int>> witnesses;
};

inline SymmetryReport symmetric_consistency(const LoopRelation& fwd, const LoopRelation& bwd, double core,
                                            int pairs = 100, std::uint64_t seed = 3, double tol = 0.1) {
    SymmetryReport rep;
    std::vector<std::pair<int, int>> keys;
    for (const auto& [k, v] : fwd.pairs)
        keys.push_back(k);
    for (const auto& [k, v] : bwd.pairs)
        keys.emplace_back(k.second, k.first);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    std::mt19937_64 rng(seed);
    std::shuffle(keys.begin(), keys.end(), rng);
    if (static_cast<int>(keys.size()) > pairs)
        keys.resize(pairs);
    auto covered = [&](const std::vector<TimeInterval>& a, const std::vector<TimeInterval>& b) {
        for (const auto& x : a) {
            bool hit = false;
            for (const auto& y : b)
                if (y.hi >= x.lo - tol && y.lo <= x.hi + tol)
                    hit = true;
            if (!hit)
                return false;
        }
        return true;
    };
    for (const auto& [i, j] : keys) {
        auto a = fwd.intervals(i, j), b = bwd.intervals(j, i);
        ++rep.checked;
        bool fc = fwd.distance(i, j) <= core, bc = bwd.distance(j, i) <= core;
        if (fc || bc)
            ++rep.core;
        if ((fc && !covered(a, b)) || (bc && !covered(b, a))) {
            ++rep.mismatches;
            rep.witnesses.emplace_back(i, j);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Partitions

struct GoodFamily {
    std::vector<int> tubes;
    double t = 0.0;
    double T = 0.0;
};

struct LoopPartition {
    int size = 0;
    std::vector<int> bad;
    std::vector<GoodFamily> good;
    std::string provenance = "single-stage";
    bool backward = false;
    nlohmann::json verification = nlohmann::json::object();

    bool covers_all() const {
        std::vector<char> seen(static_cast<std::size_t>(size), 0);
        for (int b : bad)
            seen[b] = 1;
        for (const auto& g : good)
            for (int i : g.tubes)
                seen[i] = 1;
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    }

    // class label per tube: -1 bad, otherwise family index
    std::vector<int> labels() const {
        std::vector<int> out(static_cast<std::size_t>(size), -1);
        for (std::size_t l = 0; l < good.size(); ++l)
            for (int i : good[l].tubes)
                out[i] = static_cast<int>(l);
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["size"] = size;
        j["provenance"] = provenance;
        j["backward"] = backward;
        j["bad"] = bad;
        j["bad_count"] = bad.size();
        nlohmann::json fams = nlohmann::json::array();
        for (const auto& g : good)
            fams.push_back({{"t", g.t}, {"T", g.T}, {"count", g.tubes.size()}, {"tubes", g.tubes}});
        j["good"] = fams;
        j["verification"] = verification;
        return j;
    }
};

// Self-loopers first, then repeatedly the tube with the most distinct live
// neighbours (lowest index on ties), until no edge is left.
inline std::vector<int> removal_bad_set(int N, const std::vector<std::pair<int, int>>& edges) {
    std::vector<char> bad(static_cast<std::size_t>(N), 0);
    std::vector<std::set<int>> nb(static_cast<std::size_t>(N));
    for (const auto& [i, j] : edges) {
        if (i == j)
            bad[i] = 1;
        else {
            nb[i].insert(j);
            nb[j].insert(i);
        }
    }
    for (;;) {
        int best = -1;
        std::size_t deg = 0;
        for (int i = 0; i < N; ++i) {
            if (bad[i])
                continue;
            std::size_t d = 0;
            for (int j : nb[i])
                if (!bad[j])
                    ++d;
            if (d > deg) {
                deg = d;
                best = i;
            }
        }
        if (best < 0)
            break;
        bad[best] = 1;
    }
    std::vector<int> out;
    for (int i = 0; i < N; ++i)
        if (bad[i])
            out.push_back(i);
    return out;
}

namespace detail {

inline LoopPartition single_from(const LoopRelation& rel) {
    LoopPartition p;
    p.size = rel.size;
    p.backward = rel.backward;
    p.bad = removal_bad_set(rel.size, rel.edges(rel.t0, rel.T));
    GoodFamily g;
    g.t = rel.t0;
    g.T = rel.T;
    std::vector<char> isbad(static_cast<std::size_t>(rel.size), 0);
    for (int b : p.bad)
        isbad[b] = 1;
    for (int i = 0; i < rel.size; ++i)
        if (!isbad[i])
            g.tubes.push_back(i);
    if (!g.tubes.empty())
        p.good.push_back(std::move(g));
    return p;
}

} // namespace detail

// Forward relation, optionally the backward one; the smaller bad set wins (forward on ties).
inline LoopPartition classify_single(const LoopRelation& fwd, const LoopRelation* bwd = nullptr) {
    LoopPartition p = detail::single_from(fwd);
    if (bwd) {
        if (bwd->size != fwd.size || bwd->t0 != fwd.t0 || bwd->T != fwd.T)
            throw PreconditionError("forward and backward relations differ in size or window");
        LoopPartition q = detail::single_from(*bwd);
        if (q.bad.size() < p.bad.size())
            p = std::move(q);
    }
    p.provenance = "single-stage";
    return p;
}

enum class LoopSense { sender, receiver };

// Shrinking windows T_l = exp(-C l / 2) T. Each stage keeps in A the tubes that
// still loop into A (sender) or are reached from A (receiver) within [t0, T_l].
inline LoopPartition classify_iterative(const LoopRelation& rel, double C, LoopSense sense = LoopSense::sender,
                                        const LoopRelation* bwd = nullptr) {
    if (!(C > 0.0))
        throw PreconditionError("contraction constant must be positive");
    auto run = [&](const LoopRelation& r) {
        LoopPartition p;
        p.size = r.size;
        p.backward = r.backward;
        p.provenance = "iterative";
        const int lmax = std::max(1, static_cast<int>(std::ceil(std::log(r.T))));
        std::vector<char> inA(static_cast<std::size_t>(r.size), 1);
        for (int l = 1; l <= lmax; ++l) {
            double Tw = std::exp(-C * (l - 1) / 2.0) * r.T;
            if (Tw < r.t0)
                break;
            std::vector<char> next(static_cast<std::size_t>(r.size), 0);
            for (const auto& [i, j] : r.edges(r.t0, Tw)) {
                if (!inA[i] || !inA[j])
                    continue;
                next[sense == LoopSense::sender ? i : j] = 1;
            }
            GoodFamily g;
            g.t = r.t0;
            g.T = Tw;
            for (int i = 0; i < r.size; ++i)
                if (inA[i] && !next[i])
                    g.tubes.push_back(i);
            if (!g.tubes.empty())
                p.good.push_back(std::move(g));
            inA = next;
        }
        for (int i = 0; i < r.size; ++i)
            if (inA[i])
                p.bad.push_back(i);
        return p;
    };
    LoopPartition p = run(rel);
    if (bwd) {
        LoopPartition q = run(*bwd);
        if (q.bad.size() < p.bad.size())
            p = std::move(q);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Sampled verification of good families

struct FamilyCheck {
    int family = 0;
    int tubes = 0;
    long seeds = 0;
    long crossings = 0;
    long violations = 0;
    double closest = std::numeric_limits<double>::infinity();
    std::vector<std::pair<int, int>> witnesses; // (from, to)

    nlohmann::json to_json() const {
        nlohmann::json w = nlohmann::json::array();
        for (const auto& [a, b] : witnesses)
            w.push_back({a, b});
        return {{"family", family},
                {"tubes", tubes},
                {"seeds", seeds},
                {"crossings", crossings},
                {"violations", violations},
                {"closest", std::isfinite(closest) ? nlohmann::json(closest) : nlohmann::json(nullptr)},
                {"witnesses", w}};
    }
};

struct VerifyOptions {
    int seeds_per_tube = 1000;
    int times = 200;
    double margin_fraction = 0.1;
    std::uint64_t seed = 11;
    int jobs = 1;
};

// Random cap seeds of every family tube, flowed over the family window; a return
// within R(1 + margin) of any family center is a violation.
inline FamilyCheck verify_family(const TubeCover& cv, const GoodFamily& fam, bool backward, const VerifyOptions& vo,
                                 int family_index = 0) {
    FamilyCheck fc;
    fc.family = family_index;
    fc.tubes = static_cast<int>(fam.tubes.size());
    if (fam.tubes.empty())
        return fc;
    const Manifold& m = *cv.manifold;
    const double R = cv.R, rad = R * (1.0 + vo.margin_fraction);
    std::vector<char> member(cv.tubes.size(), 0);
    for (int i : fam.tubes)
        member[i] = 1;
    ScanOptions so = cv.scan;
    if (fam.T > fam.t)
        so.dt_scan = std::min(so.dt_scan, (fam.T - fam.t) / vo.times);
    const int d = 2 * (m.dim() - 1);
    const double lo = std::max(fam.t, 1e-12), hi = std::max(fam.T, lo * (1.0 + 1e-12) + 1e-12);
    struct Out {
        long seeds = 0, crossings = 0, violations = 0;
        double closest = std::numeric_limits<double>::infinity();
        std::vector<std::pair<int, int>> w;
    };
    std::vector<Out> outs(fam.tubes.size());
    parallel_for(fam.tubes.size(), vo.jobs, [&](std::size_t k) {
        const int i = fam.tubes[k];
        Out& o = outs[k];
        std::mt19937_64 rng(vo.seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(i + 1)));
        CapChart cap(m, cv.tubes[i].center, cv.energy);
        for (int s = 0; s < vo.seeds_per_tube; ++s) {
            PhasePoint p = cap.point(random_ball_point(rng, d, R));
            ++o.seeds;
            for (const auto& ev : transversal_crossings(m, cv.x, cv.chart, p, lo, hi, cv.flow, so, backward)) {
                ++o.crossings;
                if (ev.base_distance > 2.0 * rad)
                    continue;
                for (int j : cv.index.query(ev.point.xi, 2.0 * rad)) {
                    if (!member[j])
                        continue;
                    double dist = sasaki_distance(m, ev.point, cv.tubes[j].center).value;
                    o.closest = std::min(o.closest, dist);
                    if (dist <= rad) {
                        ++o.violations;
                        if (o.w.size() < 5)
                            o.w.emplace_back(i, j);
                    }
                }
            }
        }
    });
    for (const auto& o : outs) {
        fc.seeds += o.seeds;
        fc.crossings += o.crossings;
        fc.violations += o.violations;
        fc.closest = std::min(fc.closest, o.closest);
        for (const auto& w : o.w)
            if (fc.witnesses.size() < 10)
                fc.witnesses.push_back(w);
    }
    return fc;
}

inline std::vector<FamilyCheck> verify_partition(const TubeCover& cv, LoopPartition& p, const VerifyOptions& vo) {
    std::vector<FamilyCheck> out;
    nlohmann::json arr = nlohmann::json::array();
    long viol = 0;
    for (std::size_t l = 0; l < p.good.size(); ++l) {
        out.push_back(verify_family(cv, p.good[l], p.backward, vo, static_cast<int>(l)));
        arr.push_back(out.back().to_json());
        viol += out.back().violations;
    }
    p.verification = {{"seeds_per_tube", vo.seeds_per_tube},
                      {"times", vo.times},
                      {"margin_fraction", vo.margin_fraction},
                      {"seed", vo.seed},
                      {"families", arr},
                      {"violations", viol},
                      {"pass", viol == 0}};
    return out;
}

// ---------------------------------------------------------------------------
// Padding radius of a closed fiber subset

struct FiberSubset {
    std::vector<PhasePoint> directions;
    std::vector<double> radii; // Sasaki radius on the fiber around each direction
};

struct PadResult {
    double radius = 0.0;
    bool failed = false;
    int level = 0; // R = R0 / 2^level
};

namespace detail {

// Distance from a fiber point to the subset (fiber chord metric).
inline double subset_distance(const Manifold& m, const FiberSubset& G, const PhasePoint& q) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < G.directions.size(); ++k) {
        double dist = sasaki_distance(m, q, G.directions[k]).value;
        best = std::min(best, std::max(0.0, dist - G.radii[k]));
    }
    return best;
}

inline bool pad_ok(const Manifold& m, const Vec& x, int chart, const FiberSubset& G, double t, double T, double R,
                   int seeds, const FlowOptions& fo) {
    const int d = 2 * (m.dim() - 1);
    std::vector<Eigen::VectorXd> pat = ball_pattern(d, seeds, R);
    ScanOptions so;
    so.dt_scan = std::min(0.01, R / 4.0);
    const double lo = std::max(t - 2.0 * R, 1e-6), hi = T + 2.0 * R;
    std::mt19937_64 rng(29);
    for (std::size_t k = 0; k < G.directions.size(); ++k) {
        // fiber points spread over the direction's ball
        std::vector<PhasePoint> base{G.directions[k]};
        if (G.radii[k] > 0.0) {
            CapChart fc(m, G.directions[k]);
            for (int s = 0; s < 8; ++s) {
                Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
                Eigen::VectorXd q = random_ball_point(rng, d / 2, G.radii[k]);
                c.tail(d / 2) = q;
                base.push_back(fc.point(c));
            }
        }
        for (const auto& b : base) {
            CapChart cap(m, b);
            for (const auto& c : pat) {
                PhasePoint p = cap.point(c);
                for (const auto& ev : transversal_crossings(m, x, chart, p, lo, hi, fo, so))
                    if (ev.base_distance <= R + R / 10.0 && subset_distance(m, G, ev.point) <= R + R / 10.0)
                        return false;
            }
        }
    }
    return true;
}

} // namespace detail

inline PadResult pad_radius(const Manifold& m, const Vec& x, int chart, const FiberSubset& G, double t, double T,
                            double R0 = 0.2, int seeds = 16, const FlowOptions& fo = {}) {
    if (!(0.0 < t && t <= T))
        throw PreconditionError("pad_radius needs 0 < t <= T");
    if (G.directions.size() != G.radii.size())
        throw PreconditionError("pad_radius needs one radius per direction");
    PadResult res;
    if (G.directions.empty()) {
        res.radius = R0;
        return res;
    }
    auto ok = [&](int k) { return detail::pad_ok(m, x, chart, G, t, T, R0 / std::ldexp(1.0, k), seeds, fo); };
    if (!ok(10)) {
        res.failed = true;
        res.level = 10;
        return res;
    }
    int lo = -1, hi = 10; // ok(hi) holds
    if (ok(0))
        hi = 0;
    else {
        lo = 0;
        while (hi - lo > 1) {
            int mid = (lo + hi) / 2;
            if (ok(mid))
                hi = mid;
            else
                lo = mid;
        }
    }
    res.level = hi;
    res.radius = R0 / std::ldexp(1.0, hi);
    return res;
}

// ---------------------------------------------------------------------------
// Cover predicates

struct CoverPredicates {
    bool nonlooping_ok = false;
    bool nonrecurrent_ok = false;
    double nonlooping_lhs = 0.0, nonlooping_rhs = 0.0;
    double nonrecurrent_lhs = 0.0, nonrecurrent_rhs = 0.0;
    double nonlooping_slack() const { return nonlooping_rhs - nonlooping_lhs; }
    double nonrecurrent_slack() const { return nonrecurrent_rhs - nonrecurrent_lhs; }
};

inline bool leq_tol(double a, double b) { return a <= b + 1e-12 * std::max(std::abs(a), std::abs(b)); }

inline CoverPredicates cover_predicates(std::size_t bad_count, const std::vector<GoodFamily>& good, double R, double T,
                                        int n) {
    CoverPredicates c;
    c.nonlooping_lhs = static_cast<double>(bad_count);
    c.nonlooping_rhs = std::pow(R, 1.0 - n) / T;
    for (const auto& g : good)
        c.nonrecurrent_lhs += std::sqrt(static_cast<double>(g.tubes.size())) * std::sqrt(g.t) / std::sqrt(g.T);
    c.nonrecurrent_rhs = std::pow(R, (1.0 - n) / 2.0) / std::sqrt(T);
    c.nonlooping_ok = leq_tol(c.nonlooping_lhs, c.nonlooping_rhs);
    c.nonrecurrent_ok = leq_tol(c.nonrecurrent_lhs, c.nonrecurrent_rhs);
    return c;
}

inline CoverPredicates cover_predicates(const LoopPartition& p, double R, double T, int n) {
    return cover_predicates(p.bad.size(), p.good, R, T, n);
}

} // namespace geobeam

#endif
