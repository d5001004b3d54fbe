#ifndef GEOBEAM_PIPELINE_HPP
#define GEOBEAM_PIPELINE_HPP

// Config-driven pipelines behind the command line verbs. Each verb returns its
// artifacts in memory; writing them is left to the caller.

#include "bound.hpp"
#include "config.hpp"
#include "conjugate.hpp"
#include "io.hpp"
#include "looping.hpp"
#include "manifolds.hpp"
#include "oracles.hpp"
#include "profiles.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace geobeam {

// A verification record came back negative (exit code 3).
struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunResult {
    nlohmann::json report;
    std::string tubes_csv;
    nlohmann::json relation; // null when not produced
    std::string svg;
    std::string sweep_csv;
    int exit_code = 0;
};

struct Setup {
    nlohmann::json cfg;
    ManifoldPtr manifold;
    Vec x;
    int chart = 0;
    double tau = 0.0;
    double R = 0.0;
    double t0 = 0.0;
    double T = 0.0;
    FlowOptions flow;
    int jobs = 1;
};

namespace detail {

inline bool unit_torus2(const nlohmann::json& cfg) {
    if (cfg["manifold"]["kind"] != "flat-torus" || cfg["manifold"]["dim"] != 2)
        return false;
    for (const auto& p : cfg["manifold"]["periods"])
        if (p.get<double>() != 1.0)
            return false;
    return true;
}

inline nlohmann::json cover_summary(const TubeCover& cv) {
    nlohmann::json j = cv.to_json();
    j.erase("tubes");
    j["tube_count"] = cv.size();
    return j;
}

} // namespace detail

inline ManifoldPtr make_manifold(const nlohmann::json& cfg) {
    const auto& mc = cfg["manifold"];
    const std::string kind = mc["kind"];
    const int dim = mc["dim"];
    if (kind == "flat-torus") {
        std::vector<double> per = mc["periods"].get<std::vector<double>>();
        if (per.empty())
            return FlatTorus::unit(dim);
        if (static_cast<int>(per.size()) != dim)
            throw ConfigError("manifold.periods", "manifold.periods must have manifold.dim entries");
        return std::make_shared<FlatTorus>(per);
    }
    if (kind == "round-sphere")
        return std::make_shared<RoundSphere>(dim);
    if (kind == "pendulum")
        return SurfaceOfRevolution::pendulum(mc["energy"].get<double>());
    if (kind == "polar-sphere")
        return SurfaceOfRevolution::polar_sphere();
    if (kind == "revolution") {
        std::string a = mc["profile_csv"], v = mc["potential_csv"];
        if (a.empty())
            throw ConfigError("manifold.profile_csv", "kind revolution needs manifold.profile_csv");
        ProfilePtr pot = v.empty() ? nullptr : ProfilePtr(SplineProfile::from_csv(v));
        return std::make_shared<SurfaceOfRevolution>(SplineProfile::from_csv(a), pot);
    }
    if (kind == "sphere-circle")
        return std::make_shared<ProductManifold>(std::make_shared<RoundSphere>(2), FlatTorus::unit(1));
    if (kind == "ellipsoid") {
        auto ax = mc["axes"].get<std::vector<double>>();
        if (ax.size() != 3)
            throw ConfigError("manifold.axes", "manifold.axes needs three semi-axes");
        return std::make_shared<TriaxialEllipsoid>(ax[0], ax[1], ax[2]);
    }
    throw ConfigError("manifold.kind", "unknown manifold kind " + kind);
}

inline Vec default_base_point(const std::string& kind, int dim) {
    Vec x = Vec::Zero(dim);
    if (kind == "pendulum" || kind == "polar-sphere" || kind == "revolution")
        x << std::numbers::pi / 2.0, 0.0;
    else if (kind == "ellipsoid")
        x << 1.2, 0.4;
    return x;
}

inline Setup make_setup(const nlohmann::json& cfg, int jobs) {
    Setup s;
    s.cfg = cfg;
    s.jobs = jobs;
    s.manifold = make_manifold(cfg);
    const int n = s.manifold->dim();
    auto xv = cfg["base_point"]["x"].get<std::vector<double>>();
    if (xv.empty())
        s.x = default_base_point(cfg["manifold"]["kind"], n);
    else {
        if (static_cast<int>(xv.size()) != n)
            throw ConfigError("base_point.x", "base_point.x must have one coordinate per dimension");
        s.x = Vec::Map(xv.data(), n);
    }
    s.chart = cfg["base_point"]["chart"];
    if (s.chart < 0 || s.chart >= s.manifold->chart_count())
        throw ConfigError("base_point.chart", "base_point.chart out of range");
    if (!s.manifold->in_domain(s.x, s.chart))
        throw ConfigError("base_point.x", "base point outside the chart domain");

    const auto& cc = cfg["cover"];
    s.tau = cc["tau"];
    const std::string rr = cc["R_rule"];
    if (rr == "fixed")
        s.R = cc["R"];
    else if (rr == "power")
        s.R = cc["R_c"].get<double>() * std::pow(cc["h"].get<double>(), cc["delta"].get<double>());
    else
        throw ConfigError("cover.R_rule", "cover.R_rule must be fixed or power");

    const auto& kc = cfg["classify"];
    s.t0 = kc["t0"];
    const std::string tr = kc["T_rule"];
    if (tr == "fixed")
        s.T = kc["T"];
    else if (tr == "power")
        s.T = kc["T_c"].get<double>() * std::pow(s.R, kc["T_exponent"].get<double>());
    else
        throw ConfigError("classify.T_rule", "classify.T_rule must be fixed or power");
    if (!(s.t0 > 0.0 && s.t0 < s.T))
        throw ConfigError("classify.t0", "need 0 < classify.t0 < T");

    const auto& fc = cfg["flow"];
    s.flow.abs_tol = fc["abs_tol"];
    s.flow.rel_tol = fc["rel_tol"];
    s.flow.h_max = fc["h_max"];
    s.flow.horizon = fc["horizon"];
    return s;
}

inline TubeCover run_cover(const Setup& s) {
    const auto& cc = s.cfg["cover"];
    CoverOptions co;
    co.R0 = cc["R0"];
    co.tau0 = cc["tau0"];
    co.coverage_samples = cc["coverage_samples"];
    co.verify = cc["verify"];
    co.seed = s.cfg["seeds"]["cover"].get<std::uint64_t>();
    co.jobs = s.jobs;
    co.flow = s.flow;
    return build_good_cover(*s.manifold, s.x, s.chart, s.tau, s.R, co);
}

struct Classification {
    LoopPartition partition;
    std::optional<LoopRelation> forward, backward;
    std::vector<LatticeDirection> directions;
    std::set<int> disagreements;
    nlohmann::json record;
    bool verified = true;
};

inline VerifyOptions verify_options(const Setup& s) {
    const auto& kc = s.cfg["classify"];
    VerifyOptions vo;
    vo.seeds_per_tube = kc["verify_seeds"];
    vo.times = kc["verify_times"];
    vo.margin_fraction = kc["margin"];
    vo.seed = s.cfg["seeds"]["verify"].get<std::uint64_t>();
    vo.jobs = s.jobs;
    return vo;
}

inline Classification run_classify(const Setup& s, const TubeCover& cv) {
    const auto& kc = s.cfg["classify"];
    const std::string mode = kc["mode"];
    Classification c;
    nlohmann::json& rec = c.record;
    rec["mode"] = mode;
    rec["t0"] = s.t0;
    rec["T"] = s.T;
    const VerifyOptions vo = verify_options(s);
    const bool torus = detail::unit_torus2(s.cfg);
    bool verify_here = vo.seeds_per_tube > 0;

    if (mode == "single" || mode == "iterative") {
        LoopOptions lo;
        lo.seed_count = kc["seeds"];
        lo.margin_fraction = kc["margin"];
        lo.jobs = s.jobs;
        c.forward = loop_relation(cv, s.t0, s.T, lo);
        if (kc["backward"].get<bool>()) {
            LoopOptions bo = lo;
            bo.backward = true;
            c.backward = loop_relation(cv, s.t0, s.T, bo);
            SymmetryReport sym = symmetric_consistency(*c.forward, *c.backward, cv.R);
            nlohmann::json w = nlohmann::json::array();
            for (const auto& [a, b] : sym.witnesses)
                w.push_back({a, b});
            rec["symmetry"] = {{"checked", sym.checked}, {"core", sym.core}, {"mismatches", sym.mismatches},
                               {"witnesses", w}};
        }
        const LoopRelation* bw = c.backward ? &*c.backward : nullptr;
        if (mode == "single")
            c.partition = classify_single(*c.forward, bw);
        else {
            const std::string sense = kc["sense"];
            if (sense != "sender" && sense != "receiver")
                throw ConfigError("classify.sense", "classify.sense must be sender or receiver");
            c.partition = classify_iterative(*c.forward, kc["contraction"].get<double>(),
                                             sense == "sender" ? LoopSense::sender : LoopSense::receiver, bw);
        }
        rec["relation"] = {{"pairs", c.forward->pairs.size()},
                           {"lipschitz", c.forward->lipschitz},
                           {"meet_radius", c.forward->meet_radius},
                           {"candidate_radius", c.forward->candidate_radius},
                           {"refinements", c.forward->refinements},
                           {"partial", c.forward->partial}};
        if (torus && kc["oracle_check"].get<bool>()) {
            TorusOracle o = torus_oracle(cv, s.t0, s.T, c.forward->meet_radius);
            c.directions = o.directions;
            std::set<int> a(c.partition.bad.begin(), c.partition.bad.end()),
                b(o.partition.bad.begin(), o.partition.bad.end());
            for (int i : a)
                if (!b.count(i))
                    c.disagreements.insert(i);
            for (int i : b)
                if (!a.count(i))
                    c.disagreements.insert(i);
            nlohmann::json dirs = nlohmann::json::array();
            for (const auto& d : o.directions)
                dirs.push_back({{"p", d.p}, {"q", d.q}, {"k", d.k}, {"return_time", d.return_time}});
            rec["oracle"] = {{"bad_count", o.partition.bad.size()},
                             {"direction_count", o.directions.size()},
                             {"directions", dirs},
                             {"pairs", o.relation.pairs.size()},
                             {"applies_to", mode == "single" ? "single-stage" : "reference only"},
                             {"agree", c.disagreements.empty()},
                             {"disagreements", std::vector<int>(c.disagreements.begin(), c.disagreements.end())}};
            if (mode != "single")
                c.disagreements.clear();
        }
    } else if (mode == "torus-oracle") {
        if (!torus)
            throw ConfigError("classify.mode", "torus-oracle needs the unit flat 2-torus");
        TorusOracle o = torus_oracle(cv, s.t0, s.T, cv.R * (1.0 + kc["margin"].get<double>()));
        c.partition = o.partition;
        c.forward = o.relation;
        c.directions = o.directions;
        rec["oracle"] = {{"bad_count", o.partition.bad.size()}, {"direction_count", o.directions.size()}};
    } else if (mode == "revolution") {
        RevolutionOptions ro;
        ro.t0 = s.t0;
        ro.width_constant = kc["width_constant"];
        ro.singular_constant = kc["singular_constant"];
        ro.validate = verify_here;
        ro.verify = vo;
        RevolutionResult res = revolution_bad_set(cv, s.T, kc["alpha1"].get<double>(), ro);
        c.partition = res.partition;
        rec["revolution"] = res.to_json();
        verify_here = false;
        c.verified = res.validated;
    } else {
        throw ConfigError("classify.mode", "unknown classify.mode " + mode);
    }

    if (verify_here) {
        auto checks = verify_partition(cv, c.partition, vo);
        for (const auto& ch : checks)
            if (ch.violations > 0)
                c.verified = false;
    } else if (c.partition.verification.empty()) {
        c.partition.verification = {{"skipped", true}};
    }
    rec["partition"] = c.partition.to_json();
    auto pred = cover_predicates(c.partition, cv.R, s.T, cv.manifold->dim());
    rec["predicates"] = {{"nonlooping", pred.nonlooping_ok},
                         {"nonlooping_lhs", pred.nonlooping_lhs},
                         {"nonlooping_rhs", pred.nonlooping_rhs},
                         {"nonrecurrent", pred.nonrecurrent_ok},
                         {"nonrecurrent_lhs", pred.nonrecurrent_lhs},
                         {"nonrecurrent_rhs", pred.nonrecurrent_rhs}};
    rec["verified"] = c.verified;
    return c;
}

inline LambdaMaxResult run_lambda(const Setup& s) {
    const auto& bc = s.cfg["bound"];
    return lambda_max(*s.manifold, bc["lambda_samples"], bc["lambda_probe"], bc["lambda_floor"],
                      s.cfg["seeds"]["lambda"].get<std::uint64_t>(), s.flow);
}

inline BoundCertificate run_certificate(const Setup& s, const TubeCover& cv, const LoopPartition& p,
                                        const LambdaMaxResult& lam) {
    const auto& cc = s.cfg["cover"];
    std::optional<double> alpha;
    if (!s.cfg["bound"]["alpha"].is_null())
        alpha = s.cfg["bound"]["alpha"].get<double>();
    return certificate(bound_inputs(p, cv.manifold->dim(), cc["h"], cc["delta"], cv.tau, cv.R, cv.colors, lam.value,
                                    lam.replaced_zero, alpha));
}

inline nlohmann::json lambda_json(const LambdaMaxResult& l) {
    return {{"value", l.value}, {"raw", l.raw}, {"floored", l.replaced_zero}, {"t_probe", l.t_probe}};
}

inline nlohmann::json relation_json(const Classification& c) {
    nlohmann::json j;
    j["forward"] = c.forward ? c.forward->to_json() : nlohmann::json(nullptr);
    j["backward"] = c.backward ? c.backward->to_json() : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json base_report(const std::string& verb, const Setup& s) {
    nlohmann::json r;
    r["verb"] = verb;
    r["config"] = s.cfg;
    r["derived"] = {{"n", s.manifold->dim()},
                    {"x", std::vector<double>(s.x.data(), s.x.data() + s.x.size())},
                    {"tau", s.tau},
                    {"R", s.R},
                    {"t0", s.t0},
                    {"T", s.T},
                    {"manifold", s.manifold->describe()}};
    return r;
}

// verb: cover | classify | certify | figure
inline RunResult run_pipeline(const std::string& verb, const nlohmann::json& cfg, int jobs) {
    Setup s = make_setup(cfg, jobs);
    RunResult out;
    out.report = base_report(verb, s);
    TubeCover cv = run_cover(s);
    out.report["cover"] = detail::cover_summary(cv);
    if (verb == "cover") {
        out.tubes_csv = tubes_csv(cv);
        out.report["status"] = "ok";
        return out;
    }
    Classification c = run_classify(s, cv);
    out.report["classification"] = c.record;
    const LoopRelation* rel = c.forward ? &*c.forward : nullptr;
    out.tubes_csv = tubes_csv(cv, &c.partition, rel);
    if (c.forward)
        out.relation = relation_json(c);
    bool ok = c.verified && c.disagreements.empty();
    if (verb == "certify") {
        LambdaMaxResult lam = run_lambda(s);
        out.report["lambda_max"] = lambda_json(lam);
        out.report["certificate"] = run_certificate(s, cv, c.partition, lam).to_json();
    }
    if (verb == "figure" || cfg["output"]["svg"].get<bool>()) {
        if (cv.manifold->dim() != 2)
            throw PreconditionError("fiber.svg is only supported for n = 2");
        SvgOptions so;
        so.t0 = s.t0;
        so.T = s.T;
        so.lattice = cfg["output"]["lattice"].get<bool>() && detail::unit_torus2(cfg);
        so.directions = c.directions;
        so.disagreements = c.disagreements;
        out.svg = fiber_svg(cv, &c.partition, so);
    }
    out.report["status"] = ok ? "ok" : "verification-failed";
    out.exit_code = ok ? 0 : 3;
    return out;
}

inline RunResult run_conjugate(const nlohmann::json& cfg, int jobs) {
    Setup s = make_setup(cfg, jobs);
    const auto& cc = cfg["conjugate"];
    NoConjReport rep = noconj_hypothesis_check(*s.manifold, s.x, s.chart, cc["a"].get<double>(),
                                               cc["t_grid"].get<std::vector<double>>(), cc["direction_count"],
                                               cc["t0"].get<double>(), jobs);
    RunResult out;
    out.report = base_report("conjugate", s);
    out.report["conjugate"] = rep.to_json();
    out.report["status"] = rep.pass() ? "ok" : "hypothesis-fails";
    out.exit_code = rep.pass() ? 0 : 3;
    return out;
}

inline RunResult run_sweep(const nlohmann::json& cfg, int jobs) {
    auto radii = cfg["sweep"]["R"].get<std::vector<double>>();
    if (radii.empty())
        throw ConfigError("sweep.R", "sweep.R must list at least one radius");
    RunResult out;
    nlohmann::json rows = nlohmann::json::array();
    std::vector<SweepRow> table;
    std::optional<LambdaMaxResult> lam;
    bool ok = true;
    for (double R : radii) {
        nlohmann::json c = cfg;
        c["cover"]["R_rule"] = "fixed";
        c["cover"]["R"] = R;
        Setup s = make_setup(c, jobs);
        if (out.report.is_null()) {
            out.report = base_report("sweep", s);
            out.report["config"] = cfg;
            out.report["derived"].erase("R");
            out.report["derived"].erase("T");
        }
        if (!lam)
            lam = run_lambda(s);
        TubeCover cv = run_cover(s);
        Classification cl = run_classify(s, cv);
        BoundCertificate cert = run_certificate(s, cv, cl.partition, *lam);
        ok = ok && cl.verified && cl.disagreements.empty();
        SweepRow row{R, s.T, cv.size(), static_cast<int>(cl.partition.bad.size()), cert.sum_term, cert.F, cert.valid};
        table.push_back(row);
        rows.push_back({{"R", R},
                        {"T", s.T},
                        {"cover", detail::cover_summary(cv)},
                        {"classification", cl.record},
                        {"certificate", cert.to_json()}});
    }
    out.report["lambda_max"] = lambda_json(*lam);
    out.report["rows"] = rows;
    bool decreasing = true;
    for (std::size_t i = 1; i < table.size(); ++i)
        decreasing = decreasing && table[i].F < table[i - 1].F;
    out.report["F_strictly_decreasing"] = decreasing;
    out.sweep_csv = sweep_csv(table);
    out.report["status"] = ok ? "ok" : "verification-failed";
    out.exit_code = ok ? 0 : 3;
    return out;
}

} // namespace geobeam

#endif
