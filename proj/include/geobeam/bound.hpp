#ifndef GEOBEAM_BOUND_HPP
#define GEOBEAM_BOUND_HPP

#include "looping.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace geobeam {

struct FamilySummary {
    double count = 0.0;
    double t = 0.0;
    double T = 0.0;
};

struct Constraint {
    std::string name;
    bool ok = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct BoundInputs {
    int n = 2;
    double h = 0.0;
    double delta = 0.0;
    double tau = 0.0;
    double R = 0.0;
    int colors = 0;
    double bad = 0.0;
    std::vector<FamilySummary> families;
    double lambda_max = 0.0;
    bool lambda_floored = false;
    std::optional<double> alpha; // declared; the proxy is used when absent
    int tubes = 0;               // total, for the all-bad baseline
};

struct BoundCertificate {
    BoundInputs in;
    double ehrenfest = 0.0;
    double alpha_used = 0.0;
    double alpha_proxy = 0.0;
    double alpha_limit = 0.0;
    double bad_term = 0.0;
    double sum_term = 0.0;
    double F = 0.0;
    double F_check = 0.0;
    double baseline = 0.0; // F of the all-bad partition of the same cover
    double normalized_gain = 0.0;
    double shape = 0.0;    // D tau^-1/2 h^((1-n)/2) F, C_n left out
    std::vector<Constraint> constraints;
    bool valid = false;

    std::vector<std::string> failing() const {
        std::vector<std::string> out;
        for (const auto& c : constraints)
            if (!c.ok)
                out.push_back(c.name);
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json fams = nlohmann::json::array();
        for (const auto& f : in.families)
            fams.push_back({{"count", f.count}, {"t", f.t}, {"T", f.T}});
        nlohmann::json cons = nlohmann::json::array();
        for (const auto& c : constraints)
            cons.push_back({{"name", c.name}, {"ok", c.ok}, {"lhs", c.lhs}, {"rhs", c.rhs}});
        nlohmann::json j;
        j["inputs"] = {{"n", in.n},
                       {"h", in.h},
                       {"delta", in.delta},
                       {"tau", in.tau},
                       {"R", in.R},
                       {"colors", in.colors},
                       {"bad", in.bad},
                       {"tubes", in.tubes},
                       {"families", fams},
                       {"lambda_max", in.lambda_max},
                       {"lambda_floored", in.lambda_floored},
                       {"alpha_declared", in.alpha ? nlohmann::json(*in.alpha) : nlohmann::json(nullptr)}};
        j["ehrenfest_time"] = ehrenfest;
        j["alpha_used"] = alpha_used;
        j["alpha_proxy"] = alpha_proxy;
        j["alpha_limit"] = alpha_limit;
        j["bad_term"] = bad_term;
        j["sum_term"] = sum_term;
        j["F"] = F;
        j["F_check"] = F_check;
        j["baseline_all_bad"] = baseline;
        j["normalized_gain"] = normalized_gain;
        j["shape"] = "C_n * D * tau^(-1/2) * h^((1-n)/2) * F";
        j["shape_without_C_n"] = shape;
        j["constraints"] = cons;
        j["valid"] = valid;
        j["status"] = valid ? "VALID" : "INVALID";
        return j;
    }
};

// R^((n-1)/2) (|B|^(1/2) + sum_l (|G_l| t_l / T_l)^(1/2))
inline double factor_F(int n, double R, double bad, const std::vector<FamilySummary>& fams, double* bad_term = nullptr,
                       double* sum_term = nullptr) {
    double s = 0.0;
    for (const auto& f : fams)
        s += std::sqrt(f.count * f.t / f.T);
    double scale = std::pow(R, (n - 1) / 2.0);
    if (bad_term)
        *bad_term = scale * std::sqrt(bad);
    if (sum_term)
        *sum_term = scale * s;
    return scale * (std::sqrt(bad) + s);
}

// Independent re-evaluation: reversed order, Neumaier summation, factored roots,
// the scale through exp/log.
inline double factor_F_check(int n, double R, double bad, const std::vector<FamilySummary>& fams) {
    double sum = 0.0, comp = 0.0;
    auto add = [&](double v) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    };
    for (auto it = fams.rbegin(); it != fams.rend(); ++it)
        add(std::sqrt(it->count) * std::sqrt(it->t) / std::sqrt(it->T));
    add(std::sqrt(bad));
    double scale = R == 0.0 ? (n == 1 ? 1.0 : 0.0) : std::exp(0.5 * (n - 1) * std::log(R));
    return scale * (sum + comp);
}

inline BoundCertificate certificate(const BoundInputs& in) {
    if (!(in.h > 0.0 && in.h < 1.0))
        throw PreconditionError("h must lie in (0, 1)");
    if (!(in.delta > 0.0 && in.delta < 0.5))
        throw PreconditionError("delta must lie in (0, 1/2)");
    if (!(in.R > 0.0 && in.tau > 0.0 && in.lambda_max > 0.0))
        throw PreconditionError("R, tau and Lambda_max must be positive");
    BoundCertificate c;
    c.in = in;
    c.ehrenfest = std::log(1.0 / in.h) / (2.0 * in.lambda_max);
    double Tmax = 0.0;
    for (const auto& f : in.families)
        Tmax = std::max(Tmax, f.T);
    c.alpha_proxy = Tmax / (2.0 * c.ehrenfest);
    c.alpha_used = in.alpha ? *in.alpha : c.alpha_proxy;
    c.alpha_limit = 1.0 - 2.0 * std::log(in.R) / std::log(in.h);
    c.F = factor_F(in.n, in.R, in.bad, in.families, &c.bad_term, &c.sum_term);
    c.F_check = factor_F_check(in.n, in.R, in.bad, in.families);
    c.baseline = std::pow(in.R, (in.n - 1) / 2.0) * std::sqrt(static_cast<double>(in.tubes));
    c.normalized_gain = c.baseline > 0.0 ? c.F / c.baseline : 0.0;
    c.shape = in.colors / std::sqrt(in.tau) * std::pow(in.h, (1.0 - in.n) / 2.0) * c.F;

    const double rmin = 8.0 * std::pow(in.h, in.delta);
    c.constraints.push_back({"R(h) >= 8h^delta", in.R >= rmin, in.R, rmin});
    for (std::size_t l = 0; l < in.families.size(); ++l) {
        const auto& f = in.families[l];
        double rhs = 2.0 * c.alpha_used * c.ehrenfest;
        c.constraints.push_back({"T_" + std::to_string(l) + " <= 2 alpha T_e(h)", f.T <= rhs * (1.0 + 1e-15), f.T, rhs});
        c.constraints.push_back({"t_" + std::to_string(l) + " <= T_" + std::to_string(l), f.t <= f.T, f.t, f.T});
    }
    c.constraints.push_back({"alpha < 1 - 2 log R / log h", c.alpha_used < c.alpha_limit, c.alpha_used, c.alpha_limit});
    c.valid = true;
    for (const auto& k : c.constraints)
        c.valid = c.valid && k.ok;
    return c;
}

inline BoundInputs bound_inputs(const LoopPartition& p, int n, double h, double delta, double tau, double R,
                                int colors, double lambda_max, bool floored, std::optional<double> alpha = {}) {
    BoundInputs in;
    in.n = n;
    in.h = h;
    in.delta = delta;
    in.tau = tau;
    in.R = R;
    in.colors = colors;
    in.bad = static_cast<double>(p.bad.size());
    for (const auto& g : p.good)
        in.families.push_back({static_cast<double>(g.tubes.size()), g.t, g.T});
    in.lambda_max = lambda_max;
    in.lambda_floored = floored;
    in.alpha = alpha;
    in.tubes = p.size;
    return in;
}

// Mass form: R^((n-1)/2) sum_j m_j for user-supplied per-tube masses.
inline double factor_F_mass(int n, double R, const std::vector<double>& masses) {
    double s = 0.0;
    for (double m : masses)
        s += m;
    return std::pow(R, (n - 1) / 2.0) * s;
}

struct SweepRow {
    double R = 0.0;
    double T = 0.0;
    int tubes = 0;
    int bad = 0;
    double sum_term = 0.0;
    double F = 0.0;
    bool valid = false;
};

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "R,T,N_tubes,bad_count,sum_term,F,valid\n";
    for (const auto& r : rows)
        os << r.R << ',' << r.T << ',' << r.tubes << ',' << r.bad << ',' << r.sum_term << ',' << r.F << ','
           << (r.valid ? "true" : "false") << '\n';
    return os.str();
}

} // namespace geobeam

#endif
