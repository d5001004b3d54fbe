#ifndef GEOBEAM_CONFIG_HPP
#define GEOBEAM_CONFIG_HPP

// Experiment configuration: YAML in, validated JSON out. Every key has a typed
// default; the effective configuration (defaults included) goes into reports.

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace geobeam {

struct ConfigError : std::runtime_error {
    std::string key;
    ConfigError(const std::string& k, const std::string& msg) : std::runtime_error(msg), key(k) {}
};

enum class KeyType { number, integer, string, boolean, numbers, optional_number };

struct KeySpec {
    const char* section;
    const char* key;
    KeyType type;
    nlohmann::json def;
    const char* doc;
};

inline const std::vector<KeySpec>& config_schema() {
    using J = nlohmann::json;
    static const std::vector<KeySpec> s = {
        {"manifold", "kind", KeyType::string, "flat-torus",
         "flat-torus | round-sphere | pendulum | polar-sphere | revolution | sphere-circle | ellipsoid"},
        {"manifold", "dim", KeyType::integer, 2, "dimension for flat-torus and round-sphere"},
        {"manifold", "periods", KeyType::numbers, J::array(), "torus periods (empty: all 1)"},
        {"manifold", "energy", KeyType::number, 3.5, "pendulum energy E in V = E - 2 cos r"},
        {"manifold", "axes", KeyType::numbers, J::array({1.0, 1.5, 2.0}), "ellipsoid semi-axes"},
        {"manifold", "profile_csv", KeyType::string, "", "kind revolution: two-column CSV (r, alpha)"},
        {"manifold", "potential_csv", KeyType::string, "", "kind revolution: optional CSV (r, V)"},
        {"base_point", "x", KeyType::numbers, J::array(), "chart coordinates (empty: manifold default)"},
        {"base_point", "chart", KeyType::integer, 0, "chart index"},
        {"cover", "tau", KeyType::number, 0.2, "tube half-length"},
        {"cover", "R_rule", KeyType::string, "fixed", "fixed | power (R = R_c h^delta)"},
        {"cover", "R", KeyType::number, 0.01, "tube radius when R_rule = fixed"},
        {"cover", "R_c", KeyType::number, 8.0, "prefactor when R_rule = power"},
        {"cover", "h", KeyType::number, 1e-8, "semiclassical parameter"},
        {"cover", "delta", KeyType::number, 0.4, "exponent in R >= 8 h^delta"},
        {"cover", "R0", KeyType::number, 0.2, "largest admissible R"},
        {"cover", "tau0", KeyType::number, 0.2, "largest admissible tau"},
        {"cover", "coverage_samples", KeyType::integer, 10000, "coverage verification samples"},
        {"cover", "verify", KeyType::boolean, true, "run the cover verification"},
        {"classify", "mode", KeyType::string, "single", "single | iterative | torus-oracle | revolution"},
        {"classify", "t0", KeyType::number, 1.6, "window start"},
        {"classify", "T_rule", KeyType::string, "fixed", "fixed | power (T = T_c R^T_exponent)"},
        {"classify", "T", KeyType::number, 2.7, "window end when T_rule = fixed"},
        {"classify", "T_c", KeyType::number, 1.0, "prefactor when T_rule = power"},
        {"classify", "T_exponent", KeyType::number, -1.0 / 3.0, "exponent when T_rule = power"},
        {"classify", "contraction", KeyType::number, 1.0, "C in the windows exp(-C l / 2) T"},
        {"classify", "sense", KeyType::string, "sender", "iterative stage rule: sender | receiver"},
        {"classify", "alpha1", KeyType::number, 0.5, "exponent for the revolution bad set"},
        {"classify", "seeds", KeyType::integer, 32, "cap seeds per tube"},
        {"classify", "backward", KeyType::boolean, true, "also classify on the backward window"},
        {"classify", "margin", KeyType::number, 0.1, "verification margin in units of R"},
        {"classify", "verify_seeds", KeyType::integer, 1000, "random seeds per good tube"},
        {"classify", "verify_times", KeyType::integer, 200, "scan resolution per window"},
        {"classify", "width_constant", KeyType::number, 0.3, "C in the rational-torus width C T R^alpha1"},
        {"classify", "singular_constant", KeyType::number, 0.125, "c in the singular width c R^(1-alpha1)"},
        {"classify", "oracle_check", KeyType::boolean, true, "compare with the lattice oracle on flat tori"},
        {"bound", "lambda_samples", KeyType::integer, 8, "trajectories for Lambda_max"},
        {"bound", "lambda_probe", KeyType::number, 5.0, "probe time for Lambda_max"},
        {"bound", "lambda_floor", KeyType::number, 1e-3, "floor replacing a vanishing Lambda_max"},
        {"bound", "alpha", KeyType::optional_number, nullptr, "declared alpha (null: finite-h proxy)"},
        {"conjugate", "a", KeyType::number, 1.0, "rate a in r_t = exp(-a t) / a"},
        {"conjugate", "t_grid", KeyType::numbers, J::array({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), "times t"},
        {"conjugate", "direction_count", KeyType::integer, 64, "fiber directions"},
        {"conjugate", "t0", KeyType::number, 1.0, "lower time bound"},
        {"sweep", "R", KeyType::numbers, J::array({0.04, 0.02, 0.01}), "radii of the sweep"},
        {"flow", "abs_tol", KeyType::number, 1e-11, "absolute tolerance"},
        {"flow", "rel_tol", KeyType::number, 1e-11, "relative tolerance"},
        {"flow", "h_max", KeyType::number, 0.5, "largest step"},
        {"flow", "horizon", KeyType::number, 1000.0, "largest |t|"},
        {"output", "dir", KeyType::string, "out", "output directory"},
        {"output", "report", KeyType::boolean, true, "write report.json"},
        {"output", "tubes_csv", KeyType::boolean, true, "write tubes.csv"},
        {"output", "relation", KeyType::boolean, false, "write relation.json"},
        {"output", "svg", KeyType::boolean, false, "write fiber.svg (n = 2)"},
        {"output", "lattice", KeyType::boolean, true, "lattice dots in the svg (flat torus)"},
        {"seeds", "cover", KeyType::integer, 1, "coverage sampling seed"},
        {"seeds", "verify", KeyType::integer, 11, "family verification seed"},
        {"seeds", "lambda", KeyType::integer, 7, "Lambda_max sampling seed"},
    };
    return s;
}

namespace detail {

inline nlohmann::json yaml_scalar(const YAML::Node& n) {
    const std::string& s = n.Scalar();
    if (n.Tag() == "!")
        return s; // quoted
    if (s == "~" || s == "null" || s == "Null" || s == "NULL" || s.empty())
        return nullptr;
    if (s == "true" || s == "True" || s == "TRUE")
        return true;
    if (s == "false" || s == "False" || s == "FALSE")
        return false;
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos == s.size())
            return v;
    } catch (const std::exception&) {
    }
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos == s.size())
            return v;
    } catch (const std::exception&) {
    }
    return s;
}

inline nlohmann::json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
        return nullptr;
    case YAML::NodeType::Scalar:
        return yaml_scalar(n);
    case YAML::NodeType::Sequence: {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& e : n)
            a.push_back(yaml_to_json(e));
        return a;
    }
    case YAML::NodeType::Map: {
        nlohmann::json o = nlohmann::json::object();
        for (const auto& kv : n)
            o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
        return o;
    }
    }
    return nullptr;
}

inline const KeySpec* find_key(const std::string& section, const std::string& key) {
    for (const auto& k : config_schema())
        if (section == k.section && key == k.key)
            return &k;
    return nullptr;
}

inline bool known_section(const std::string& s) {
    for (const auto& k : config_schema())
        if (s == k.section)
            return true;
    return false;
}

inline nlohmann::json coerce(const KeySpec& k, const nlohmann::json& v) {
    const std::string name = std::string(k.section) + "." + k.key;
    auto bad = [&](const char* want) { return ConfigError(name, name + " must be " + want); };
    switch (k.type) {
    case KeyType::number:
        if (!v.is_number())
            throw bad("a number");
        return v.get<double>();
    case KeyType::optional_number:
        if (v.is_null())
            return nullptr;
        if (!v.is_number())
            throw bad("a number or null");
        return v.get<double>();
    case KeyType::integer:
        if (!v.is_number_integer())
            throw bad("an integer");
        return v;
    case KeyType::string:
        if (!v.is_string())
            throw bad("a string");
        return v;
    case KeyType::boolean:
        if (!v.is_boolean())
            throw bad("a boolean");
        return v;
    case KeyType::numbers: {
        if (!v.is_array())
            throw bad("a list of numbers");
        nlohmann::json a = nlohmann::json::array();
        for (const auto& e : v) {
            if (!e.is_number())
                throw bad("a list of numbers");
            a.push_back(e.get<double>());
        }
        return a;
    }
    }
    return v;
}

} // namespace detail

inline nlohmann::json default_config() {
    nlohmann::json c = nlohmann::json::object();
    for (const auto& k : config_schema())
        c[k.section][k.key] = k.def;
    return c;
}

// Applies one section.key=value override; the value is parsed as YAML.
inline void apply_override(nlohmann::json& cfg, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError(assignment, "override must look like section.key=value");
    std::string path = assignment.substr(0, eq), value = assignment.substr(eq + 1);
    auto dot = path.find('.');
    if (dot == std::string::npos)
        throw ConfigError(path, "override key must look like section.key");
    std::string sec = path.substr(0, dot), key = path.substr(dot + 1);
    const KeySpec* k = detail::find_key(sec, key);
    if (!k)
        throw ConfigError(path, "unknown configuration key " + path);
    nlohmann::json v;
    try {
        v = detail::yaml_to_json(YAML::Load(value));
    } catch (const YAML::Exception& e) {
        throw ConfigError(path, std::string("cannot parse value: ") + e.what());
    }
    cfg[sec][key] = detail::coerce(*k, v);
}

inline void merge_config(nlohmann::json& cfg, const nlohmann::json& user) {
    if (user.is_null())
        return;
    if (!user.is_object())
        throw ConfigError("", "configuration must be a mapping of sections");
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (!detail::known_section(it.key()))
            throw ConfigError(it.key(), "unknown configuration section " + it.key());
        if (it.value().is_null())
            continue;
        if (!it.value().is_object())
            throw ConfigError(it.key(), "section " + it.key() + " must be a mapping");
        for (auto kv = it.value().begin(); kv != it.value().end(); ++kv) {
            const KeySpec* k = detail::find_key(it.key(), kv.key());
            if (!k)
                throw ConfigError(it.key() + "." + kv.key(), "unknown configuration key " + it.key() + "." + kv.key());
            cfg[it.key()][kv.key()] = detail::coerce(*k, kv.value());
        }
    }
}

inline nlohmann::json load_config_text(const std::string& text) {
    nlohmann::json cfg = default_config();
    try {
        merge_config(cfg, detail::yaml_to_json(YAML::Load(text)));
    } catch (const YAML::Exception& e) {
        throw ConfigError("", std::string("YAML parse error: ") + e.what());
    }
    return cfg;
}

inline nlohmann::json load_config_file(const std::string& path) {
    nlohmann::json cfg = default_config();
    try {
        merge_config(cfg, detail::yaml_to_json(YAML::LoadFile(path)));
    } catch (const YAML::BadFile&) {
        throw ConfigError("", "cannot read configuration file " + path);
    } catch (const YAML::Exception& e) {
        throw ConfigError("", std::string("YAML parse error: ") + e.what());
    }
    return cfg;
}

} // namespace geobeam

#endif
