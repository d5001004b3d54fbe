#ifndef GEOBEAM_PROFILES_HPP
#define GEOBEAM_PROFILES_HPP

#include "types.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace geobeam {

// Radial profile f(r) with two derivatives.
class Profile {
public:
    virtual ~Profile() = default;
    virtual double value(double r) const = 0;
    virtual double d1(double r) const = 0;
    virtual double d2(double r) const = 0;
    virtual nlohmann::json describe() const = 0;
};

using ProfilePtr = std::shared_ptr<const Profile>;

class SineProfile final : public Profile {
public:
    double value(double r) const override { return std::sin(r); }
    double d1(double r) const override { return std::cos(r); }
    double d2(double r) const override { return -std::sin(r); }
    nlohmann::json describe() const override { return {{"builtin", "sin"}}; }
};

// V(r) = E - 2 cos r, the spherical pendulum with unit mass and gravity.
class PendulumPotential final : public Profile {
public:
    explicit PendulumPotential(double energy) : energy_(energy) {}
    double value(double r) const override { return energy_ - 2.0 * std::cos(r); }
    double d1(double r) const override { return 2.0 * std::sin(r); }
    double d2(double r) const override { return 2.0 * std::cos(r); }
    nlohmann::json describe() const override { return {{"builtin", "pendulum"}, {"energy", energy_}}; }
    double energy() const { return energy_; }

private:
    double energy_;
};

class ConstantProfile final : public Profile {
public:
    explicit ConstantProfile(double c) : c_(c) {}
    double value(double) const override { return c_; }
    double d1(double) const override { return 0.0; }
    double d2(double) const override { return 0.0; }
    nlohmann::json describe() const override { return {{"builtin", "constant"}, {"value", c_}}; }

private:
    double c_;
};

// Cubic B-spline through equispaced samples (r_i, f_i).
class SplineProfile final : public Profile {
public:
    SplineProfile(std::vector<double> r, std::vector<double> f, std::string source = {})
        : source_(std::move(source)) {
        if (r.size() < 512 || r.size() != f.size())
            throw PreconditionError("tabulated profile needs at least 512 nodes");
        double h = (r.back() - r.front()) / static_cast<double>(r.size() - 1);
        for (std::size_t i = 1; i < r.size(); ++i)
            if (std::abs(r[i] - r[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
                throw PreconditionError("tabulated profile must use an equispaced r grid");
        r0_ = r.front();
        r1_ = r.back();
        spline_ = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
            f.begin(), f.end(), r0_, h);
    }

    static std::shared_ptr<SplineProfile> from_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw PreconditionError("cannot open profile table " + path);
        std::vector<double> r, f;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#')
                continue;
            for (char& c : line)
                if (c == ',')
                    c = ' ';
            std::istringstream ss(line);
            double a, b;
            if (ss >> a >> b) {
                r.push_back(a);
                f.push_back(b);
            }
        }
        return std::make_shared<SplineProfile>(std::move(r), std::move(f), path);
    }

    double value(double r) const override { return (*spline_)(clamp(r)); }
    double d1(double r) const override { return spline_->prime(clamp(r)); }
    double d2(double r) const override { return spline_->double_prime(clamp(r)); }
    nlohmann::json describe() const override {
        return {{"table", source_}, {"r_min", r0_}, {"r_max", r1_}};
    }

private:
    double clamp(double r) const { return std::min(std::max(r, r0_), r1_); }
    double r0_ = 0.0, r1_ = 0.0;
    std::string source_;
    std::shared_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

} // namespace geobeam

#endif
