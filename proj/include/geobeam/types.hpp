#ifndef GEOBEAM_TYPES_HPP
#define GEOBEAM_TYPES_HPP

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace geobeam {

constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using PhaseVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxDim, 1>;
using PhaseMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2 * kMaxDim, 2 * kMaxDim>;

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CoverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A point (x, xi) of the cotangent bundle in chart coordinates.
struct PhasePoint {
    Vec x;
    Vec xi;
    int chart = 0;
    double energy = 0.0;

    PhaseVec stacked() const {
        PhaseVec z(x.size() + xi.size());
        z << x, xi;
        return z;
    }
};

inline PhasePoint unstack(const PhaseVec& z, int chart) {
    const int n = static_cast<int>(z.size() / 2);
    PhasePoint p;
    p.x = z.head(n);
    p.xi = z.tail(n);
    p.chart = chart;
    return p;
}

// Christoffel symbols of the second kind, gamma(i,j,k) = Gamma^i_{jk}.
struct Christoffel {
    int n = 0;
    std::array<double, kMaxDim * kMaxDim * kMaxDim> v{};

    double& operator()(int i, int j, int k) { return v[(i * kMaxDim + j) * kMaxDim + k]; }
    double operator()(int i, int j, int k) const { return v[(i * kMaxDim + j) * kMaxDim + k]; }
};

// Riemann tensor R^i_{jkl}, with R(d_k, d_l) d_j = R^i_{jkl} d_i.
struct Riemann {
    int n = 0;
    std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> v{};

    double& operator()(int i, int j, int k, int l) {
        return v[((i * kMaxDim + j) * kMaxDim + k) * kMaxDim + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return v[((i * kMaxDim + j) * kMaxDim + k) * kMaxDim + l];
    }
};

} // namespace geobeam

#endif
