#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "wavectrl/grid.hpp"

namespace wavectrl {

/// Interior actuation: forcing u(t,x)*chi(x) with a fixed profile chi, range in [0,1].
struct InteriorSupport {
    Eigen::VectorXd chi;

    void validate() const {
        if (!chi.allFinite() || chi.minCoeff() < 0.0 || chi.maxCoeff() > 1.0)
            throw std::invalid_argument("InteriorSupport: chi must have range in [0,1]");
    }
};

/// Dirichlet actuation at the endpoints of (0,1).
struct BoundarySupport {
    bool left = true;
    bool right = true;

    int channels() const { return (left ? 1 : 0) + (right ? 1 : 0); }
};

using Support = std::variant<InteriorSupport, BoundarySupport>;

inline bool is_boundary(const Support& s) { return std::holds_alternative<BoundarySupport>(s); }

inline int support_channels(const Support& s, int n) {
    if (is_boundary(s)) return std::get<BoundarySupport>(s).channels();
    return n;
}

/// Lattice travel-time threshold below which exact control is geometrically impossible:
/// both endpoints 1, a single endpoint 2, interior support (a,b) -> 2*max(a, 1-b).
inline double control_time_threshold(const Support& s, const Grid& g) {
    if (is_boundary(s)) {
        const auto& b = std::get<BoundarySupport>(s);
        if (b.left && b.right) return 1.0;
        if (b.left || b.right) return 2.0;
        throw std::invalid_argument("BoundarySupport: no active endpoint");
    }
    const auto& chi = std::get<InteriorSupport>(s).chi;
    int first = -1, last = -1;
    for (int j = 0; j < chi.size(); ++j)
        if (chi[j] > 0.0) {
            if (first < 0) first = j;
            last = j;
        }
    if (first < 0) throw std::invalid_argument("InteriorSupport: chi vanishes identically");
    const double a = g.x[first], b = g.x[last];
    return 2.0 * std::max(a, 1.0 - b);
}

/// Time-sampled control: samples(i, j) is the value of channel j at time i*dt,
/// interpreted as piecewise linear in t between consecutive samples.
/// Channels are grid points (interior support) or active endpoints, left first.
struct ControlSignal {
    double dt = 0.0;
    Eigen::MatrixXd samples;  // (steps+1) x channels
    Support support;

    ControlSignal() : support(BoundarySupport{}) {}
    ControlSignal(double dt_, Eigen::MatrixXd samples_, Support support_)
        : dt(dt_), samples(std::move(samples_)), support(std::move(support_)) {
        if (dt <= 0.0) throw std::invalid_argument("ControlSignal: dt must be positive");
        if (!samples.allFinite())
            throw std::invalid_argument("ControlSignal: non-finite sample");
        if (auto* in = std::get_if<InteriorSupport>(&support)) in->validate();
    }

    int steps() const { return static_cast<int>(samples.rows()) - 1; }
    double horizon() const { return steps() * dt; }
    double min_sample() const { return samples.minCoeff(); }

    static ControlSignal zero(double dt, int steps, const Support& support, int n) {
        return ControlSignal(dt, Eigen::MatrixXd::Zero(steps + 1, support_channels(support, n)),
                             support);
    }
};

/// Scalar boundary signal with exact breakpoints; evaluation is affine between
/// breakpoints and right-continuous at them, constant beyond the ends.
struct PiecewiseLinearBoundaryData {
    std::vector<double> breakpoints;
    std::vector<double> values;

    PiecewiseLinearBoundaryData() = default;
    PiecewiseLinearBoundaryData(std::vector<double> t, std::vector<double> v)
        : breakpoints(std::move(t)), values(std::move(v)) {
        if (breakpoints.size() != values.size() || breakpoints.size() < 1)
            throw std::invalid_argument("PiecewiseLinearBoundaryData: size mismatch");
        for (size_t i = 1; i < breakpoints.size(); ++i)
            if (!(breakpoints[i] > breakpoints[i - 1]))
                throw std::invalid_argument(
                    "PiecewiseLinearBoundaryData: breakpoints must increase strictly");
    }

    static PiecewiseLinearBoundaryData constant(double v) { return {{0.0}, {v}}; }

    /// Segment index i with breakpoints[i] <= t < breakpoints[i+1] (clamped at the ends).
    int segment(double t) const {
        const int m = static_cast<int>(breakpoints.size());
        if (t < breakpoints[0]) return -1;
        for (int i = m - 1; i >= 0; --i)
            if (t >= breakpoints[i]) return i;
        return -1;
    }

    /// Value at t. Constant segments are returned bit-exactly (no arithmetic).
    double eval(double t) const {
        const int m = static_cast<int>(breakpoints.size());
        int i = segment(t);
        if (i < 0) return values.front();
        if (i >= m - 1) return values.back();
        if (values[i] == values[i + 1]) return values[i];
        const double s = (t - breakpoints[i]) / (breakpoints[i + 1] - breakpoints[i]);
        return values[i] + s * (values[i + 1] - values[i]);
    }

    /// Right slope at t (0 beyond the last breakpoint).
    double slope(double t) const {
        const int m = static_cast<int>(breakpoints.size());
        int i = segment(t);
        if (i < 0 || i >= m - 1) return 0.0;
        return (values[i + 1] - values[i]) / (breakpoints[i + 1] - breakpoints[i]);
    }

    /// Samples on the lattice {0, dt, ..., steps*dt}.
    Eigen::VectorXd sample(double dt, int steps) const {
        Eigen::VectorXd out(steps + 1);
        for (int i = 0; i <= steps; ++i) out[i] = eval(i * dt);
        return out;
    }
};

/// Two-endpoint control signal from breakpoint data, sampled on the lattice.
inline ControlSignal sample_boundary_controls(const PiecewiseLinearBoundaryData& left,
                                              const PiecewiseLinearBoundaryData& right,
                                              double dt, int steps) {
    Eigen::MatrixXd s(steps + 1, 2);
    s.col(0) = left.sample(dt, steps);
    s.col(1) = right.sample(dt, steps);
    return ControlSignal(dt, std::move(s), BoundarySupport{true, true});
}

}  // namespace wavectrl
