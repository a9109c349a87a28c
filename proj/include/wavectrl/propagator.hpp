#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "wavectrl/control.hpp"
#include "wavectrl/operator.hpp"
#include "wavectrl/state.hpp"

namespace wavectrl {

namespace detail {

// Oscillator kernel coefficients as entire functions of mu = lambda * t^2:
//   C  = cos(sqrt(mu))          S  = sin(sqrt(mu))/sqrt(mu)
//   G1 = (1-cos)/mu             G2 = (sqrt(mu)-sin)/mu^(3/2)
// For mu < 0 these become the hyperbolic versions automatically. The series branch
// avoids cancellation near mu = 0.
struct KernelCoeffs {
    double C, S, G1, G2;
};

inline KernelCoeffs kernel_coeffs(double mu) {
    KernelCoeffs k{};
    if (std::abs(mu) < 0.25) {
        double c = 0, s = 0, g1 = 0, g2 = 0;
        double term = 1.0;  // (-mu)^j / (2j)!
        for (int j = 0; j < 12; ++j) {
            const int m = 2 * j;
            c += term;
            s += term / (m + 1);
            g1 += term / ((m + 1) * (m + 2));
            g2 += term / ((m + 1) * (m + 2) * (m + 3));
            term *= -mu / ((m + 1) * (m + 2));
        }
        k = {c, s, g1, g2};
    } else if (mu > 0) {
        const double th = std::sqrt(mu);
        const double sn = std::sin(th), hs = std::sin(0.5 * th);
        k.C = std::cos(th);
        k.S = sn / th;
        k.G1 = 2.0 * hs * hs / mu;
        k.G2 = (th - sn) / (mu * th);
    } else {
        const double th = std::sqrt(-mu);
        const double sh = std::sinh(th), ch = std::cosh(th);
        k.C = ch;
        k.S = sh / th;
        k.G1 = (ch - 1.0) / (-mu);
        k.G2 = (sh - th) / (-mu * th);
    }
    return k;
}

// Per-mode coefficients for a fixed time increment.
struct ModalKernel {
    double dt = 0;
    Eigen::VectorXd C, S, G1, G2;
};

inline ModalKernel build_kernel(const Eigen::VectorXd& eigenvalues, double dt) {
    const int n = static_cast<int>(eigenvalues.size());
    ModalKernel k;
    k.dt = dt;
    k.C.resize(n);
    k.S.resize(n);
    k.G1.resize(n);
    k.G2.resize(n);
    for (int i = 0; i < n; ++i) {
        KernelCoeffs c = kernel_coeffs(eigenvalues[i] * dt * dt);
        k.C[i] = c.C;
        k.S[i] = c.S;
        k.G1[i] = c.G1;
        k.G2[i] = c.G2;
    }
    return k;
}

// Exact step of a'' + lambda a = f with f linear in t between f0 and f1.
inline void modal_step(const ModalKernel& k, const Eigen::VectorXd& lambda,
                       Eigen::VectorXd& a, Eigen::VectorXd& b, const Eigen::VectorXd& f0,
                       const Eigen::VectorXd& f1) {
    const double dt = k.dt;
    Eigen::VectorXd df = f1 - f0;
    Eigen::VectorXd a_new = k.C.cwiseProduct(a) + dt * k.S.cwiseProduct(b) +
                            dt * dt * (k.G1.cwiseProduct(f0) + k.G2.cwiseProduct(df));
    b = -dt * lambda.cwiseProduct(k.S.cwiseProduct(a)) + k.C.cwiseProduct(b) +
        dt * (k.S.cwiseProduct(f0) + k.G1.cwiseProduct(df));
    a = std::move(a_new);
}

// Free rotation of a single modal pair over time t.
inline void modal_free(double lambda, double t, double& a, double& b) {
    KernelCoeffs k = kernel_coeffs(lambda * t * t);
    const double a_new = k.C * a + t * k.S * b;
    b = -t * lambda * k.S * a + k.C * b;
    a = a_new;
}

}  // namespace detail

/// States at every lattice step, in modal and grid coordinates.
struct Trajectory {
    double dt = 0;
    Eigen::MatrixXd mod_pos, mod_vel;  // (steps+1) x n, modal coefficients
    Eigen::MatrixXd pos, vel;          // (steps+1) x n, grid values

    int steps() const { return static_cast<int>(pos.rows()) - 1; }
    double horizon() const { return steps() * dt; }

    State state_at_step(int i) const {
        return State(pos.row(i).transpose(), vel.row(i).transpose());
    }
    State initial() const { return state_at_step(0); }
    State final_state() const { return state_at_step(steps()); }
};

inline int lattice_steps(double T, double dt) {
    const long s = std::lround(T / dt);
    if (s < 0 || std::abs(s * dt - T) > 1e-9 * std::max(1.0, std::abs(T)))
        throw std::invalid_argument("time horizon is not on the step lattice");
    return static_cast<int>(s);
}

/// Evolve (y, y_t) under the sampled control over [0, T], T = steps * dt.
///
/// Interior support forces the modal system directly. Boundary support is realized by
/// the affine lift y = z + l(t,x): z obeys homogeneous conditions with interior forcing
/// -l_tt - c*l, where l_tt of the piecewise-linear data is a train of impulses applied
/// as exact modal velocity jumps at the sample nodes.
inline Trajectory propagate(const DirichletOperator& op, const State& s0,
                            const ControlSignal& u, double T) {
    const int n = op.grid.n;
    if (s0.size() != n) throw std::invalid_argument("propagate: state/grid mismatch");
    if (!s0.finite()) throw std::invalid_argument("propagate: non-finite initial state");
    const int steps = lattice_steps(T, u.dt);
    if (steps != u.steps())
        throw std::invalid_argument("propagate: control sample count does not match T");

    const bool boundary = is_boundary(u.support);
    Eigen::VectorXd uL, uR;  // endpoint samples (zero when endpoint inactive)
    Eigen::VectorXd pL, pR;  // modal coefficients of the lift profiles 1-x and x
    Eigen::MatrixXd forcing;  // (steps+1) x n modal forcing

    if (boundary) {
        const auto& bs = std::get<BoundarySupport>(u.support);
        if (u.samples.cols() != bs.channels())
            throw std::invalid_argument("propagate: boundary channel mismatch");
        uL = Eigen::VectorXd::Zero(steps + 1);
        uR = Eigen::VectorXd::Zero(steps + 1);
        int col = 0;
        if (bs.left) uL = u.samples.col(col++);
        if (bs.right) uR = u.samples.col(col);
        pL = op.to_modal(Eigen::VectorXd::Ones(n) - op.grid.x);
        pR = op.to_modal(op.grid.x);
        if (op.potential.cwiseAbs().maxCoeff() > 0.0) {
            Eigen::VectorXd qL = op.to_modal(op.potential.cwiseProduct(
                Eigen::VectorXd::Ones(n) - op.grid.x));
            Eigen::VectorXd qR = op.to_modal(op.potential.cwiseProduct(op.grid.x));
            forcing = -(uL * qL.transpose() + uR * qR.transpose());
        } else {
            forcing = Eigen::MatrixXd::Zero(steps + 1, n);
        }
    } else {
        const auto& is = std::get<InteriorSupport>(u.support);
        if (is.chi.size() != n || u.samples.cols() != n)
            throw std::invalid_argument("propagate: interior support/grid mismatch");
        forcing = op.grid.h *
                  (u.samples * (is.chi.asDiagonal() * op.modes));
    }

    auto slopeL = [&](int i) { return boundary ? (uL[i + 1] - uL[i]) / u.dt : 0.0; };
    auto slopeR = [&](int i) { return boundary ? (uR[i + 1] - uR[i]) / u.dt : 0.0; };

    Eigen::VectorXd a = op.to_modal(s0.y);
    Eigen::VectorXd b = op.to_modal(s0.v);

    Trajectory traj;
    traj.dt = u.dt;
    traj.mod_pos.resize(steps + 1, n);
    traj.mod_vel.resize(steps + 1, n);
    traj.mod_pos.row(0) = a.transpose();
    traj.mod_vel.row(0) = b.transpose();

    if (boundary) {
        a -= uL[0] * pL + uR[0] * pR;
        if (steps > 0) b -= slopeL(0) * pL + slopeR(0) * pR;
    }

    auto store = [&](int i, double sl, double sr) {
        if (boundary) {
            traj.mod_pos.row(i) = (a + uL[i] * pL + uR[i] * pR).transpose();
            traj.mod_vel.row(i) = (b + sl * pL + sr * pR).transpose();
        } else {
            traj.mod_pos.row(i) = a.transpose();
            traj.mod_vel.row(i) = b.transpose();
        }
    };

    const detail::ModalKernel kernel = detail::build_kernel(op.eigenvalues, u.dt);
    for (int i = 0; i < steps; ++i) {
        detail::modal_step(kernel, op.eigenvalues, a, b, forcing.row(i).transpose(),
                           forcing.row(i + 1).transpose());
        store(i + 1, slopeL(i), slopeR(i));  // left-slope reconstruction at arrival
        if (boundary && i + 1 < steps) {
            const double jl = slopeL(i + 1) - slopeL(i);
            const double jr = slopeR(i + 1) - slopeR(i);
            if (jl != 0.0 || jr != 0.0) b -= jl * pL + jr * pR;
        }
    }

    traj.pos = traj.mod_pos * op.modes.transpose();
    traj.vel = traj.mod_vel * op.modes.transpose();
    return traj;
}

/// Uncontrolled evolution over an arbitrary time (single exact modal rotation).
inline State free_evolve(const DirichletOperator& op, const State& s0, double t) {
    Eigen::VectorXd a = op.to_modal(s0.y);
    Eigen::VectorXd b = op.to_modal(s0.v);
    for (int k = 0; k < op.grid.n; ++k) detail::modal_free(op.eigenvalues[k], t, a[k], b[k]);
    return State(op.from_modal(a), op.from_modal(b));
}

/// State at the start of the window whose evolution under u ends at s_final.
/// Realized by forward propagation of the time-reversed system.
inline State propagate_backward(const DirichletOperator& op, const State& s_final,
                                const ControlSignal& u, double T) {
    ControlSignal rev(u.dt, u.samples.colwise().reverse(), u.support);
    Trajectory t = propagate(op, State(s_final.y, -s_final.v), rev, T);
    State s = t.final_state();
    return State(s.y, -s.v);
}

/// Nearest-step lookup; exact when times align with the step lattice.
inline std::vector<State> sample_trajectory(const Trajectory& traj,
                                            const std::vector<double>& times) {
    std::vector<State> out;
    out.reserve(times.size());
    for (double t : times) {
        if (t < -1e-12 || t > traj.horizon() + 1e-12)
            throw std::out_of_range("sample_trajectory: time outside [0,T]");
        int i = static_cast<int>(std::lround(t / traj.dt));
        i = std::max(0, std::min(traj.steps(), i));
        out.push_back(traj.state_at_step(i));
    }
    return out;
}

}  // namespace wavectrl
