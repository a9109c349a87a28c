#pragma once

#include <stdexcept>
#include <variant>

#include <Eigen/Core>

#include "wavectrl/control.hpp"
#include "wavectrl/operator.hpp"
#include "wavectrl/state.hpp"

namespace wavectrl {

enum class SteadyKind { Interior, Boundary };

/// A steady state together with its generating control. For interior control the
/// control is a grid function acting through chi; for boundary control it is the
/// pair of endpoint values.
struct SteadyPair {
    State state;  // velocity is zero
    SteadyKind kind = SteadyKind::Interior;
    Eigen::VectorXd control;  // grid function (interior) or [uL, uR] (boundary)
    Eigen::VectorXd chi;      // interior only

    /// Constant-in-time control signal generating this steady state.
    ControlSignal hold(double dt, int steps) const {
        if (kind == SteadyKind::Interior) {
            Eigen::MatrixXd s = control.transpose().replicate(steps + 1, 1);
            return ControlSignal(dt, std::move(s), InteriorSupport{chi});
        }
        Eigen::MatrixXd s(steps + 1, 2);
        s.col(0).setConstant(control[0]);
        s.col(1).setConstant(control[1]);
        return ControlSignal(dt, std::move(s), BoundarySupport{true, true});
    }

    double control_floor() const { return control.minCoeff(); }
};

namespace detail {
inline void require_fredholm(const DirichletOperator& op) {
    if (!check_fredholm(op))
        throw std::domain_error(
            "steady solve refused: zero is numerically in the spectrum (Fredholm failure)");
}
}  // namespace detail

/// Solve A0 y = chi * u through the eigendecomposition.
inline SteadyPair solve_steady_interior(const DirichletOperator& op, const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& chi) {
    detail::require_fredholm(op);
    const int n = op.grid.n;
    if (u.size() != n || chi.size() != n)
        throw std::invalid_argument("solve_steady_interior: size mismatch");
    if (!u.allFinite()) throw std::invalid_argument("solve_steady_interior: non-finite control");
    Eigen::VectorXd rhs_modal = op.to_modal(chi.cwiseProduct(u));
    Eigen::VectorXd y = op.from_modal(
        (rhs_modal.array() / op.eigenvalues.array()).matrix());
    SteadyPair p;
    p.state = State(std::move(y), Eigen::VectorXd::Zero(n));
    p.kind = SteadyKind::Interior;
    p.control = u;
    p.chi = chi;
    return p;
}

/// Solve the homogeneous interior equation with Dirichlet values (uL, uR): the
/// eliminated stencil turns the boundary values into the forcing (uL e_1 + uR e_n)/h^2.
inline SteadyPair solve_steady_boundary(const DirichletOperator& op, double uL, double uR) {
    detail::require_fredholm(op);
    const int n = op.grid.n;
    if (!std::isfinite(uL) || !std::isfinite(uR))
        throw std::invalid_argument("solve_steady_boundary: non-finite boundary value");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    const double ih2 = 1.0 / (op.grid.h * op.grid.h);
    rhs[0] += uL * ih2;
    rhs[n - 1] += uR * ih2;
    Eigen::VectorXd y = op.from_modal(
        (op.to_modal(rhs).array() / op.eigenvalues.array()).matrix());
    SteadyPair p;
    p.state = State(std::move(y), Eigen::VectorXd::Zero(n));
    p.kind = SteadyKind::Boundary;
    p.control = Eigen::Vector2d(uL, uR);
    return p;
}

/// Residual of the steady equation, ||A0 y - rhs||_h, for self-checks.
inline double steady_residual(const DirichletOperator& op, const SteadyPair& p) {
    Eigen::VectorXd r = op.apply(p.state.y);
    if (p.kind == SteadyKind::Interior) {
        r -= p.chi.cwiseProduct(p.control);
    } else {
        const double ih2 = 1.0 / (op.grid.h * op.grid.h);
        r[0] -= p.control[0] * ih2;
        r[op.grid.n - 1] -= p.control[1] * ih2;
    }
    return std::sqrt(op.grid.h) * r.norm();
}

/// min_j y_j - sigma: a nonnegative value certifies the discrete lower bound y >= sigma.
inline double check_lower_bound(const SteadyPair& p, double sigma) {
    return p.state.y.minCoeff() - sigma;
}

}  // namespace wavectrl
