#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "wavectrl/grid.hpp"
#include "wavectrl/state.hpp"

namespace wavectrl {

/// Discrete Dirichlet operator -d^2/dx^2 + c(x) on (0,1): symmetric tridiagonal,
/// second-order centered differences on the interior points, full eigendecomposition.
///
/// Eigenvectors are orthonormal in the h-weighted inner product <f,g> = h * sum f_j g_j,
/// so modal coefficients are a_k = h * phi_k . y.
class DirichletOperator {
  public:
    Grid grid;
    Eigen::VectorXd potential;     // c(x_j)
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd modes;         // columns phi_k, h-orthonormal

    DirichletOperator() = default;

    /// Apply the tridiagonal stencil to a grid function (homogeneous boundary values).
    Eigen::VectorXd apply(const Eigen::VectorXd& y) const {
        const int n = grid.n;
        const double ih2 = 1.0 / (grid.h * grid.h);
        Eigen::VectorXd out(n);
        for (int j = 0; j < n; ++j) {
            double v = (2.0 * ih2 + potential[j]) * y[j];
            if (j > 0) v -= ih2 * y[j - 1];
            if (j + 1 < n) v -= ih2 * y[j + 1];
            out[j] = v;
        }
        return out;
    }

    /// Modal coefficients of a grid function.
    Eigen::VectorXd to_modal(const Eigen::VectorXd& y) const {
        return grid.h * (modes.transpose() * y);
    }

    Eigen::VectorXd from_modal(const Eigen::VectorXd& a) const { return modes * a; }

    /// Boundary influence coefficients: the eliminated stencil couples the state to the
    /// boundary values through e_1/h^2 and e_n/h^2. Row k is the modal coefficient of
    /// that forcing profile for endpoint (left,right).
    Eigen::Vector2d boundary_coeff(int mode) const {
        const double s = 1.0 / grid.h;  // h * phi_k(x_j) / h^2
        return {s * modes(0, mode), s * modes(grid.n - 1, mode)};
    }
};

/// Assemble the operator for potential samples c (length n, or length 1 broadcast).
inline DirichletOperator assemble(const Eigen::VectorXd& c_samples, int n) {
    DirichletOperator op;
    op.grid = Grid(n);
    if (c_samples.size() == 1) {
        op.potential = Eigen::VectorXd::Constant(n, c_samples[0]);
    } else if (c_samples.size() == n) {
        op.potential = c_samples;
    } else {
        throw std::invalid_argument("assemble: potential sample count must be 1 or n");
    }
    if (!op.potential.allFinite())
        throw std::invalid_argument("assemble: non-finite potential sample");

    const double ih2 = 1.0 / (op.grid.h * op.grid.h);
    Eigen::VectorXd diag = op.potential.array() + 2.0 * ih2;
    Eigen::VectorXd sub = Eigen::VectorXd::Constant(n - 1, -ih2);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("assemble: eigendecomposition failed");

    op.eigenvalues = solver.eigenvalues();
    // Rescale Euclidean-orthonormal vectors to h-weighted orthonormality and fix signs
    // so the first nonzero entry is positive (matches the sine convention for c = 0).
    op.modes = solver.eigenvectors() / std::sqrt(op.grid.h);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            double v = op.modes(j, k);
            if (v != 0.0) {
                if (v < 0.0) op.modes.col(k) = -op.modes.col(k);
                break;
            }
        }
    }
    return op;
}

inline DirichletOperator assemble(double c_const, int n) {
    Eigen::VectorXd c(1);
    c[0] = c_const;
    return assemble(c, n);
}

constexpr double kFredholmTol = 1e-8;

/// True iff zero is safely outside the spectrum, so steady solves are well posed.
inline bool check_fredholm(const DirichletOperator& op, double tol = kFredholmTol) {
    return op.eigenvalues.cwiseAbs().minCoeff() > tol;
}

/// True iff the operator is positive definite (discrete form of c > -lambda_1).
inline bool check_coercive(const DirichletOperator& op) {
    return op.eigenvalues[0] > 0.0;
}

struct EnergyNorm {
    const DirichletOperator* op = nullptr;
    bool coercive = false;

    explicit EnergyNorm(const DirichletOperator& o) : op(&o), coercive(check_coercive(o)) {}
};

/// Energy of a state: sum_k lambda_k a_k^2 + sum_k b_k^2 with (a,b) the modal
/// coefficients of (y, y_t). Defined only for coercive operators.
inline double energy(const State& s, const EnergyNorm& norm) {
    if (!norm.coercive)
        throw std::domain_error("energy: operator is not coercive, energy is not a norm");
    const DirichletOperator& op = *norm.op;
    Eigen::VectorXd a = op.to_modal(s.y);
    Eigen::VectorXd b = op.to_modal(s.v);
    return (op.eigenvalues.array() * a.array().square()).sum() + b.squaredNorm();
}

}  // namespace wavectrl
