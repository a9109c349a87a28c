#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "wavectrl/control.hpp"
#include "wavectrl/nnls.hpp"
#include "wavectrl/operator.hpp"
#include "wavectrl/propagator.hpp"
#include "wavectrl/state.hpp"
#include "wavectrl/steady.hpp"

namespace wavectrl {

constexpr double kSvdCutoffRel = 1e-10;
constexpr double kTolReach = 1e-8;      // relative, min-norm reach verdict
constexpr double kTolFeasRel = 1e-6;    // relative, constrained feasibility verdict
constexpr double kTolFeasAbs = 1e-10;

enum class TemporalBasis { Raw, Smooth };

/// A control synthesis problem: horizon, lattice, actuation support, controlled
/// subspace (first mode_cut modes) and the temporal control basis. Raw uses one hat
/// per lattice node so coefficients are the control samples; Smooth uses polynomial
/// bump profiles vanishing with smooth_exponent derivatives at both window ends.
struct ControlProblem {
    const DirichletOperator* op = nullptr;
    double horizon = 0;
    double dt = 0;
    Support support = BoundarySupport{};
    int mode_cut = 0;
    TemporalBasis basis = TemporalBasis::Raw;
    int smooth_exponent = 1;
    int smooth_terms = 0;  // per channel; 0 selects a default

    int steps() const { return lattice_steps(horizon, dt); }

    int channels() const {
        if (is_boundary(support)) return std::get<BoundarySupport>(support).channels();
        return basis == TemporalBasis::Smooth ? mode_cut : op->grid.n;
    }

    int resolved_smooth_terms() const {
        if (smooth_terms > 0) return smooth_terms;
        return is_boundary(support) ? mode_cut + 8 : 6;
    }

    /// True when the horizon is below the geometric travel-time threshold.
    bool short_horizon() const {
        return horizon < control_time_threshold(support, op->grid) - 1e-12;
    }

    void validate() const {
        if (!op) throw std::invalid_argument("ControlProblem: missing operator");
        if (mode_cut < 1 || mode_cut > op->grid.n)
            throw std::invalid_argument("ControlProblem: mode_cut out of range");
        if (steps() < 1) throw std::invalid_argument("ControlProblem: horizon below one step");
    }
};

inline int default_mode_cut(int n) { return std::max(1, n / 8); }

namespace detail {

/// Energy weighting on the retained modes: position sqrt(lambda), velocity 1, so the
/// Euclidean norm of the stacked vector is the energy norm. Nonpositive eigenvalues
/// (non-coercive potentials) fall back to unit weight.
inline Eigen::VectorXd mode_weights(const DirichletOperator& op, int M) {
    Eigen::VectorXd w(M);
    for (int k = 0; k < M; ++k)
        w[k] = op.eigenvalues[k] > 0 ? std::sqrt(op.eigenvalues[k]) : 1.0;
    return w;
}

inline Eigen::VectorXd weighted_modal(const DirichletOperator& op, int M, const State& s) {
    Eigen::VectorXd a = op.to_modal(s.y).head(M);
    Eigen::VectorXd b = op.to_modal(s.v).head(M);
    Eigen::VectorXd out(2 * M);
    out.head(M) = mode_weights(op, M).cwiseProduct(a);
    out.tail(M) = b;
    return out;
}

/// Modal forcing direction of each control channel, restricted to the first M modes.
inline Eigen::MatrixXd channel_directions(const ControlProblem& p) {
    const DirichletOperator& op = *p.op;
    const int M = p.mode_cut;
    if (is_boundary(p.support)) {
        const auto& bs = std::get<BoundarySupport>(p.support);
        Eigen::MatrixXd d(M, bs.channels());
        int col = 0;
        if (bs.left) {
            for (int k = 0; k < M; ++k) d(k, col) = op.boundary_coeff(k)[0];
            ++col;
        }
        if (bs.right)
            for (int k = 0; k < M; ++k) d(k, col) = op.boundary_coeff(k)[1];
        return d;
    }
    const auto& chi = std::get<InteriorSupport>(p.support).chi;
    if (p.basis == TemporalBasis::Smooth) {
        // Channel i is the spatial profile phi_i; the actuator applies chi * phi_i.
        Eigen::MatrixXd d(M, M);
        for (int i = 0; i < M; ++i)
            d.col(i) = op.to_modal(chi.cwiseProduct(op.modes.col(i))).head(M);
        return d;
    }
    // Raw interior: channel j is the grid point j.
    Eigen::MatrixXd d(M, op.grid.n);
    for (int j = 0; j < op.grid.n; ++j)
        d.col(j) = op.grid.h * chi[j] * op.modes.row(j).head(M).transpose();
    return d;
}

/// Sampled smooth temporal basis on the window [0, T]: column j is
/// (t(T-t))^(s+1) * Cheb_j(2t/T - 1), max-normalized.
inline Eigen::MatrixXd smooth_basis_samples(double T, double dt, int steps, int q, int s) {
    Eigen::MatrixXd B(steps + 1, q);
    for (int i = 0; i <= steps; ++i) {
        const double t = std::min(i * dt, T);
        const double xi = 2.0 * t / T - 1.0;
        const double bump = std::pow(t * (T - t) * 4.0 / (T * T), s + 1);
        double tm2 = 1.0, tm1 = xi;
        for (int j = 0; j < q; ++j) {
            double cheb;
            if (j == 0) cheb = 1.0;
            else if (j == 1) cheb = xi;
            else {
                cheb = 2.0 * xi * tm1 - tm2;
                tm2 = tm1;
                tm1 = cheb;
            }
            B(i, j) = bump * cheb;
        }
    }
    for (int j = 0; j < q; ++j) {
        const double m = B.col(j).cwiseAbs().maxCoeff();
        if (m > 0) B.col(j) /= m;
    }
    return B;
}

}  // namespace detail

/// The discrete input map: columns are the energy-weighted modal responses at time T
/// of the control basis elements, propagated exactly from rest.
class InputMap {
  public:
    ControlProblem problem;
    Eigen::MatrixXd columns;       // (2M) x K
    Eigen::MatrixXd basis_samples; // Smooth only: (steps+1) x q

    const Eigen::BDCSVD<Eigen::MatrixXd>& svd() const {
        if (!svd_) {
            svd_.emplace(columns, Eigen::ComputeThinU | Eigen::ComputeThinV);
        }
        return *svd_;
    }

    double smallest_singular_value() const { return svd().singularValues().minCoeff(); }
    double condition_number() const {
        const auto& s = svd().singularValues();
        return s.maxCoeff() / s.minCoeff();
    }

    /// Least-squares coefficients through the truncated pseudoinverse.
    Eigen::VectorXd pseudo_solve(const Eigen::VectorXd& b, double cutoff_rel = kSvdCutoffRel) const {
        const auto& dec = svd();
        const Eigen::VectorXd& sv = dec.singularValues();
        const double cut = cutoff_rel * sv.maxCoeff();
        Eigen::VectorXd utb = dec.matrixU().transpose() * b;
        for (int i = 0; i < sv.size(); ++i) utb[i] = sv[i] > cut ? utb[i] / sv[i] : 0.0;
        return dec.matrixV() * utb;
    }

    /// Materialize the piecewise-linear control signal of a coefficient vector.
    ControlSignal signal(const Eigen::VectorXd& coeffs) const {
        const ControlProblem& p = problem;
        const int steps = p.steps();
        const int n = p.op->grid.n;
        if (is_boundary(p.support)) {
            const int ch = p.channels();
            Eigen::MatrixXd samples(steps + 1, ch);
            if (p.basis == TemporalBasis::Raw) {
                for (int c = 0; c < ch; ++c)
                    samples.col(c) = coeffs.segment(c * (steps + 1), steps + 1);
            } else {
                const int q = p.resolved_smooth_terms();
                for (int c = 0; c < ch; ++c)
                    samples.col(c) = basis_samples * coeffs.segment(c * q, q);
            }
            return ControlSignal(p.dt, std::move(samples), p.support);
        }
        const auto& chi = std::get<InteriorSupport>(p.support).chi;
        if (p.basis == TemporalBasis::Raw) {
            Eigen::MatrixXd samples(steps + 1, n);
            for (int j = 0; j < n; ++j)
                samples.col(j) = coeffs.segment(j * (steps + 1), steps + 1);
            return ControlSignal(p.dt, std::move(samples), InteriorSupport{chi});
        }
        const int q = p.resolved_smooth_terms();
        const int M = p.mode_cut;
        Eigen::MatrixXd C(q, M);
        for (int i = 0; i < M; ++i) C.col(i) = coeffs.segment(i * q, q);
        Eigen::MatrixXd samples = basis_samples * C * p.op->modes.leftCols(M).transpose();
        return ControlSignal(p.dt, std::move(samples), InteriorSupport{chi});
    }

  private:
    mutable std::optional<Eigen::BDCSVD<Eigen::MatrixXd>> svd_;
};

/// Assemble the input map. Raw columns use the closed two-step hat response followed
/// by one exact free rotation; Smooth columns are exact modal marches of each basis
/// element. Rank deficiency is recorded, not rejected.
inline InputMap assemble_input_map(const ControlProblem& p) {
    p.validate();
    const DirichletOperator& op = *p.op;
    const int M = p.mode_cut;
    const int steps = p.steps();
    const double dt = p.dt;
    const Eigen::VectorXd lambda = op.eigenvalues.head(M);
    const Eigen::VectorXd w = detail::mode_weights(op, M);
    const Eigen::MatrixXd dirs = detail::channel_directions(p);
    const int nch = static_cast<int>(dirs.cols());

    InputMap map;
    map.problem = p;

    if (p.basis == TemporalBasis::Raw) {
        const int K = nch * (steps + 1);
        map.columns.resize(2 * M, K);
        const detail::ModalKernel ker = detail::build_kernel(lambda, dt);
        for (int k = 0; k < M; ++k) {
            const double lam = lambda[k];
            const double C = ker.C[k], S = ker.S[k], G1 = ker.G1[k], G2 = ker.G2[k];
            // Unit hat responses at the step following the hat's support.
            const double aF = dt * dt * (G1 - G2), bF = dt * (S - G1);  // half hat at node 0
            const double aU = dt * dt * G2, bU = dt * G1;               // ramp up 0 -> 1
            const double aG = C * aU + dt * S * bU + dt * dt * (G1 - G2);
            const double bG = -dt * lam * S * aU + C * bU + dt * (S - G1);
            for (int i = 0; i <= steps; ++i) {
                double a, b, remaining;
                if (i == 0) {
                    a = aF; b = bF; remaining = (steps - 1) * dt;
                } else if (i == steps) {
                    a = aU; b = bU; remaining = 0.0;
                } else {
                    a = aG; b = bG; remaining = (steps - i - 1) * dt;
                }
                if (remaining > 0) detail::modal_free(lam, remaining, a, b);
                for (int c = 0; c < nch; ++c) {
                    const int col = c * (steps + 1) + i;
                    map.columns(k, col) = w[k] * a * dirs(k, c);
                    map.columns(M + k, col) = b * dirs(k, c);
                }
            }
        }
        return map;
    }

    const int q = p.resolved_smooth_terms();
    map.basis_samples = detail::smooth_basis_samples(p.horizon, dt, steps, q,
                                                     p.smooth_exponent);
    map.columns.resize(2 * M, nch * q);
    const detail::ModalKernel ker = detail::build_kernel(lambda, dt);
    for (int c = 0; c < nch; ++c) {
        for (int j = 0; j < q; ++j) {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(M), b = Eigen::VectorXd::Zero(M);
            for (int i = 0; i < steps; ++i) {
                detail::modal_step(ker, lambda, a, b,
                                   map.basis_samples(i, j) * dirs.col(c),
                                   map.basis_samples(i + 1, j) * dirs.col(c));
            }
            const int col = c * q + j;
            map.columns.col(col).head(M) = w.cwiseProduct(a);
            map.columns.col(col).tail(M) = b;
        }
    }
    return map;
}

struct MinNormResult {
    ControlSignal control;
    Eigen::VectorXd coeffs;
    double residual_rel = 0.0;
    double residual_abs = 0.0;
    double defect_norm = 0.0;
    bool reached(double tol = kTolReach) const { return residual_rel <= tol; }
};

/// Weighted modal defect between a target and the free evolution of the source.
inline Eigen::VectorXd modal_defect(const InputMap& map, const State& y_from,
                                    const State& y_to) {
    const ControlProblem& p = map.problem;
    State drift = free_evolve(*p.op, y_from, p.horizon);
    return detail::weighted_modal(*p.op, p.mode_cut, y_to) -
           detail::weighted_modal(*p.op, p.mode_cut, drift);
}

/// Minimal-norm control through the truncated pseudoinverse of the input map.
/// The residual is reported in the energy norm on the retained modes, relative to
/// the defect; above kTolReach the target is flagged unreachable at this resolution.
inline MinNormResult min_norm_control(const InputMap& map, const State& y_from,
                                      const State& y_to) {
    Eigen::VectorXd b = modal_defect(map, y_from, y_to);
    MinNormResult r;
    r.coeffs = map.pseudo_solve(b);
    r.defect_norm = b.norm();
    r.residual_abs = (map.columns * r.coeffs - b).norm();
    r.residual_rel = r.residual_abs / std::max(r.defect_norm, 1e-300);
    if (r.defect_norm == 0.0) r.residual_rel = 0.0;
    r.control = map.signal(r.coeffs);
    return r;
}

enum class Feasibility { Feasible, Infeasible, Inconclusive };

struct FeasibilityResult {
    Feasibility verdict = Feasibility::Inconclusive;
    ControlSignal control;
    double residual_abs = 0.0;
    double defect_norm = 0.0;
    int iterations = 0;
    bool feasible() const { return verdict == Feasibility::Feasible; }
};

/// Lower-bounded least squares feasibility through the active-set solver. Requires a
/// Raw map so that coefficient bounds coincide with pointwise sample bounds.
inline FeasibilityResult nnls_feasibility(const InputMap& map, const State& y_from,
                                          const State& y_to, double lower_bound,
                                          double tol_rel = kTolFeasRel,
                                          double tol_abs = kTolFeasAbs) {
    if (map.problem.basis != TemporalBasis::Raw)
        throw std::invalid_argument("nnls_feasibility: Raw temporal basis required");
    Eigen::VectorXd b = modal_defect(map, y_from, y_to);
    const int K = static_cast<int>(map.columns.cols());
    NnlsResult sol = nnls(map.columns, b, Eigen::VectorXd::Constant(K, lower_bound));
    FeasibilityResult out;
    out.defect_norm = b.norm();
    out.residual_abs = sol.residual;
    out.iterations = sol.iterations;
    out.control = map.signal(sol.x);
    if (!sol.optimal && sol.residual > tol_rel * out.defect_norm + tol_abs)
        out.verdict = Feasibility::Inconclusive;
    else
        out.verdict = (sol.residual <= tol_rel * out.defect_norm + tol_abs)
                          ? Feasibility::Feasible
                          : Feasibility::Infeasible;
    return out;
}

}  // namespace wavectrl
