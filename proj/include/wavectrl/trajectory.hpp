#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "wavectrl/report.hpp"
#include "wavectrl/smooth_control.hpp"

namespace wavectrl {

/// A controlled trajectory known around an anchor time: the control is evaluable on
/// the lattice near the anchor, the state is known at the anchor, and the asserted
/// time smoothness is the caller's responsibility (the shipped constructors satisfy it).
struct ControlledTrajectory {
    Support support;
    std::function<Eigen::VectorXd(double)> control_at;  // absolute trajectory time
    double anchor = 0.0;
    State state_at_anchor;
    int smoothness = 1;

    ControlledTrajectory() : support(BoundarySupport{}) {}
};

/// Trajectory holding a steady pair forever (any anchor works).
inline ControlledTrajectory steady_trajectory(const SteadyPair& pair, double anchor = 0.0) {
    ControlledTrajectory t;
    if (pair.kind == SteadyKind::Boundary) {
        t.support = BoundarySupport{true, true};
    } else {
        t.support = InteriorSupport{pair.chi};
    }
    Eigen::VectorXd u = pair.control;
    t.control_at = [u](double) { return u; };
    t.anchor = anchor;
    t.state_at_anchor = pair.state;
    t.smoothness = 8;  // constant in time
    return t;
}

/// The zero trajectory (zero control, zero state).
inline ControlledTrajectory zero_trajectory(const DirichletOperator& op,
                                            const Support& support) {
    ControlledTrajectory t;
    t.support = support;
    const int ch = support_channels(support, op.grid.n);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(ch);
    t.control_at = [z](double) { return z; };
    t.state_at_anchor = State::zero(op.grid.n);
    t.smoothness = 8;
    return t;
}

/// Trajectory of the control u(t) = base * (1 + amp * zeta(t - peak)): a smooth bump
/// around `peak` riding on a steady control. Anchored mid-bump the state carries a
/// genuine nonzero velocity. Requires |amp| <= 1 so the control stays nonnegative.
inline ControlledTrajectory bump_trajectory(const DirichletOperator& op,
                                            const SteadyPair& base, double amp,
                                            double peak, double anchor, double dt) {
    if (std::abs(amp) > 1.0)
        throw std::invalid_argument("bump_trajectory: |amp| must be at most 1");
    ControlledTrajectory t = steady_trajectory(base, anchor);
    Eigen::VectorXd u0 = base.control;
    t.control_at = [u0, amp, peak](double tau) {
        return ((1.0 + amp * cutoff_zeta(tau - peak)) * u0).eval();
    };
    // March from the steady state at the foot of the bump up to the anchor.
    const double start = peak - 1.0;
    if (anchor > start) {
        const int steps = lattice_steps(anchor - start, dt);
        Eigen::MatrixXd samples(steps + 1, u0.size());
        for (int i = 0; i <= steps; ++i)
            samples.row(i) = t.control_at(start + i * dt).transpose();
        ControlSignal sig(dt, std::move(samples), t.support);
        t.state_at_anchor =
            propagate(op, base.state, sig, anchor - start).final_state();
    }
    t.smoothness = 2;
    return t;
}

namespace detail {

inline Eigen::VectorXd eval_nonneg(const ControlledTrajectory& traj, double tau) {
    Eigen::VectorXd u = traj.control_at(tau);
    if (u.minCoeff() < 0.0)
        throw std::domain_error("trajectory control sample is negative");
    return u;
}

inline SteadyPair steady_of_sigma(const DirichletOperator& op, const Support& support,
                                  const Eigen::VectorXd& sigma) {
    if (is_boundary(support)) return solve_steady_boundary(op, sigma[0], sigma[1]);
    return solve_steady_interior(op, sigma, std::get<InteriorSupport>(support).chi);
}

}  // namespace detail

/// Blend of the initial trajectory's control into the constant interior-cone element
/// sigma over (0,1): rho(t) u0(tau0 + t) + (1 - rho(t)) sigma. Nonnegative samplewise.
inline ControlSignal build_phase1(const ControlledTrajectory& traj0,
                                  const Eigen::VectorXd& sigma, double dt) {
    const int steps = lattice_steps(1.0, dt);
    Eigen::MatrixXd samples(steps + 1, sigma.size());
    for (int i = 0; i <= steps; ++i) {
        const double t = i * dt;
        const double r = cutoff_rho(t);
        samples.row(i) =
            (r * detail::eval_nonneg(traj0, traj0.anchor + t) + (1.0 - r) * sigma)
                .transpose();
    }
    return ControlSignal(dt, std::move(samples), traj0.support);
}

struct Phase3 {
    ControlSignal control;  // on the final unit window (T-1, T), local clock
    State start;            // reference state at T-1 obtained by backward propagation
};

/// Blend from sigma back onto the target trajectory over the final unit window:
/// zeta(t-T) u1(t - T + tau1) + (1 - zeta(t-T)) sigma, plus the backward-propagated
/// reference state. Requires a coercive operator (time-reversible propagation).
inline Phase3 build_phase3(const DirichletOperator& op, const ControlledTrajectory& traj1,
                           const Eigen::VectorXd& sigma, double dt) {
    if (!check_coercive(op))
        throw std::domain_error("build_phase3: non-coercive operator, no backward group");
    const int steps = lattice_steps(1.0, dt);
    Eigen::MatrixXd samples(steps + 1, sigma.size());
    for (int i = 0; i <= steps; ++i) {
        const double s = -1.0 + i * dt;  // t - T
        const double z = cutoff_zeta(s);
        samples.row(i) =
            (z * detail::eval_nonneg(traj1, traj1.anchor + s) + (1.0 - z) * sigma)
                .transpose();
    }
    Phase3 out{ControlSignal(dt, std::move(samples), traj1.support), State()};
    out.start = propagate_backward(op, traj1.state_at_anchor, out.control, 1.0);
    return out;
}

struct SmallControlResult {
    ControlSignal control;  // on (0, segments * T0)
    int segments = 0;
    double sup_norm = 0.0;
    double residual_rel = 0.0;  // worst retained-mode residual among segments
};

/// Null control of amplitude at most epsilon: split the defect into 2^ceil shares so
/// that halving epsilon exactly doubles the segment count, and steer each share to
/// rest with a smooth transfer while the remainder rides the free group.
inline SmallControlResult small_null_control(SmoothController& solver, const State& eta0,
                                             double epsilon, int forced_segments = 0) {
    if (epsilon <= 0.0) throw std::invalid_argument("small_null_control: epsilon > 0");
    const DirichletOperator& op = *solver.problem().op;
    const double norm0 = detail::energy_norm(op, eta0);
    const double t0 = solver.window();

    int N = forced_segments;
    if (N <= 0) {
        if (norm0 == 0.0) {
            N = 1;
        } else {
            const double x = solver.state_constant() * norm0 / epsilon;
            N = 1 << std::max(0, static_cast<int>(std::ceil(std::log2(x))) + 1);
        }
    }

    SmallControlResult out;
    out.segments = N;
    State current = eta0;
    ControlSignal total;
    for (int k = 0; k < N; ++k) {
        const double share = static_cast<double>(N - k - 1) / (N - k);
        State drift = free_evolve(op, current, t0);
        State target(share * drift.y, share * drift.v);
        MinNormResult mn = solver.transfer(current, target);
        out.residual_rel = std::max(out.residual_rel, mn.residual_rel);
        out.sup_norm = std::max(out.sup_norm, mn.control.samples.cwiseAbs().maxCoeff());
        total = (k == 0) ? mn.control : concat_signals(total, mn.control);
        current = target;
    }
    out.control = std::move(total);
    return out;
}

/// Three-phase constrained link between states on two nonnegatively controlled
/// trajectories: blend off the source trajectory, steer the junction defect to zero
/// with a control of amplitude at most epsilon riding on sigma, and blend onto the
/// backward-propagated reference that ends on the target state.
inline SynthesisReport link(const DirichletOperator& op, const ControlledTrajectory& traj0,
                            const ControlledTrajectory& traj1,
                            const Eigen::VectorXd& sigma, double epsilon,
                            double t0, double dt, int mode_cut,
                            ControlSignal* control_out = nullptr, int smooth_terms = 0) {
    SynthesisReport rep;
    rep.kind = "link";
    rep.epsilon = epsilon;
    if (traj0.support.index() != traj1.support.index())
        throw std::invalid_argument("link: trajectory supports differ");
    if (sigma.size() != support_channels(traj0.support, op.grid.n))
        throw std::invalid_argument("link: sigma channel mismatch");
    if (sigma.minCoeff() <= 0.0)
        throw std::invalid_argument("link: sigma must be strictly positive");
    if (epsilon > 0.5 * sigma.minCoeff())
        throw std::invalid_argument("link: epsilon above half the sigma margin");

    SmoothController solver(op, traj0.support, mode_cut, t0, dt, smooth_terms);

    ControlSignal phase1 = build_phase1(traj0, sigma, dt);
    State x1 = propagate(op, traj0.state_at_anchor, phase1, 1.0).final_state();

    Phase3 phase3 = build_phase3(op, traj1, sigma, dt);

    SteadyPair psi = detail::steady_of_sigma(op, traj0.support, sigma);
    State d0(x1.y - psi.state.y, x1.v);
    State d1(phase3.start.y - psi.state.y, phase3.start.v);
    const double bound = detail::energy_norm(op, d0) + detail::energy_norm(op, d1);

    int N = 1;
    if (bound > 0.0) {
        const double x = solver.state_constant() * bound / epsilon;
        N = 1 << std::max(0, static_cast<int>(std::ceil(std::log2(x))) + 1);
    }
    const double middle = N * t0;

    // Reference state at the phase-2 junction: the deviation from psi rides the free
    // group backward over the middle window.
    State d1_at_1 = free_evolve(op, d1, -middle);
    State phi_at_1(psi.state.y + d1_at_1.y, d1_at_1.v);
    State defect(x1.y - phi_at_1.y, x1.v - phi_at_1.v);

    SmallControlResult small = small_null_control(solver, defect, epsilon, N);
    rep.c_est = solver.state_constant();
    rep.n0 = small.segments;
    rep.step_residual_rel = small.residual_rel;

    // Middle control = sigma + w.
    Eigen::MatrixXd mid = small.control.samples;
    mid.rowwise() += sigma.transpose();
    ControlSignal phase2(dt, std::move(mid), traj0.support);

    ControlSignal full = concat_signals(concat_signals(phase1, phase2), phase3.control);
    const double T = full.horizon();
    rep.t_total = T;
    rep.min_control = full.min_sample();

    State fin = propagate(op, traj0.state_at_anchor, full, T).final_state();
    const State& target = traj1.state_at_anchor;
    rep.final_error_rel =
        detail::energy_norm(op, State(fin.y - target.y, fin.v - target.v)) /
        (1.0 + detail::energy_norm(op, target));

    if (rep.min_control < 0.0) {
        rep.failure = "negative control sample (epsilon too large)";
        rep.ok = false;
    } else {
        rep.ok = rep.final_error_rel <= kTolReach;
        if (!rep.ok) rep.failure = "end condition above tolerance";
    }
    if (control_out) *control_out = std::move(full);
    return rep;
}

}  // namespace wavectrl
