#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "wavectrl/controllability.hpp"
#include "wavectrl/propagator.hpp"

namespace wavectrl {

enum class Regime { Unconstrained, ControlNonneg, ControlAndStateNonneg };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Unconstrained: return "unconstrained";
        case Regime::ControlNonneg: return "control_nonneg";
        default: return "control_state_nonneg";
    }
}

constexpr double kTolState = 1e-8;

struct MinTimeQuery {
    const DirichletOperator* op = nullptr;
    State y_from, y_to;
    Regime regime = Regime::ControlNonneg;
    double t_lo = 0, t_hi = 0;  // bracket
    double dt = 0;
    double resolution = 0;  // >= dt; 0 selects dt
    int mode_cut = 0;       // 0 selects n/8
    Support support = BoundarySupport{true, true};
    double tol_state = kTolState;

    double resolved_resolution() const { return resolution > 0 ? resolution : dt; }
    int resolved_mode_cut() const {
        return mode_cut > 0 ? mode_cut : default_mode_cut(op->grid.n);
    }

    void validate() const {
        if (!op) throw std::invalid_argument("MinTimeQuery: missing operator");
        if (!(t_lo < t_hi)) throw std::invalid_argument("MinTimeQuery: bracket order");
        if (resolved_resolution() < dt - 1e-12)
            throw std::invalid_argument("MinTimeQuery: resolution below dt");
    }
};

struct FeasibleAtResult {
    Feasibility verdict = Feasibility::Inconclusive;
    double residual_rel = 0.0;
    std::optional<ControlSignal> witness;
    double min_state = std::numeric_limits<double>::quiet_NaN();
    bool state_checked = false;
    int penalty_rounds = 0;
    bool feasible() const { return verdict == Feasibility::Feasible; }
};

namespace detail {

/// Position response rows of the Raw input map at chosen space-time samples:
/// row r maps control coefficients to y(t_r, x_r) (zero initial data). All modes
/// enter, not only the controlled ones: the samples see the physical state.
inline Eigen::MatrixXd state_rows(const InputMap& map,
                                  const std::vector<std::pair<int, int>>& samples) {
    const ControlProblem& p = map.problem;
    const DirichletOperator& op = *p.op;
    const int n = op.grid.n;
    const int steps = p.steps();
    const double dt = p.dt;
    ControlProblem full = p;
    full.mode_cut = n;
    const Eigen::MatrixXd dirs = channel_directions(full);
    const int nch = static_cast<int>(dirs.cols());
    const detail::ModalKernel ker = detail::build_kernel(op.eigenvalues, dt);

    Eigen::MatrixXd rows(samples.size(), nch * (steps + 1));
    rows.setZero();
    for (size_t r = 0; r < samples.size(); ++r) {
        const auto [it, jx] = samples[r];
        for (int k = 0; k < n; ++k) {
            const double lam = op.eigenvalues[k];
            const double C = ker.C[k], S = ker.S[k], G1 = ker.G1[k], G2 = ker.G2[k];
            const double aF = dt * dt * (G1 - G2), bF = dt * (S - G1);
            const double aU = dt * dt * G2, bU = dt * G1;
            const double aG = C * aU + dt * S * bU + dt * dt * (G1 - G2);
            const double bG = -dt * lam * S * aU + C * bU + dt * (S - G1);
            const double phi = op.modes(jx, k);
            for (int i = 0; i <= it; ++i) {
                double a, b, remaining;
                if (i == 0) {
                    a = aF; b = bF; remaining = (it - 1) * dt;
                } else if (i == it) {
                    a = aU; b = bU; remaining = 0.0;
                } else {
                    a = aG; b = bG; remaining = (it - i - 1) * dt;
                }
                if (remaining > 0) detail::modal_free(lam, remaining, a, b);
                for (int c = 0; c < nch; ++c)
                    rows(r, c * (steps + 1) + i) += phi * a * dirs(k, c);
            }
        }
    }
    return rows;
}

}  // namespace detail

/// Feasibility of reaching y_to from y_from at horizon T under the query's regime.
/// The unconstrained regime is the reach test of the truncated pseudoinverse; the
/// constrained regimes run lower-bounded least squares (an exact unconstrained lower
/// bound short-circuits hopeless probes). State-regime infeasibility is witness-based:
/// after a penalty sweep fails to produce a nonnegative-state witness it is reported
/// infeasible-at-T, not certified.
inline FeasibleAtResult feasible_at(const MinTimeQuery& q, double T) {
    q.validate();
    const DirichletOperator& op = *q.op;
    ControlProblem p{&op, T, q.dt, q.support, q.resolved_mode_cut(), TemporalBasis::Raw};
    InputMap map = assemble_input_map(p);
    FeasibleAtResult out;

    MinNormResult mn = min_norm_control(map, q.y_from, q.y_to);
    if (q.regime == Regime::Unconstrained) {
        out.residual_rel = mn.residual_rel;
        out.verdict = mn.reached() ? Feasibility::Feasible : Feasibility::Infeasible;
        if (mn.reached()) out.witness = std::move(mn.control);
        return out;
    }

    // Exact shortcut: the constrained residual can never beat the unconstrained one.
    if (mn.residual_rel > kTolFeasRel) {
        out.residual_rel = mn.residual_rel;
        out.verdict = Feasibility::Infeasible;
        return out;
    }
    // Exact shortcut the other way: a nonnegative min-norm control is itself a witness.
    if (mn.control.min_sample() >= 0.0) {
        out.residual_rel = mn.residual_rel;
        out.verdict = Feasibility::Feasible;
        out.witness = std::move(mn.control);
    } else {
        FeasibilityResult fr = nnls_feasibility(map, q.y_from, q.y_to, 0.0);
        out.residual_rel = fr.residual_abs / std::max(fr.defect_norm, 1e-300);
        out.verdict = fr.verdict;
        if (!fr.feasible()) return out;
        out.witness = fr.control;
    }
    if (q.regime == Regime::ControlNonneg) return out;

    // Control-and-state regime: propagate the witness and check the state floor.
    auto state_min = [&](const ControlSignal& u) {
        Trajectory tr = propagate(op, q.y_from, u, T);
        return std::make_pair(tr.pos.minCoeff(), std::move(tr));
    };
    auto [mstate, traj] = state_min(*out.witness);
    out.state_checked = true;
    out.min_state = mstate;
    if (mstate >= -q.tol_state) return out;

    // Penalty retries: accumulate the worst violated samples round by round and pull
    // the state there toward the natural level of the query data.
    Eigen::VectorXd b = modal_defect(map, q.y_from, q.y_to);
    const int K = static_cast<int>(map.columns.cols());
    Trajectory free_traj = propagate(
        op, q.y_from, ControlSignal::zero(q.dt, p.steps(), q.support, op.grid.n), T);
    const double level =
        std::max(0.0, std::min(q.y_from.y.minCoeff(), q.y_to.y.minCoeff()));
    std::vector<std::pair<int, int>> samples;
    Eigen::MatrixXd S(0, K);
    for (double w = 1.0; w <= 1e6; w *= 10.0) {
        ++out.penalty_rounds;
        // Worst violations of the best trajectory so far, thinned over the lattice.
        std::vector<std::tuple<double, int, int>> viols;
        for (int i = 0; i <= traj.steps(); i += 2)
            for (int j = 0; j < op.grid.n; j += 2)
                if (traj.pos(i, j) < -q.tol_state) viols.emplace_back(traj.pos(i, j), i, j);
        if (viols.empty()) break;
        std::sort(viols.begin(), viols.end());
        std::vector<std::pair<int, int>> fresh;
        for (const auto& [v, i, j] : viols) {
            bool close = false;
            for (const auto& [si, sj] : samples)
                if (std::abs(si - i) < 8 && std::abs(sj - j) < 8) close = true;
            if (!close) {
                fresh.emplace_back(i, j);
                samples.emplace_back(i, j);
            }
            if (fresh.size() >= 64) break;
        }
        if (!fresh.empty()) {
            Eigen::MatrixXd add = detail::state_rows(map, fresh);
            S.conservativeResize(S.rows() + add.rows(), K);
            S.bottomRows(add.rows()) = add;
        }
        Eigen::VectorXd s_target(samples.size());
        for (size_t r = 0; r < samples.size(); ++r)
            s_target[r] = level - free_traj.pos(samples[r].first, samples[r].second);
        const double sw = std::sqrt(w);
        Eigen::MatrixXd A(map.columns.rows() + S.rows(), K);
        A.topRows(map.columns.rows()) = map.columns;
        A.bottomRows(S.rows()) = sw * S;
        Eigen::VectorXd rhs(b.size() + s_target.size());
        rhs.head(b.size()) = b;
        rhs.tail(s_target.size()) = sw * s_target;
        NnlsResult sol = nnls(A, rhs, Eigen::VectorXd::Zero(K));
        ControlSignal cand = map.signal(sol.x);
        const double resid = (map.columns * sol.x - b).norm();
        if (resid > kTolFeasRel * b.norm() + kTolFeasAbs) continue;
        auto [ms2, tr2] = state_min(cand);
        if (ms2 >= -q.tol_state) {
            out.witness = std::move(cand);
            out.min_state = ms2;
            out.residual_rel = resid / std::max(b.norm(), 1e-300);
            return out;
        }
        if (ms2 > mstate) {
            out.witness = std::move(cand);
            traj = std::move(tr2);
            mstate = ms2;
        }
    }
    out.min_state = mstate;
    out.verdict = Feasibility::Infeasible;  // witness-based, not certified
    return out;
}

struct ProbeRecord {
    double T = 0;
    Regime regime = Regime::ControlNonneg;
    bool feasible = false;
    double residual_rel = 0;
};

struct BisectResult {
    enum class Status { Ok, FeasibleAtLo, InfeasibleAtHi, Inconclusive };
    Status status = Status::Ok;
    double estimate = 0;     // smallest feasible lattice time found
    double uncertainty = 0;  // reported as +- 2 dt
    std::vector<ProbeRecord> probes;
    std::optional<ControlSignal> witness;
    bool ok() const { return status == Status::Ok; }
};

/// Lattice bisection of the feasibility boundary inside the bracket.
inline BisectResult bisect(const MinTimeQuery& q) {
    q.validate();
    BisectResult out;
    out.uncertainty = 2.0 * q.dt;
    long lo = std::lround(q.t_lo / q.dt);
    long hi = std::lround(q.t_hi / q.dt);
    if (lo < 1) lo = 1;
    if (hi <= lo) throw std::invalid_argument("bisect: bracket collapses on the lattice");
    const long res_steps = std::max(1L, std::lround(q.resolved_resolution() / q.dt));

    auto probe = [&](long s) {
        FeasibleAtResult r = feasible_at(q, s * q.dt);
        out.probes.push_back({s * q.dt, q.regime, r.feasible(), r.residual_rel});
        if (r.verdict == Feasibility::Inconclusive) out.status = BisectResult::Status::Inconclusive;
        return r;
    };

    FeasibleAtResult at_hi = probe(hi);
    if (!at_hi.feasible()) {
        out.status = BisectResult::Status::InfeasibleAtHi;
        out.estimate = hi * q.dt;
        return out;
    }
    out.witness = at_hi.witness;
    FeasibleAtResult at_lo = probe(lo);
    if (at_lo.feasible()) {
        out.status = BisectResult::Status::FeasibleAtLo;
        out.estimate = lo * q.dt;
        out.witness = at_lo.witness;
        return out;
    }

    while (hi - lo > res_steps) {
        const long mid = lo + (hi - lo) / 2;
        FeasibleAtResult r = probe(mid);
        if (r.feasible()) {
            hi = mid;
            out.witness = r.witness;
        } else {
            lo = mid;
        }
    }
    out.estimate = hi * q.dt;
    return out;
}

/// The explicit traveling-ramp endpoint controls for T > 1: constant before the wave
/// arrives, affine to the target value afterwards. Exact breakpoint representation.
inline std::pair<PiecewiseLinearBoundaryData, PiecewiseLinearBoundaryData> prop51_controls(
    double y00, double y10, double T) {
    if (!(T > 1.0)) throw std::invalid_argument("prop51_controls: requires T > 1");
    if (y00 < 0.0 || y10 < 0.0)
        throw std::invalid_argument("prop51_controls: endpoint values must be nonnegative");
    PiecewiseLinearBoundaryData u0{{0.0, 1.0, T}, {y00, y00, y10}};
    PiecewiseLinearBoundaryData u1{{0.0, T - 1.0, T}, {y00, y10, y10}};
    return {u0, u1};
}

/// The constant minimal-time control pair family: lambda = 0 gives (y00, y10); any
/// lambda in [0,1] reaches the same target at T = 1.
inline std::pair<double, double> prop51_min_time_controls(double y00, double y10,
                                                          double lambda) {
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("prop51_min_time_controls: lambda outside [0,1]");
    return {(1.0 - lambda) * y00 + lambda * y10, (1.0 - lambda) * y10 + lambda * y00};
}

}  // namespace wavectrl
