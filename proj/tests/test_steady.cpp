#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "wavectrl/operator.hpp"
#include "wavectrl/propagator.hpp"
#include "wavectrl/steady.hpp"

using namespace wavectrl;

TEST_CASE("interior steady solve against closed forms") {
    const int n = 200;
    DirichletOperator op = assemble(0.0, n);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

    SECTION("zero control gives the zero state") {
        SteadyPair p = solve_steady_interior(op, Eigen::VectorXd::Zero(n), ones);
        CHECK(p.state.y.cwiseAbs().maxCoeff() < 1e-14);
    }

    SECTION("unit load gives x(1-x)/2 to O(h^2)") {
        SteadyPair p = solve_steady_interior(op, ones, ones);
        for (int j = 0; j < n; ++j) {
            const double x = op.grid.x[j];
            CHECK(std::abs(p.state.y[j] - 0.5 * x * (1.0 - x)) < 1e-12);
        }
        CHECK(steady_residual(op, p) <= 1e-9 * (1.0 + std::sqrt(op.grid.h) * ones.norm()));
    }

    SECTION("eigenmode load divides by the eigenvalue") {
        SteadyPair p = solve_steady_interior(op, op.modes.col(0), ones);
        Eigen::VectorXd expect = op.modes.col(0) / op.eigenvalues[0];
        CHECK((p.state.y - expect).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("boundary steady solve against closed forms") {
    const int n = 200;

    SECTION("constants are harmonic") {
        DirichletOperator op = assemble(0.0, n);
        SteadyPair p = solve_steady_boundary(op, 2.5, 2.5);
        CHECK((p.state.y.array() - 2.5).abs().maxCoeff() < 1e-10);
    }

    SECTION("affine profile") {
        DirichletOperator op = assemble(0.0, n);
        SteadyPair p = solve_steady_boundary(op, 0.0, 1.0);
        for (int j = 0; j < n; ++j)
            CHECK(std::abs(p.state.y[j] - op.grid.x[j]) < 1e-10);
    }

    SECTION("c = 5 gives the cosh profile to O(h^2)") {
        DirichletOperator op = assemble(5.0, n);
        SteadyPair p = solve_steady_boundary(op, 1.0, 1.0);
        const double r = std::sqrt(5.0);
        double max_err = 0.0;
        for (int j = 0; j < n; ++j) {
            const double expect =
                std::cosh(r * (op.grid.x[j] - 0.5)) / std::cosh(0.5 * r);
            max_err = std::max(max_err, std::abs(p.state.y[j] - expect));
        }
        CHECK(max_err < 2.0 * op.grid.h * op.grid.h);
    }
}

TEST_CASE("fredholm failure is refused") {
    const int n = 60;
    const double h = 1.0 / (n + 1);
    const double l1 = 2.0 / (h * h) * (1.0 - std::cos(M_PI * h));
    DirichletOperator op = assemble(-l1, n);
    REQUIRE_FALSE(check_fredholm(op));
    CHECK_THROWS_AS(solve_steady_boundary(op, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(
        solve_steady_interior(op, Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(n)),
        std::domain_error);
}

TEST_CASE("lower bound margins") {
    const int n = 150;

    SECTION("constant state sits on the bound") {
        DirichletOperator op = assemble(0.0, n);
        SteadyPair p = solve_steady_boundary(op, 1.0, 1.0);
        CHECK(std::abs(check_lower_bound(p, 1.0)) < 1e-10);
    }

    SECTION("cosh dip clears a bound below its minimum") {
        DirichletOperator op = assemble(5.0, n);
        SteadyPair p = solve_steady_boundary(op, 1.0, 1.0);
        // Dip value is 1/cosh(sqrt(5)/2) = 0.59078... at x = 1/2.
        CHECK(p.state.y.minCoeff() == Catch::Approx(1.0 / std::cosh(std::sqrt(5.0) / 2.0))
                                          .epsilon(1e-3));
        CHECK(check_lower_bound(p, 0.55) > 0.0);
        CHECK(check_lower_bound(p, 0.6) < 0.0);
    }

    SECTION("parabolic interior profile is positive") {
        DirichletOperator op = assemble(0.0, n);
        SteadyPair p = solve_steady_interior(op, Eigen::VectorXd::Ones(n),
                                             Eigen::VectorXd::Ones(n));
        CHECK(check_lower_bound(p, 0.0) > 0.0);
    }
}

TEST_CASE("solve is linear") {
    const int n = 90;
    DirichletOperator op = assemble(1.5, n);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd u1(n), u2(n);
    for (int j = 0; j < n; ++j) {
        u1[j] = u(rng);
        u2[j] = u(rng);
    }
    const double a = 0.7, b = -1.3;
    Eigen::VectorXd combo =
        solve_steady_interior(op, a * u1 + b * u2, ones).state.y;
    Eigen::VectorXd parts = a * solve_steady_interior(op, u1, ones).state.y +
                            b * solve_steady_interior(op, u2, ones).state.y;
    CHECK((combo - parts).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("discrete maximum principle for nonnegative potentials") {
    const int n = 80;
    const double c = GENERATE(0.0, 4.0);
    DirichletOperator op = assemble(c, n);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    const double sigma = 0.3;
    for (int trial = 0; trial < 12; ++trial) {
        const double uL = sigma + u(rng), uR = sigma + u(rng);
        SteadyPair p = solve_steady_boundary(op, uL, uR);
        CHECK(check_lower_bound(p, sigma) >= 0.0);
    }
}

TEST_CASE("steady states are fixed points of the propagator") {
    const int n = 100;
    DirichletOperator op = assemble(0.0, n);
    const double dt = op.grid.h, T = 2.0;
    const int steps = lattice_steps(T, dt);

    SECTION("interior") {
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        SteadyPair p = solve_steady_interior(op, ones, ones);
        Trajectory traj = propagate(op, p.state, p.hold(dt, steps), T);
        CHECK((traj.final_state().y - p.state.y).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(traj.final_state().v.cwiseAbs().maxCoeff() < 1e-9);
    }

    SECTION("boundary") {
        SteadyPair p = solve_steady_boundary(op, 1.0, 2.0);
        Trajectory traj = propagate(op, p.state, p.hold(dt, steps), T);
        CHECK((traj.final_state().y - p.state.y).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(traj.final_state().v.cwiseAbs().maxCoeff() < 1e-9);
    }
}
