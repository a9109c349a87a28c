#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "wavectrl/nnls.hpp"

using namespace wavectrl;

namespace {

// Exhaustive reference: minimize ||A u - b|| over the grid u_i in {0, 0.01, ..., 2}.
double brute_force_residual(const Eigen::Matrix3d& A, const Eigen::Vector3d& b) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 200; ++i)
        for (int j = 0; j <= 200; ++j)
            for (int k = 0; k <= 200; ++k) {
                Eigen::Vector3d u(i * 0.01, j * 0.01, k * 0.01);
                best = std::min(best, (A * u - b).norm());
            }
    return best;
}

void check_kkt(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& lb,
               const Eigen::VectorXd& x) {
    Eigen::VectorXd grad = A.transpose() * (A * x - b);
    for (int i = 0; i < x.size(); ++i) {
        if (x[i] - lb[i] < 1e-12) {
            CHECK(grad[i] >= -1e-8);
        } else {
            CHECK(std::abs(grad[i]) <= 1e-8);
        }
    }
}

}  // namespace

TEST_CASE("three-variable toys match the brute-force oracle") {
    // Hand-built problems whose constrained optimum lies on the oracle's 0.01 grid
    // inside [0,2]^3, so grid search and solver must agree on verdict and residual.
    struct Toy {
        Eigen::Matrix3d A;
        Eigen::Vector3d b;
    };
    std::vector<Toy> toys;
    Eigen::Matrix3d diag;
    diag << 1, 0, 0, 0, 2, 0, 0, 0, 4;
    toys.push_back({diag, {0.5, 1.0, 2.0}});   // attainable: u = (0.5, 0.5, 0.5)
    toys.push_back({diag, {-1.0, 2.0, 4.0}});  // one coordinate pinned at zero
    Eigen::Matrix3d coupled;
    coupled << 1, 1, 0, 0, 1, 1, 1, 0, 1;
    toys.push_back({coupled, {2.0, 2.0, 2.0}});  // attainable: u = (1, 1, 1)
    toys.push_back({coupled, {2.0, -2.0, 0.0}}); // optimum u = (1, 0, 0), residual sqrt(6)

    for (const auto& toy : toys) {
        NnlsResult sol = nnls(toy.A, toy.b, 0.0);
        REQUIRE(sol.optimal);
        const double ref = brute_force_residual(toy.A, toy.b);
        CHECK(sol.residual <= ref + 1e-12);
        CHECK(std::abs(sol.residual - ref) < 1e-3);
        const double tol = 1e-6 * toy.b.norm() + 1e-10;
        CHECK((sol.residual <= tol) == (ref <= tol));
        CHECK(sol.x.minCoeff() >= 0.0);
        check_kkt(toy.A, toy.b, Eigen::Vector3d::Zero(), sol.x);
    }
}

TEST_CASE("random three-variable problems satisfy optimality") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    for (int trial = 0; trial < 8; ++trial) {
        Eigen::Matrix3d A;
        Eigen::Vector3d b;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) A(r, c) = entry(rng);
            b[r] = 2.0 * entry(rng);
        }
        NnlsResult sol = nnls(A, b, 0.0);
        REQUIRE(sol.optimal);
        CHECK(sol.x.minCoeff() >= 0.0);
        check_kkt(A, b, Eigen::Vector3d::Zero(), sol.x);
    }
}

TEST_CASE("zero defect returns the bound") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd lb = Eigen::VectorXd::Constant(4, 0.5);
    NnlsResult sol = nnls(A, A * lb, lb);
    CHECK(sol.optimal);
    CHECK((sol.x - lb).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(sol.residual < 1e-12);
}

TEST_CASE("interior optimum matches unconstrained least squares") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> entry(0.1, 1.0);
    Eigen::MatrixXd A(6, 3);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 3; ++c) A(r, c) = entry(rng);
    Eigen::Vector3d truth(1.0, 2.0, 0.7);
    Eigen::VectorXd b = A * truth;
    NnlsResult sol = nnls(A, b, 0.0);
    CHECK(sol.optimal);
    CHECK((sol.x - truth).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("active bounds satisfy the optimality conditions") {
    // Target pulls a coordinate negative; the solver must pin it at the bound.
    Eigen::MatrixXd A(3, 3);
    A << 1, 0, 0, 0, 1, 0, 0, 0, 1;
    Eigen::Vector3d b(-1.0, 2.0, -0.3);
    Eigen::VectorXd lb = Eigen::VectorXd::Zero(3);
    NnlsResult sol = nnls(A, b, lb);
    CHECK(sol.optimal);
    CHECK(sol.x[0] == 0.0);
    CHECK(sol.x[1] == Catch::Approx(2.0));
    CHECK(sol.x[2] == 0.0);
    check_kkt(A, b, lb, sol.x);
}

TEST_CASE("nonzero lower bound shifts the feasible cone") {
    Eigen::MatrixXd A(2, 2);
    A << 1, 1, 0, 1;
    Eigen::Vector2d b(0.0, 0.0);
    Eigen::VectorXd lb = Eigen::VectorXd::Constant(2, 0.25);
    NnlsResult sol = nnls(A, b, lb);
    CHECK(sol.optimal);
    CHECK(sol.x.minCoeff() >= 0.25 - 1e-15);
    check_kkt(A, b, lb, sol.x);
}

TEST_CASE("wide random problems stay optimal") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd A(8, 40);
    Eigen::VectorXd b(8);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 40; ++c) A(r, c) = g(rng);
        b[r] = g(rng);
    }
    NnlsResult sol = nnls(A, b, 0.0);
    CHECK(sol.optimal);
    check_kkt(A, b, Eigen::VectorXd::Zero(40), sol.x);
}
