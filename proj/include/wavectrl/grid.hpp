#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace wavectrl {

/// Uniform grid of interior points of (0,1); Dirichlet values are eliminated.
struct Grid {
    int n = 0;       // interior point count
    double h = 0.0;  // spacing, h*(n+1) = 1
    Eigen::VectorXd x;

    Grid() = default;

    explicit Grid(int n_interior) : n(n_interior) {
        if (n < 2) throw std::invalid_argument("Grid: need at least 2 interior points");
        h = 1.0 / (n + 1);
        x.resize(n);
        for (int j = 0; j < n; ++j) x[j] = (j + 1) * h;
    }

    bool same_as(const Grid& other) const { return n == other.n; }
};

}  // namespace wavectrl
