#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace wavectrl {

/// Position/velocity pair (y, y_t) on the interior grid.
struct State {
    Eigen::VectorXd y;
    Eigen::VectorXd v;

    State() = default;
    State(Eigen::VectorXd y_, Eigen::VectorXd v_) : y(std::move(y_)), v(std::move(v_)) {
        if (y.size() != v.size())
            throw std::invalid_argument("State: position/velocity length mismatch");
    }

    static State zero(int n) {
        return State(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n));
    }

    int size() const { return static_cast<int>(y.size()); }

    bool finite() const { return y.allFinite() && v.allFinite(); }
};

}  // namespace wavectrl
