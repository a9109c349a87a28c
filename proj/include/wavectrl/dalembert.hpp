#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "wavectrl/control.hpp"

namespace wavectrl {

/// Exact characteristic solution of y_tt = y_xx on (0,1) with constant initial data
/// (y00, 0) and piecewise-linear Dirichlet data u0 (x=0) and u1 (x=1).
///
/// The solution is written as P(x+t) + Q(x-t); the initial line fixes both functions
/// to y00/2 on (0,1) and each boundary condition extends one of them by reflection:
///   P(1+t) = u1(t) - Q(1-t),   Q(-t) = u0(t) - P(t),   t >= 0.
/// Jumps travel along characteristics; values on a jump characteristic take the right
/// limit in the traced boundary parameter. Boundary traces reproduce the data exactly.
class DalembertSolution {
  public:
    DalembertSolution(double y00, PiecewiseLinearBoundaryData u0,
                      PiecewiseLinearBoundaryData u1, double T)
        : y00_(y00), u0_(std::move(u0)), u1_(std::move(u1)), T_(T) {
        if (T_ <= 0.0) throw std::invalid_argument("DalembertSolution: T must be positive");
    }

    double horizon() const { return T_; }

    double value(double t, double x) const {
        check(t, x);
        return p_val(x + t) + q_val(x - t);
    }

    double velocity(double t, double x) const {
        check(t, x);
        return p_slope(x + t) - q_slope(x - t);
    }

    /// (y, y_t) at a query point.
    std::pair<double, double> state(double t, double x) const {
        check(t, x);
        return {p_val(x + t) + q_val(x - t), p_slope(x + t) - q_slope(x - t)};
    }

  private:
    void check(double t, double x) const {
        if (t < 0.0 || t > T_ || x < 0.0 || x > 1.0)
            throw std::out_of_range("DalembertSolution: query outside [0,T]x[0,1]");
    }

    double p_val(double xi) const {
        if (xi < 1.0) return 0.5 * y00_;
        return u1_.eval(xi - 1.0) - q_val(2.0 - xi);
    }

    double q_val(double xi) const {
        if (xi > 0.0) return 0.5 * y00_;
        return u0_.eval(-xi) - p_val(-xi);
    }

    double p_slope(double xi) const {
        if (xi < 1.0) return 0.0;
        return u1_.slope(xi - 1.0) + q_slope(2.0 - xi);
    }

    double q_slope(double xi) const {
        if (xi > 0.0) return 0.0;
        return -u0_.slope(-xi) + p_slope(-xi);
    }

    double y00_;
    PiecewiseLinearBoundaryData u0_, u1_;
    double T_;
};

/// Values of the characteristic solution at a list of (t, x) query points.
inline std::vector<double> dalembert(double y00, const PiecewiseLinearBoundaryData& u0,
                                     const PiecewiseLinearBoundaryData& u1, double T,
                                     const std::vector<std::pair<double, double>>& queries) {
    DalembertSolution sol(y00, u0, u1, T);
    std::vector<double> out;
    out.reserve(queries.size());
    for (const auto& [t, x] : queries) out.push_back(sol.value(t, x));
    return out;
}

}  // namespace wavectrl
