#pragma once

#include <cmath>

namespace wavectrl {

namespace detail {
// Standard exponential transition: 0 at tau<=0, 1 at tau>=1, C^inf monotone between.
inline double bump_transition(double tau) {
    if (tau <= 0.0) return 0.0;
    if (tau >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / tau);
    const double b = std::exp(-1.0 / (1.0 - tau));
    return a / (a + b);
}
}  // namespace detail

/// Release profile: 1 on (-inf,0], 0 on [1/2,inf), smooth monotone transition.
inline double cutoff_rho(double t) {
    return 1.0 - detail::bump_transition(2.0 * t);
}

/// Window profile: 1 on (-1/2,1/2), 0 outside (-1,1), smooth symmetric shoulders.
inline double cutoff_zeta(double t) {
    return 1.0 - detail::bump_transition(2.0 * (std::abs(t) - 0.5));
}

}  // namespace wavectrl
