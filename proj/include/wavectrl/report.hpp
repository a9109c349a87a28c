#pragma once

#include <cmath>
#include <limits>
#include <string>

namespace wavectrl {

/// Outcome record of a synthesis run: the control's constraint margins, the achieved
/// end state error and the plan bookkeeping. NaN marks fields a run does not produce.
struct SynthesisReport {
    std::string kind;
    bool ok = false;
    int n0 = 0;
    double t_total = 0.0;
    double min_control = std::numeric_limits<double>::quiet_NaN();
    double min_state = std::numeric_limits<double>::quiet_NaN();
    double final_error_rel = std::numeric_limits<double>::quiet_NaN();
    double step_residual_rel = std::numeric_limits<double>::quiet_NaN();
    double c_est = std::numeric_limits<double>::quiet_NaN();
    double sigma = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    double sup_deviation = std::numeric_limits<double>::quiet_NaN();
    int doublings = 0;
    std::string failure;
};

}  // namespace wavectrl
