#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

namespace wavectrl {

struct NnlsResult {
    Eigen::VectorXd x;      // solution in the original variables (x >= lower bound)
    double residual = 0.0;  // ||A x - b||
    int iterations = 0;
    bool optimal = false;   // false when the iteration cap was hit (inconclusive)
};

/// Active-set nonnegative least squares (Lawson-Hanson): min ||A x - b|| s.t. x >= lb,
/// by the shift x = lb + w, w >= 0. Repeatedly solves the unconstrained problem on the
/// passive set and clips the most violating coordinate; finite termination on exact
/// arithmetic, iteration cap as an inconclusive guard.
inline NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& lower_bound, int max_iter = -1) {
    const int m = static_cast<int>(A.rows());
    const int k = static_cast<int>(A.cols());
    if (max_iter < 0) max_iter = 10 * k;

    Eigen::VectorXd bs = b - A * lower_bound;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);   // shifted variables
    std::vector<bool> passive(k, false);
    std::vector<int> pidx;

    const double grad_tol = 1e-11 * std::max(1.0, (A.transpose() * bs).cwiseAbs().maxCoeff());

    Eigen::VectorXd resid = bs;  // bs - A w
    NnlsResult out;

    auto solve_passive = [&](const std::vector<int>& idx) -> Eigen::VectorXd {
        Eigen::MatrixXd Ap(m, idx.size());
        for (size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
        return Ap.colPivHouseholderQr().solve(bs);
    };

    while (out.iterations < max_iter) {
        Eigen::VectorXd grad = A.transpose() * resid;
        int best = -1;
        double best_g = grad_tol;
        for (int i = 0; i < k; ++i)
            if (!passive[i] && grad[i] > best_g) {
                best_g = grad[i];
                best = i;
            }
        if (best < 0) {
            out.optimal = true;
            break;
        }
        passive[best] = true;
        pidx.push_back(best);

        while (out.iterations < max_iter) {
            ++out.iterations;
            Eigen::VectorXd z = solve_passive(pidx);
            double alpha = 1.0;
            for (size_t c = 0; c < pidx.size(); ++c) {
                if (z[c] <= 0.0) {
                    const double xi = w[pidx[c]];
                    const double a = xi / (xi - z[c]);
                    alpha = std::min(alpha, a);
                }
            }
            if (alpha >= 1.0) {
                for (size_t c = 0; c < pidx.size(); ++c) w[pidx[c]] = z[c];
                break;
            }
            for (size_t c = 0; c < pidx.size(); ++c)
                w[pidx[c]] += alpha * (z[c] - w[pidx[c]]);
            // Move variables pinned at zero back to the active set.
            std::vector<int> keep;
            for (int i : pidx) {
                if (w[i] <= 1e-14 * std::max(1.0, w.cwiseAbs().maxCoeff())) {
                    w[i] = 0.0;
                    passive[i] = false;
                } else {
                    keep.push_back(i);
                }
            }
            pidx = std::move(keep);
            if (pidx.empty()) break;
        }
        resid = bs - A * w;
    }

    out.x = lower_bound + w;
    out.residual = (A * out.x - b).norm();
    return out;
}

inline NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                       double lower_bound = 0.0, int max_iter = -1) {
    return nnls(A, b, Eigen::VectorXd::Constant(A.cols(), lower_bound), max_iter);
}

}  // namespace wavectrl
