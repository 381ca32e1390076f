#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace hyperdisc {

struct NnlsResult {
    Eigen::VectorXd x;
    double rss = 0.0;
    int iterations = 0;
    bool converged = true;
};

/// min ||A x - b||^2 subject to x >= 0 (Lawson-Hanson active set).
///
/// The passive-set least-squares subproblems are solved by column-pivoted
/// QR. Ties in the dual maximum go to the lowest column index.
inline NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter = 0) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    if (b.size() != m) throw ContractViolation("nnls: right-hand side length mismatch");
    if (max_iter <= 0) max_iter = static_cast<int>(3 * std::max<Eigen::Index>(n, 1)) + 30;

    NnlsResult res;
    res.x = Eigen::VectorXd::Zero(n);
    if (n == 0) {
        res.rss = b.squaredNorm();
        return res;
    }

    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * A.cwiseAbs().colwise().sum().maxCoeff() *
                       static_cast<double>(std::max(m, n));
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);

    auto solve_passive = [&](Eigen::VectorXd& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        Eigen::MatrixXd Ap(m, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
        const Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
        z.setZero(n);
        for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(static_cast<Eigen::Index>(c));
    };

    Eigen::VectorXd wdual = A.transpose() * (b - A * x);
    int iter = 0;
    while (true) {
        Eigen::Index t = -1;
        double best = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && wdual(j) > best) {
                best = wdual(j);
                t = j;
            }
        }
        if (t < 0) break;
        passive[static_cast<std::size_t>(t)] = true;

        Eigen::VectorXd z;
        while (true) {
            if (++iter > max_iter) {
                res.converged = false;
                break;
            }
            solve_passive(z);
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
            if (feasible) {
                x = z;
                break;
            }
            double alpha = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
                    const double denom = x(j) - z(j);
                    if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
                }
            }
            if (!std::isfinite(alpha)) alpha = 0.0;
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0.0;
                }
            }
        }
        if (!res.converged) break;
        wdual = A.transpose() * (b - A * x);
        // A column that just entered can come straight back with a tiny
        // positive dual when the subproblem is rank deficient.
        if (!passive[static_cast<std::size_t>(t)]) wdual(t) = std::min(wdual(t), 0.0);
    }

    res.x = x.cwiseMax(0.0);
    res.rss = (b - A * res.x).squaredNorm();
    res.iterations = iter;
    return res;
}

/// min ||A x - b||^2 + lambda ||x||^2 subject to x >= 0, solved as NNLS on
/// the augmented system [A; sqrt(lambda) I] x = [b; 0].
inline NnlsResult nnls_ridge(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda) {
    if (lambda < 0.0) throw ContractViolation("ridge parameter must be non-negative");
    if (lambda == 0.0) return nnls(A, b);
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    Eigen::MatrixXd Aa(m + n, n);
    Aa.topRows(m) = A;
    Aa.bottomRows(n) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd ba = Eigen::VectorXd::Zero(m + n);
    ba.head(m) = b;
    auto res = nnls(Aa, ba);
    res.rss = (b - A * res.x).squaredNorm();
    return res;
}

} // namespace hyperdisc
