#pragma once

// Brute-force reference solutions used by the solver tests.

#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct SubsetFit {
    Eigen::VectorXd x;
    double rss = std::numeric_limits<double>::infinity();
};

// Unconstrained least squares on the columns in mask; infeasible (any
// negative coefficient) fits return an infinite rss.
inline SubsetFit nonneg_subset_fit(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, unsigned mask) {
    SubsetFit out;
    out.x = Eigen::VectorXd::Zero(A.cols());
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        if (mask & (1u << j)) cols.push_back(j);
    if (cols.empty()) {
        out.rss = b.squaredNorm();
        return out;
    }
    Eigen::MatrixXd S(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) S.col(static_cast<Eigen::Index>(i)) = A.col(cols[i]);
    const Eigen::VectorXd xs = S.colPivHouseholderQr().solve(b);
    if ((xs.array() < 0.0).any()) return out;
    for (std::size_t i = 0; i < cols.size(); ++i) out.x(cols[i]) = xs(static_cast<Eigen::Index>(i));
    out.rss = (b - A * out.x).squaredNorm();
    return out;
}

// min ||Ax - b|| over x >= 0 by enumerating every support.
inline SubsetFit nnls_exhaustive(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    SubsetFit best;
    for (unsigned m = 0; m < (1u << A.cols()); ++m) {
        auto f = nonneg_subset_fit(A, b, m);
        if (f.rss < best.rss) best = f;
    }
    return best;
}

// Best non-negative fit using exactly k columns.
inline SubsetFit best_k_subset(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int k) {
    SubsetFit best;
    for (unsigned m = 0; m < (1u << A.cols()); ++m) {
        if (__builtin_popcount(m) != k) continue;
        auto f = nonneg_subset_fit(A, b, m);
        if (f.rss < best.rss) best = f;
    }
    return best;
}

// Random n x p matrix with orthonormal columns.
template <class Gen>
Eigen::MatrixXd orthonormal_columns(Eigen::Index n, Eigen::Index p, Gen& gen) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd M(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) M(i, j) = nd(gen);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
}

} // namespace oracle
