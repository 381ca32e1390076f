#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "assembly.hpp"
#include "errors.hpp"
#include "nnls.hpp"

namespace hyperdisc {

enum class Algorithm { LASSO, LARS, OMP };

inline std::string_view to_string(Algorithm a) {
    switch (a) {
    case Algorithm::LASSO: return "lasso";
    case Algorithm::LARS: return "lars";
    case Algorithm::OMP: return "omp";
    }
    return "?";
}

inline Algorithm algorithm_from_string(std::string_view s) {
    if (s == "lasso" || s == "LASSO") return Algorithm::LASSO;
    if (s == "lars" || s == "LARS") return Algorithm::LARS;
    if (s == "omp" || s == "OMP") return Algorithm::OMP;
    throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

/// One candidate solution on a path. c_scaled is indexed by design column
/// (retained columns of the regression system), not by library term.
struct PathPoint {
    std::vector<std::size_t> active_set;
    Eigen::VectorXd c_scaled;
    double knob = 0.0; // lambda for LASSO, step index for LARS/OMP
    double rss = 0.0;
    bool converged = true;
    std::string note;

    // Strictly positive coefficients; this is the model size the
    // information criteria charge for.
    std::size_t n_active() const {
        std::size_t n = 0;
        for (Eigen::Index j = 0; j < c_scaled.size(); ++j)
            if (c_scaled(j) > 0.0) ++n;
        return n;
    }
};

struct SolutionPath {
    Algorithm algorithm = Algorithm::LASSO;
    std::vector<PathPoint> points;
    std::string termination;
};

namespace detail {

inline double rss_of(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& c) {
    return (y - X * c).squaredNorm();
}

inline std::vector<std::size_t> support_of(const Eigen::VectorXd& c) {
    std::vector<std::size_t> s;
    for (Eigen::Index j = 0; j < c.size(); ++j)
        if (c(j) > 0.0) s.push_back(static_cast<std::size_t>(j));
    return s;
}

inline int default_max_steps(const Eigen::MatrixXd& X) {
    const auto p = static_cast<int>(X.cols());
    const auto n = static_cast<int>(X.rows());
    return std::max(0, std::min(p, n - 1));
}

} // namespace detail

// ---------------------------------------------------------------------------
// LASSO: cyclic coordinate descent with non-negative soft thresholding on
// ||y - X c||^2 + lambda ||c||_1, c >= 0.
// ---------------------------------------------------------------------------

struct LassoOptions {
    std::vector<double> lambdas; // strictly decreasing; empty = automatic grid
    int n_lambdas = 100;
    double min_ratio = 1e-4;
    double tol = 1e-8;
    int max_sweeps = 10000;
};

/// Smallest penalty with the all-zero solution: 2 max_j X_j^T y.
inline double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.cols() == 0) return 0.0;
    return 2.0 * (X.transpose() * y).maxCoeff();
}

inline std::vector<double> lasso_auto_grid(double lambda_max, int count, double min_ratio) {
    if (count < 1) throw ConfigError("lambda grid needs at least one value");
    if (!(lambda_max > 0.0)) lambda_max = 1.0;
    std::vector<double> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = lambda_max;
        return grid;
    }
    const double lo = std::log(lambda_max * min_ratio);
    const double hi = std::log(lambda_max);
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] = std::exp(hi + (lo - hi) * i / static_cast<double>(count - 1));
    return grid;
}

namespace detail {

// Exact solve of the stationarity conditions on the current support; used
// to remove the residual coordinate-descent error once the support has
// settled. Returns false (leaving c untouched) if the candidate violates the
// sign or KKT conditions.
inline bool polish_lasso(const Eigen::MatrixXd& G, const Eigen::VectorXd& q, double lambda, Eigen::VectorXd& c) {
    const auto supp = support_of(c);
    if (supp.empty()) return false;
    const auto k = static_cast<Eigen::Index>(supp.size());
    Eigen::MatrixXd Gaa(k, k);
    Eigen::VectorXd rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
        rhs(a) = q(static_cast<Eigen::Index>(supp[a])) - 0.5 * lambda;
        for (Eigen::Index b = 0; b < k; ++b)
            Gaa(a, b) = G(static_cast<Eigen::Index>(supp[a]), static_cast<Eigen::Index>(supp[b]));
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Gaa);
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::VectorXd ca = ldlt.solve(rhs);
    if (!ca.allFinite() || (Gaa * ca - rhs).norm() > 1e-10 * std::max(1.0, rhs.norm())) return false;
    if ((ca.array() <= 0.0).any()) return false;
    Eigen::VectorXd cand = Eigen::VectorXd::Zero(c.size());
    for (Eigen::Index a = 0; a < k; ++a) cand(static_cast<Eigen::Index>(supp[a])) = ca(a);
    const Eigen::VectorXd grad = q - G * cand;
    const double slack = 1e-9 * std::max(1.0, lambda);
    for (Eigen::Index j = 0; j < c.size(); ++j)
        if (cand(j) == 0.0 && 2.0 * grad(j) > lambda + slack) return false;
    // the polished point must not be worse than the iterate it replaces
    auto objective = [&](const Eigen::VectorXd& v) { return -2.0 * q.dot(v) + v.dot(G * v) + lambda * v.sum(); };
    if (objective(cand) > objective(c) + 1e-12 * std::max(1.0, std::abs(objective(c)))) return false;
    c = cand;
    return true;
}

} // namespace detail

inline SolutionPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoOptions& opt = {}) {
    std::vector<double> lambdas = opt.lambdas;
    if (lambdas.empty()) lambdas = lasso_auto_grid(lasso_lambda_max(X, y), opt.n_lambdas, opt.min_ratio);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0)) throw ContractViolation("lasso penalties must be positive");
        if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
            throw ContractViolation("lasso penalties must be strictly decreasing");
    }

    const Eigen::MatrixXd G = X.transpose() * X;
    const Eigen::VectorXd q = X.transpose() * y;
    const Eigen::Index p = X.cols();

    SolutionPath path;
    path.algorithm = Algorithm::LASSO;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd g = q; // X^T (y - X c), kept in sync with c

    for (double lambda : lambdas) {
        PathPoint pt;
        pt.knob = lambda;
        int sweep = 0;
        bool converged = false;
        for (; sweep < opt.max_sweeps; ++sweep) {
            double max_change = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                const double gjj = G(j, j);
                if (gjj <= 0.0) continue;
                const double old = c(j);
                const double z = g(j) + gjj * old;
                const double upd = std::max(0.0, (z - 0.5 * lambda) / gjj);
                const double delta = upd - old;
                if (delta != 0.0) {
                    c(j) = upd;
                    g.noalias() -= delta * G.col(j);
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
            if (max_change < opt.tol) {
                converged = true;
                break;
            }
        }
        if (detail::polish_lasso(G, q, lambda, c)) g = q - G * c;
        pt.converged = converged;
        if (!converged) pt.note = "coordinate descent hit " + std::to_string(opt.max_sweeps) + " sweeps";
        pt.c_scaled = c;
        pt.active_set = detail::support_of(c);
        pt.rss = detail::rss_of(X, y, c);
        path.points.push_back(std::move(pt));
    }
    path.termination = "lambda grid exhausted";
    return path;
}

inline SolutionPath lasso_path(const RegressionSystem& sys, const LassoOptions& opt = {}) {
    return lasso_path(sys.design, sys.target, opt);
}

// ---------------------------------------------------------------------------
// LARS with the lasso modification and positive-only entry.
// ---------------------------------------------------------------------------

struct LarsOptions {
    int max_steps = -1; // -1: min(n_terms, n_obs - 1)
    bool lasso_modification = true;
};

namespace detail {

// Solves G d = 1 by Cholesky, retrying once with a 1e-12 diagonal jitter.
inline bool equiangular_solve(const Eigen::MatrixXd& Gaa, Eigen::VectorXd& d) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(Gaa.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(Gaa);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-12 * std::max(1.0, Gaa.diagonal().maxCoeff());
        llt.compute(Gaa + jitter * Eigen::MatrixXd::Identity(Gaa.rows(), Gaa.cols()));
        if (llt.info() != Eigen::Success) return false;
    }
    d = llt.solve(ones);
    return d.allFinite() && ones.dot(d) > 0.0;
}

} // namespace detail

inline SolutionPath lars_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LarsOptions& opt = {}) {
    const Eigen::Index p = X.cols();
    const int max_steps = opt.max_steps < 0 ? detail::default_max_steps(X) : opt.max_steps;

    const Eigen::MatrixXd G = X.transpose() * X;
    Eigen::VectorXd corr = X.transpose() * y;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    std::vector<std::size_t> active;
    std::vector<bool> is_active(static_cast<std::size_t>(p), false);

    SolutionPath path;
    path.algorithm = Algorithm::LARS;
    auto record = [&](int step) {
        PathPoint pt;
        pt.knob = step;
        pt.c_scaled = c;
        pt.active_set = active;
        pt.rss = detail::rss_of(X, y, c);
        path.points.push_back(std::move(pt));
    };
    record(0);

    const double c0 = p > 0 ? corr.maxCoeff() : 0.0;
    if (!(c0 > 0.0)) {
        path.termination = "no positively correlated column";
        return path;
    }
    const double corr_tol = 1e-12 * c0;
    const double eps = 1e-14;

    // first entrant: most positively correlated column, lowest index on ties
    Eigen::Index pending = 0;
    corr.maxCoeff(&pending);

    for (int step = 1; step <= max_steps; ++step) {
        if (pending >= 0) {
            active.push_back(static_cast<std::size_t>(pending));
            is_active[static_cast<std::size_t>(pending)] = true;
            pending = -1;
        }
        const auto k = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd Gaa(k, k);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b)
                Gaa(a, b) = G(static_cast<Eigen::Index>(active[a]), static_cast<Eigen::Index>(active[b]));
        Eigen::VectorXd d;
        if (!detail::equiangular_solve(Gaa, d)) {
            path.termination = "active Gram matrix numerically singular at step " + std::to_string(step);
            return path;
        }
        const double norm_a = 1.0 / std::sqrt(d.sum());
        const Eigen::VectorXd dir = norm_a * d; // coefficient direction on the active set

        Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
        for (Eigen::Index i = 0; i < k; ++i) a += dir(i) * G.col(static_cast<Eigen::Index>(active[i]));

        double C = 0.0;
        for (auto j : active) C = std::max(C, corr(static_cast<Eigen::Index>(j)));
        if (C <= corr_tol) {
            path.termination = "correlations exhausted";
            return path;
        }

        // full least-squares step on the active set
        double gamma = C / norm_a;
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (is_active[static_cast<std::size_t>(j)]) continue;
            const double denom = norm_a - a(j);
            if (denom <= eps) continue;
            const double gj = (C - corr(j)) / denom;
            if (gj > eps && gj < gamma) {
                gamma = gj;
                enter = j;
            }
        }

        Eigen::Index drop = -1;
        if (opt.lasso_modification) {
            for (Eigen::Index i = 0; i < k; ++i) {
                if (dir(i) >= 0.0) continue;
                const double gi = -c(static_cast<Eigen::Index>(active[i])) / dir(i);
                if (gi > eps && gi < gamma) {
                    gamma = gi;
                    drop = i;
                    enter = -1;
                }
            }
        }

        for (Eigen::Index i = 0; i < k; ++i) c(static_cast<Eigen::Index>(active[i])) += gamma * dir(i);
        corr -= gamma * a;

        if (drop >= 0) {
            const auto j = active[static_cast<std::size_t>(drop)];
            c(static_cast<Eigen::Index>(j)) = 0.0;
            is_active[j] = false;
            active.erase(active.begin() + drop);
        }
        c = c.cwiseMax(0.0);
        record(step);

        if (drop >= 0) {
            if (active.empty()) {
                path.termination = "active set emptied";
                return path;
            }
            continue;
        }
        if (enter < 0) {
            path.termination = "least-squares fit on the active set reached";
            return path;
        }
        if (active.size() >= static_cast<std::size_t>(std::min<Eigen::Index>(p, X.rows() - 1))) {
            path.termination = "active set saturated";
            return path;
        }
        pending = enter;
    }
    path.termination = "step limit reached";
    return path;
}

inline SolutionPath lars_path(const RegressionSystem& sys, const LarsOptions& opt = {}) {
    return lars_path(sys.design, sys.target, opt);
}

// ---------------------------------------------------------------------------
// OMP: greedy positive-correlation selection with NNLS refits.
// ---------------------------------------------------------------------------

struct OmpOptions {
    int max_steps = -1;      // -1: min(n_terms, n_obs - 1)
    double corr_tol = 1e-10; // relative to the initial maximum correlation
};

inline SolutionPath omp_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const OmpOptions& opt = {}) {
    if (opt.corr_tol < 0.0) throw ContractViolation("omp correlation tolerance must be non-negative");
    const Eigen::Index p = X.cols();
    const int max_steps = opt.max_steps < 0 ? detail::default_max_steps(X) : opt.max_steps;
    const Eigen::VectorXd norms = X.colwise().norm().transpose();

    SolutionPath path;
    path.algorithm = Algorithm::OMP;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    std::vector<std::size_t> active;
    std::vector<bool> is_active(static_cast<std::size_t>(p), false);

    auto record = [&](int step) {
        PathPoint pt;
        pt.knob = step;
        pt.c_scaled = c;
        pt.active_set = active;
        pt.rss = detail::rss_of(X, y, c);
        path.points.push_back(std::move(pt));
    };
    record(0);

    Eigen::VectorXd r = y;
    double c0 = -1.0;
    for (int step = 1; step <= max_steps; ++step) {
        Eigen::Index best_j = -1;
        double best = 0.0;
        const Eigen::VectorXd corr = X.transpose() * r;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (is_active[static_cast<std::size_t>(j)] || !(norms(j) > 0.0)) continue;
            const double s = corr(j) / norms(j);
            if (s > best) {
                best = s;
                best_j = j;
            }
        }
        if (c0 < 0.0) c0 = best;
        if (best_j < 0 || best <= opt.corr_tol * c0) {
            path.termination = "residual orthogonal to the remaining columns";
            return path;
        }

        active.push_back(static_cast<std::size_t>(best_j));
        const auto k = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd Xa(X.rows(), k);
        for (Eigen::Index i = 0; i < k; ++i) Xa.col(i) = X.col(static_cast<Eigen::Index>(active[i]));
        const auto fit = nnls(Xa, y);
        if (!(fit.x(k - 1) > 0.0)) {
            active.pop_back();
            path.termination = "selected column received a zero coefficient";
            return path;
        }
        is_active[static_cast<std::size_t>(best_j)] = true;
        c.setZero();
        for (Eigen::Index i = 0; i < k; ++i) c(static_cast<Eigen::Index>(active[i])) = fit.x(i);
        r = y - Xa * fit.x;
        record(step);
    }
    path.termination = "step limit reached";
    return path;
}

inline SolutionPath omp_path(const RegressionSystem& sys, const OmpOptions& opt = {}) {
    return omp_path(sys.design, sys.target, opt);
}

} // namespace hyperdisc
