#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "assembly.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "solvers.hpp"

namespace hyperdisc {

enum class Criterion { AIC, BIC, CV };

inline std::string_view to_string(Criterion c) {
    switch (c) {
    case Criterion::AIC: return "aic";
    case Criterion::BIC: return "bic";
    case Criterion::CV: return "cv";
    }
    return "?";
}

inline Criterion criterion_from_string(std::string_view s) {
    if (s == "aic" || s == "AIC") return Criterion::AIC;
    if (s == "bic" || s == "BIC") return Criterion::BIC;
    if (s == "cv" || s == "CV") return Criterion::CV;
    throw ConfigError("unknown selection criterion '" + std::string(s) + "'");
}

inline constexpr double kRssFloor = 1e-300;

namespace detail {

inline double log_likelihood_term(double rss, std::size_t n_obs) {
    if (n_obs < 1) throw ContractViolation("information criteria need at least one observation");
    if (!(rss >= 0.0)) throw ContractViolation("residual sum of squares must be non-negative");
    const double n = static_cast<double>(n_obs);
    return n * std::log(std::max(rss, kRssFloor) / n);
}

} // namespace detail

inline double aic(double rss, std::size_t n_obs, std::size_t n_active) {
    return detail::log_likelihood_term(rss, n_obs) + 2.0 * static_cast<double>(n_active);
}

inline double bic(double rss, std::size_t n_obs, std::size_t n_active) {
    return detail::log_likelihood_term(rss, n_obs) +
           static_cast<double>(n_active) * std::log(static_cast<double>(n_obs));
}

struct SelectionResult {
    Criterion criterion = Criterion::AIC;
    std::vector<double> scores;
    std::size_t chosen_index = 0;
    std::vector<double> cv_std_err; // CV only: sample std across folds / sqrt(K)
    bool rss_floored = false;
};

/// Index minimising the scores; ties go to the smaller active set, then to
/// the earlier point.
inline std::size_t argmin_with_ties(const SolutionPath& path, const std::vector<double>& scores) {
    if (path.points.empty()) throw ContractViolation("cannot select from an empty path");
    if (scores.size() != path.points.size()) throw ContractViolation("one score per path point is required");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        const double tol = 1e-12 * std::max({1.0, std::abs(scores[i]), std::abs(scores[best])});
        if (scores[i] < scores[best] - tol) {
            best = i;
        } else if (std::abs(scores[i] - scores[best]) <= tol &&
                   path.points[i].n_active() < path.points[best].n_active()) {
            best = i;
        }
    }
    return best;
}

/// AIC or BIC over every point of a path; n_obs is the row count of the
/// system the path was computed on.
inline SelectionResult select_information(const SolutionPath& path, Criterion criterion, std::size_t n_obs) {
    if (criterion == Criterion::CV) throw ContractViolation("cross-validation needs kfold_cv");
    SelectionResult res;
    res.criterion = criterion;
    for (const auto& pt : path.points) {
        if (pt.rss < kRssFloor) res.rss_floored = true;
        res.scores.push_back(criterion == Criterion::AIC ? aic(pt.rss, n_obs, pt.n_active())
                                                         : bic(pt.rss, n_obs, pt.n_active()));
    }
    res.chosen_index = argmin_with_ties(path, res.scores);
    return res;
}

// ---------------------------------------------------------------------------
// K-fold cross-validation
// ---------------------------------------------------------------------------

struct SolverOptions {
    LassoOptions lasso;
    LarsOptions lars;
    OmpOptions omp;
};

inline SolutionPath compute_path(const RegressionSystem& sys, Algorithm algorithm, const SolverOptions& opt) {
    switch (algorithm) {
    case Algorithm::LASSO: return lasso_path(sys, opt.lasso);
    case Algorithm::LARS: return lars_path(sys, opt.lars);
    case Algorithm::OMP: return omp_path(sys, opt.omp);
    }
    throw ContractViolation("unknown algorithm");
}

struct CvOptions {
    int folds = 5;
    std::uint64_t seed = 0;
    bool stratified = false; // deal rows to folds block by block
};

/// Row indices of each fold. Plain splitting shuffles all rows and cuts
/// them into near-equal consecutive folds (the first n mod K folds get one
/// extra row); stratified splitting shuffles each block separately and
/// deals its rows round-robin.
inline std::vector<std::vector<std::size_t>> make_folds(std::size_t n_rows, const CvOptions& opt,
                                                        const std::vector<std::size_t>& row_block = {}) {
    if (opt.folds < 2) throw ContractViolation("cross-validation needs at least two folds");
    const auto K = static_cast<std::size_t>(opt.folds);
    if (n_rows < K) throw ContractViolation("fewer observations than folds");
    std::vector<std::vector<std::size_t>> folds(K);

    if (!opt.stratified) {
        std::vector<std::size_t> rows(n_rows);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        seeded_shuffle(rows, opt.seed);
        std::size_t pos = 0;
        for (std::size_t f = 0; f < K; ++f) {
            const std::size_t len = n_rows / K + (f < n_rows % K ? 1 : 0);
            folds[f].assign(rows.begin() + static_cast<std::ptrdiff_t>(pos),
                            rows.begin() + static_cast<std::ptrdiff_t>(pos + len));
            pos += len;
        }
    } else {
        if (row_block.size() != n_rows) throw ContractViolation("stratified folds need the block of every row");
        const std::size_t n_blocks = *std::max_element(row_block.begin(), row_block.end()) + 1;
        std::size_t next = 0;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            std::vector<std::size_t> rows;
            for (std::size_t r = 0; r < n_rows; ++r)
                if (row_block[r] == b) rows.push_back(r);
            seeded_shuffle(rows, opt.seed + b);
            for (auto r : rows) folds[next++ % K].push_back(r);
        }
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

/// Cross-validated error for every point of full_path. Each fold is
/// restandardised on its training rows, its own path is traced at the same
/// knobs (the full-data lambda grid for LASSO, step index for LARS/OMP) and
/// the mean squared validation residual is recorded. A fold path shorter
/// than the full path contributes its last point to the remaining steps.
inline SelectionResult kfold_cv(const RegressionSystem& full, const SolutionPath& full_path, const SolverOptions& opt,
                                const CvOptions& cv) {
    if (full_path.points.empty()) throw ContractViolation("cannot cross-validate an empty path");
    const WeightedSystem& src = full.source;
    const auto folds = make_folds(full.rows.size(), cv, [&] {
        std::vector<std::size_t> rb;
        for (auto r : full.rows) rb.push_back(src.row_block[r]);
        return rb;
    }());
    const std::size_t m = full_path.points.size();
    const auto K = folds.size();
    Eigen::MatrixXd err(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(m));

    SolverOptions fold_opt = opt;
    if (full_path.algorithm == Algorithm::LASSO) {
        fold_opt.lasso.lambdas.clear();
        for (const auto& pt : full_path.points) fold_opt.lasso.lambdas.push_back(pt.knob);
    } else {
        const int steps = static_cast<int>(m) - 1;
        fold_opt.lars.max_steps = steps;
        fold_opt.omp.max_steps = steps;
    }

    for (std::size_t f = 0; f < K; ++f) {
        std::vector<bool> in_val(full.rows.size(), false);
        for (auto i : folds[f]) in_val[i] = true;
        std::vector<std::size_t> train, val;
        for (std::size_t i = 0; i < full.rows.size(); ++i) (in_val[i] ? val : train).push_back(full.rows[i]);

        const RegressionSystem fs = standardize(src, train);
        const SolutionPath fp = compute_path(fs, full_path.algorithm, fold_opt);
        const Eigen::MatrixXd Xv = standardized_rows(fs, val);
        Eigen::VectorXd yv(static_cast<Eigen::Index>(val.size()));
        for (std::size_t i = 0; i < val.size(); ++i)
            yv(static_cast<Eigen::Index>(i)) = src.target(static_cast<Eigen::Index>(val[i])) - fs.target_mean;

        for (std::size_t k = 0; k < m; ++k) {
            const auto& pt = fp.points[std::min(k, fp.points.size() - 1)];
            err(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) =
                (yv - Xv * pt.c_scaled).squaredNorm() / static_cast<double>(val.size());
        }
    }

    SelectionResult res;
    res.criterion = Criterion::CV;
    for (std::size_t k = 0; k < m; ++k) {
        const Eigen::VectorXd e = err.col(static_cast<Eigen::Index>(k));
        const double mean = e.mean();
        const double var = (e.array() - mean).square().sum() / static_cast<double>(K - 1);
        res.scores.push_back(mean);
        res.cv_std_err.push_back(std::sqrt(var) / std::sqrt(static_cast<double>(K)));
    }
    res.chosen_index = argmin_with_ties(full_path, res.scores);
    return res;
}

} // namespace hyperdisc
