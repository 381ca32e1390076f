#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dataset.hpp"
#include "errors.hpp"
#include "library.hpp"

namespace hyperdisc {

/// Per-block weights omega_k = P_rms / P_rms_k, where P_rms_k is the RMS of
/// all observations of block k and P_rms the RMS of the P_rms_k.
inline std::vector<double> mode_weights(const Dataset& data) {
    if (data.blocks.empty()) throw ContractViolation("dataset has no blocks");
    std::vector<double> rms;
    rms.reserve(data.blocks.size());
    for (const auto& b : data.blocks) {
        const auto obs = b.observations();
        if (obs.empty()) throw ContractViolation("block '" + b.id + "' has no observations");
        double ss = 0.0;
        for (double v : obs) ss += v * v;
        const double r = std::sqrt(ss / static_cast<double>(obs.size()));
        if (!(r > 0.0)) throw DegenerateError("block '" + b.id + "' has all-zero stress; weight undefined");
        rms.push_back(r);
    }
    double ss = 0.0;
    for (double r : rms) ss += r * r;
    const double global = std::sqrt(ss / static_cast<double>(rms.size()));
    std::vector<double> w;
    w.reserve(rms.size());
    for (double r : rms) w.push_back(global / r);
    return w;
}

/// Weighted but unstandardised stacked system: row i of design holds the
/// effective stress of every term at observation i, scaled by its block
/// weight.
struct WeightedSystem {
    Eigen::MatrixXd design;
    Eigen::VectorXd target;
    std::vector<double> weights;
    std::vector<std::size_t> row_block;
};

inline WeightedSystem build_weighted_system(const Dataset& data, const ModelLibrary& lib,
                                            std::span<const double> w = {},
                                            std::span<const double> block_weights = {}) {
    data.validate();
    if (lib.size() == 0) throw ContractViolation("library has no terms");
    WeightedSystem sys;
    sys.weights = block_weights.empty() ? mode_weights(data)
                                        : std::vector<double>(block_weights.begin(), block_weights.end());
    if (sys.weights.size() != data.blocks.size()) throw ContractViolation("one weight per block is required");

    const auto n = static_cast<Eigen::Index>(data.n_obs());
    sys.design.resize(n, static_cast<Eigen::Index>(lib.size()));
    sys.target.resize(n);
    sys.row_block.reserve(static_cast<std::size_t>(n));

    Eigen::Index row = 0;
    for (std::size_t b = 0; b < data.blocks.size(); ++b) {
        const auto& block = data.blocks[b];
        require_admissible(block.mode);
        const double omega = sys.weights[b];
        for (const auto& s : block.samples) {
            const Mat3 F = deformation_gradient(block.mode.kind, s.params);
            const Eigen::MatrixXd rows = stress_block(lib, block.mode, F, w);
            for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                sys.design.row(row) = omega * rows.row(r);
                sys.target(row) = omega * s.values[static_cast<std::size_t>(r)];
                sys.row_block.push_back(b);
                ++row;
            }
        }
    }
    return sys;
}

/// The standardised regression system the sparse solvers work on.
///
/// design holds only the retained columns (zero-variance columns are
/// dropped); retained[i] is the library index of design column i. col_mean
/// and col_std are indexed by library term. The weighted source system is
/// kept so that folds can be restandardised and refits run on physical
/// units.
struct RegressionSystem {
    Eigen::MatrixXd design;
    Eigen::VectorXd target;
    Eigen::VectorXd col_mean;
    Eigen::VectorXd col_std;
    double target_mean = 0.0;
    std::vector<double> weights;
    std::vector<std::size_t> retained;
    std::vector<std::size_t> excluded_cols;

    WeightedSystem source;
    std::vector<std::size_t> rows; // rows of source used to build this system

    std::size_t n_obs() const { return static_cast<std::size_t>(design.rows()); }
    std::size_t n_terms() const { return static_cast<std::size_t>(col_std.size()); }
    std::size_t n_retained() const { return retained.size(); }
};

inline constexpr double kZeroVarianceRatio = 1e-12;

/// Standardises the given rows of a weighted system: population mean and
/// standard deviation per column, target centred.
inline RegressionSystem standardize(const WeightedSystem& source, std::vector<std::size_t> rows) {
    if (rows.empty()) throw ContractViolation("cannot standardise an empty row set");
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = source.design.cols();

    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X.row(i) = source.design.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
        y(i) = source.target(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
    }

    RegressionSystem sys;
    sys.col_mean = X.colwise().mean().transpose();
    sys.col_std.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = (X.col(j).array() - sys.col_mean(j)).square().mean();
        sys.col_std(j) = std::sqrt(var);
    }
    const double max_std = sys.col_std.maxCoeff();
    if (!(max_std > 0.0)) throw DegenerateError("every design column has zero variance");

    for (Eigen::Index j = 0; j < p; ++j) {
        if (sys.col_std(j) < kZeroVarianceRatio * max_std)
            sys.excluded_cols.push_back(static_cast<std::size_t>(j));
        else
            sys.retained.push_back(static_cast<std::size_t>(j));
    }

    sys.design.resize(n, static_cast<Eigen::Index>(sys.retained.size()));
    for (std::size_t c = 0; c < sys.retained.size(); ++c) {
        const auto j = static_cast<Eigen::Index>(sys.retained[c]);
        sys.design.col(static_cast<Eigen::Index>(c)) = (X.col(j).array() - sys.col_mean(j)) / sys.col_std(j);
    }
    sys.target_mean = y.mean();
    sys.target = y.array() - sys.target_mean;
    sys.weights = source.weights;
    sys.source = source;
    sys.rows = std::move(rows);
    return sys;
}

inline RegressionSystem standardize(const WeightedSystem& source) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(source.design.rows()));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return standardize(source, std::move(rows));
}

/// Weighted, stacked, linearised (w = w_bar) and standardised system.
inline RegressionSystem assemble(const Dataset& data, const ModelLibrary& lib) {
    if (data.blocks.empty() || data.n_obs() == 0) throw ContractViolation("dataset is empty");
    return standardize(build_weighted_system(data, lib, lib.w_bar));
}

/// Physical coefficients c_j = c~_j / sigma_j, with zeros reinserted at the
/// excluded columns.
inline std::vector<double> back_transform(const RegressionSystem& sys, const Eigen::VectorXd& c_scaled) {
    if (static_cast<std::size_t>(c_scaled.size()) != sys.n_retained())
        throw ContractViolation("scaled coefficient count does not match retained columns");
    std::vector<double> c(sys.n_terms(), 0.0);
    for (std::size_t i = 0; i < sys.retained.size(); ++i) {
        const auto j = sys.retained[i];
        c[j] = c_scaled(static_cast<Eigen::Index>(i)) / sys.col_std(static_cast<Eigen::Index>(j));
    }
    return c;
}

/// Standardised rows of an arbitrary subset of the source system, using
/// the column statistics of sys (for out-of-fold prediction).
inline Eigen::MatrixXd standardized_rows(const RegressionSystem& sys, std::span<const std::size_t> rows) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(sys.retained.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < sys.retained.size(); ++c) {
            const auto j = static_cast<Eigen::Index>(sys.retained[c]);
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                (sys.source.design(static_cast<Eigen::Index>(rows[i]), j) - sys.col_mean(j)) / sys.col_std(j);
        }
    }
    return X;
}

} // namespace hyperdisc
