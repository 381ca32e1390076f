#pragma once

#include <chrono>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "assembly.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "library.hpp"
#include "refine.hpp"
#include "selection.hpp"
#include "solvers.hpp"

namespace hyperdisc {

struct Cell {
    Algorithm algorithm = Algorithm::LASSO;
    Criterion criterion = Criterion::AIC;

    std::string label() const { return std::string(to_string(algorithm)) + ":" + std::string(to_string(criterion)); }
    friend bool operator==(const Cell&, const Cell&) = default;
};

inline Cell cell_from_string(std::string_view s) {
    const auto pos = s.find(':');
    if (pos == std::string_view::npos) throw ConfigError("cell '" + std::string(s) + "' must look like algorithm:criterion");
    return {algorithm_from_string(s.substr(0, pos)), criterion_from_string(s.substr(pos + 1))};
}

inline std::vector<Cell> full_grid() {
    std::vector<Cell> cells;
    for (auto a : {Algorithm::LASSO, Algorithm::LARS, Algorithm::OMP})
        for (auto c : {Criterion::AIC, Criterion::BIC, Criterion::CV}) cells.push_back({a, c});
    return cells;
}

struct DiscoveryOptions {
    SolverOptions solver;
    CvOptions cv;
    RefineOptions refine;
    bool uniform_refine_weights = false; // refit with unit block weights instead of the mode weights
};

struct CellResult {
    Cell cell;
    SolutionPath path;
    SelectionResult selection;
    std::vector<std::size_t> selected_terms; // library indices active at the chosen path point
    DiscoveredModel model;
    std::optional<FitMetrics> reference_metrics; // against clean data, when supplied
    bool ok = false;
    std::string error;
};

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Library indices of the strictly positive coefficients of a path point.
inline std::vector<std::size_t> active_library_terms(const RegressionSystem& sys, const PathPoint& pt) {
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < pt.c_scaled.size(); ++i)
        if (pt.c_scaled(i) > 0.0) out.push_back(sys.retained[static_cast<std::size_t>(i)]);
    return out;
}

/// One (algorithm, criterion) cell: path, selection, refinement and
/// metrics. Module errors are caught and reported on the result.
inline CellResult run_cell(const Dataset& data, const ModelLibrary& lib, const RegressionSystem& sys, Cell cell,
                           const DiscoveryOptions& opt, const Dataset* reference = nullptr) {
    CellResult res;
    res.cell = cell;
    try {
        const auto t0 = Clock::now();
        res.path = compute_path(sys, cell.algorithm, opt.solver);
        res.selection = cell.criterion == Criterion::CV ? kfold_cv(sys, res.path, opt.solver, opt.cv)
                                                        : select_information(res.path, cell.criterion, sys.n_obs());
        res.selected_terms = active_library_terms(sys, res.path.points[res.selection.chosen_index]);
        const double sparse_s = seconds_since(t0);
        if (res.selected_terms.empty()) throw DegenerateError("selected path point has no active terms");

        const auto t1 = Clock::now();
        const std::vector<double> unit(data.blocks.size(), 1.0);
        res.model = refine(data, lib, res.selected_terms, opt.refine,
                           opt.uniform_refine_weights ? std::span<const double>(unit) : std::span<const double>(sys.weights));
        res.model.provenance = {std::string(to_string(cell.algorithm)), std::string(to_string(cell.criterion)),
                                opt.cv.seed, sparse_s, seconds_since(t1)};
        if (reference) res.reference_metrics = evaluate_metrics(lib, res.model.coefficients(lib), *reference);
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    return res;
}

inline std::vector<CellResult> run_cells(const Dataset& data, const ModelLibrary& lib, const std::vector<Cell>& cells,
                                         const DiscoveryOptions& opt, const Dataset* reference = nullptr) {
    const RegressionSystem sys = assemble(data, lib);
    std::vector<CellResult> out;
    out.reserve(cells.size());
    for (const auto& c : cells) out.push_back(run_cell(data, lib, sys, c, opt, reference));
    return out;
}

/// Same as run_cells with one task per cell.
inline std::vector<CellResult> run_cells_parallel(const Dataset& data, const ModelLibrary& lib,
                                                  const RegressionSystem& sys, const std::vector<Cell>& cells,
                                                  const DiscoveryOptions& opt, const Dataset* reference = nullptr) {
    std::vector<std::future<CellResult>> tasks;
    for (const auto& c : cells)
        tasks.push_back(std::async(std::launch::async, [&, c] { return run_cell(data, lib, sys, c, opt, reference); }));
    std::vector<CellResult> out;
    for (auto& t : tasks) out.push_back(t.get());
    return out;
}

/// True when the discovered terms are exactly the support of the reference
/// energy (compared as basis terms, independent of library order).
inline bool support_matches(const ModelLibrary& lib, const DiscoveredModel& m, const std::vector<BasisTerm>& truth) {
    if (m.active_terms.size() != truth.size()) return false;
    for (const auto& t : truth) {
        bool found = false;
        for (auto j : m.active_terms)
            if (lib.terms[j] == t) found = true;
        if (!found) return false;
    }
    return true;
}

} // namespace hyperdisc
