#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "data.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "pipeline.hpp"

namespace hyperdisc {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct DatasetSource {
    enum class Kind { Csv, Synthetic, CardiacSurrogate };
    Kind kind = Kind::Synthetic;
    std::string path; // csv only, resolved against the config directory
    std::optional<GroundTruth> truth;
    std::vector<LoadingMode> modes;
    int n_per_mode = 60;
    std::pair<double, double> range{0.6, 5.0};
    Units units = Units::Pa;
    double noise = 0.0; // relative std added on top of the source data
    std::optional<std::uint64_t> noise_seed;
};

struct RunConfig {
    std::string name = "run";
    DatasetSource dataset;
    ModelLibrary library;
    std::vector<Cell> cells = full_grid();
    DiscoveryOptions options;
    std::optional<std::uint64_t> seed;
    std::optional<GroundTruth> ground_truth;
    std::string output_dir = "out";
    bool include_timings = true;
};

namespace detail {

inline LoadingMode mode_from_json(const json& j) {
    if (j.is_string()) return LoadingMode(mode_kind_from_string(j.get<std::string>()));
    const auto kind = mode_kind_from_string(required<std::string>(j, "kind", "mode"));
    if (!j.contains("components")) return LoadingMode(kind);
    std::vector<Component> comps;
    for (const auto& c : j.at("components")) comps.push_back(component_from_string(c.get<std::string>()));
    return LoadingMode(kind, std::move(comps));
}

inline std::string resolve(const fs::path& base, const std::string& p) {
    const fs::path q(p);
    return (q.is_absolute() || base.empty() ? q : base / q).lexically_normal().string();
}

} // namespace detail

///   {"kind": "csv", "path": "data/treloar.csv"}
///   {"kind": "synthetic", "truth": "O2", "modes": ["UT", "PS", "EBT"],
///    "n_per_mode": 60, "range": [0.6, 5.0], "units": "Pa"}
///   {"kind": "cardiac_surrogate"}
/// Every kind accepts "noise" (relative std) and "noise_seed".
inline DatasetSource dataset_source_from_json(const json& j, const fs::path& base = {}) {
    DatasetSource s;
    const auto kind = detail::required<std::string>(j, "kind", "dataset");
    if (kind == "csv") {
        s.kind = DatasetSource::Kind::Csv;
        s.path = detail::resolve(base, detail::required<std::string>(j, "path", "dataset"));
        if (!fs::is_regular_file(s.path)) throw ConfigError("dataset file '" + s.path + "' does not exist");
    } else if (kind == "synthetic") {
        s.kind = DatasetSource::Kind::Synthetic;
        s.truth = ground_truth_from_json(j.at("truth"));
        if (j.contains("modes")) {
            for (const auto& m : j.at("modes")) s.modes.push_back(detail::mode_from_json(m));
        } else {
            s.modes = {LoadingMode(ModeKind::UT), LoadingMode(ModeKind::PS), LoadingMode(ModeKind::EBT)};
        }
        s.n_per_mode = detail::optional_or<int>(j, "n_per_mode", 60);
        if (j.contains("range")) {
            const auto r = j.at("range").get<std::vector<double>>();
            if (r.size() != 2) throw ConfigError("range needs two values");
            s.range = {r[0], r[1]};
        }
        s.units = units_from_string(detail::optional_or<std::string>(j, "units", "Pa"));
    } else if (kind == "cardiac_surrogate") {
        s.kind = DatasetSource::Kind::CardiacSurrogate;
        s.truth = cardiac_reference();
        s.units = Units::kPa;
    } else {
        throw ConfigError("unknown dataset kind '" + kind + "'");
    }
    s.noise = detail::optional_or<double>(j, "noise", 0.0);
    if (!(s.noise >= 0.0)) throw ConfigError("noise must be non-negative");
    if (j.contains("noise_seed")) s.noise_seed = j.at("noise_seed").get<std::uint64_t>();
    return s;
}

inline RunConfig run_config_from_json(const json& j, const fs::path& base = {}) {
    if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
    RunConfig c;
    c.name = detail::optional_or<std::string>(j, "name", "run");
    if (!j.contains("dataset")) throw ConfigError("run configuration needs a dataset");
    c.dataset = dataset_source_from_json(j.at("dataset"), base);
    if (!j.contains("library")) throw ConfigError("run configuration needs a library");
    c.library = library_from_json(j.at("library"));

    if (j.contains("cells")) {
        c.cells.clear();
        for (const auto& s : j.at("cells")) c.cells.push_back(cell_from_string(s.get<std::string>()));
    } else if (j.contains("algorithms") || j.contains("criteria")) {
        std::vector<Algorithm> algs;
        std::vector<Criterion> crits;
        for (const auto& a : j.value("algorithms", json::array({"lasso", "lars", "omp"})))
            algs.push_back(algorithm_from_string(a.get<std::string>()));
        for (const auto& k : j.value("criteria", json::array({"aic", "bic", "cv"})))
            crits.push_back(criterion_from_string(k.get<std::string>()));
        c.cells.clear();
        for (auto a : algs)
            for (auto k : crits) c.cells.push_back({a, k});
    }
    if (c.cells.empty()) throw ConfigError("no cells requested");

    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("ground_truth")) c.ground_truth = ground_truth_from_json(j.at("ground_truth"));
    else c.ground_truth = c.dataset.truth;
    c.output_dir = detail::optional_or<std::string>(j, "output", c.output_dir);

    auto& o = c.options;
    if (j.contains("cv")) {
        const auto& cv = j.at("cv");
        o.cv.folds = detail::optional_or<int>(cv, "folds", 5);
        o.cv.stratified = detail::optional_or<bool>(cv, "stratified", false);
    }
    if (j.contains("lasso")) {
        const auto& l = j.at("lasso");
        o.solver.lasso.n_lambdas = detail::optional_or<int>(l, "n_lambdas", o.solver.lasso.n_lambdas);
        o.solver.lasso.min_ratio = detail::optional_or<double>(l, "min_ratio", o.solver.lasso.min_ratio);
        o.solver.lasso.lambdas = detail::optional_or<std::vector<double>>(l, "lambdas", {});
        o.solver.lasso.tol = detail::optional_or<double>(l, "tol", o.solver.lasso.tol);
    }
    const int max_steps = detail::optional_or<int>(j, "max_steps", -1);
    o.solver.lars.max_steps = max_steps;
    o.solver.omp.max_steps = max_steps;
    if (j.contains("refine")) {
        const auto& r = j.at("refine");
        o.refine.ridge = detail::optional_or<double>(r, "ridge", o.refine.ridge);
        o.refine.w_lower = detail::optional_or<double>(r, "w_lower", o.refine.w_lower);
        o.refine.w_upper = detail::optional_or<double>(r, "w_upper", o.refine.w_upper);
        o.refine.threshold = detail::optional_or<double>(r, "threshold", o.refine.threshold);
        o.refine.max_iter = detail::optional_or<int>(r, "max_iter", o.refine.max_iter);
        const auto weighting = detail::optional_or<std::string>(r, "weighting", "mode");
        if (weighting != "mode" && weighting != "uniform")
            throw ConfigError("refine weighting must be 'mode' or 'uniform'");
        o.uniform_refine_weights = weighting == "uniform";
    }
    if (!(o.refine.w_lower > 0.0 && o.refine.w_upper > o.refine.w_lower))
        throw ConfigError("w bounds must satisfy 0 < w_lower < w_upper");
    c.include_timings = detail::optional_or<bool>(j, "timings", true);
    return c;
}

/// Seed rules: required when noise is added or a CV cell is requested. The
/// CV seed is the run seed; noise uses noise_seed when given, else the run
/// seed.
inline void finalize_seeds(RunConfig& c) {
    bool cv = false;
    for (const auto& cell : c.cells)
        if (cell.criterion == Criterion::CV) cv = true;
    if ((cv || c.dataset.noise > 0.0) && !c.seed && !(c.dataset.noise_seed && !cv))
        throw ConfigError("a seed is required when noise is added or cross-validation is used");
    if (c.seed) c.options.cv.seed = *c.seed;
    if (!c.dataset.noise_seed && c.seed) c.dataset.noise_seed = c.seed;
}

inline RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(read_json_file(path), fs::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

struct LoadedData {
    Dataset fitted;
    std::optional<Dataset> reference; // clean or original data when noise was added
};

inline LoadedData load_dataset(const DatasetSource& s) {
    Dataset base;
    switch (s.kind) {
    case DatasetSource::Kind::Csv: base = load_csv(s.path); break;
    case DatasetSource::Kind::Synthetic:
        base = generate_synthetic(*s.truth, s.modes, s.n_per_mode, s.range, {}, s.units);
        break;
    case DatasetSource::Kind::CardiacSurrogate: base = cardiac_surrogate(); break;
    }
    base.validate();
    LoadedData out;
    if (s.noise > 0.0) {
        if (!s.noise_seed) throw ConfigError("noise requires a seed");
        out.fitted = base;
        add_noise(out.fitted, {s.noise, *s.noise_seed});
        out.reference = std::move(base);
    } else {
        out.fitted = std::move(base);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Discovery
// ---------------------------------------------------------------------------

struct DiscoveryRun {
    RunConfig config;
    LoadedData data;
    RegressionSystem system;
    std::vector<CellResult> results;

    bool all_ok() const {
        for (const auto& r : results)
            if (!r.ok) return false;
        return true;
    }
};

inline std::string cell_dir_name(const Cell& c) {
    return std::string(to_string(c.algorithm)) + "_" + std::string(to_string(c.criterion));
}

inline ReportContext report_context(const RunConfig& c, const Dataset& data) {
    ReportContext ctx;
    ctx.units = data.units;
    if (c.ground_truth) ctx.truth_support = c.ground_truth->support();
    ctx.include_timings = c.include_timings;
    return ctx;
}

/// Loads data, assembles once and runs every configured cell concurrently.
/// Nothing is written.
inline DiscoveryRun execute(const RunConfig& config) {
    DiscoveryRun run;
    run.config = config;
    run.data = load_dataset(config.dataset);
    run.system = assemble(run.data.fitted, config.library);
    const Dataset* ref = run.data.reference ? &*run.data.reference : nullptr;
    run.results = run_cells_parallel(run.data.fitted, config.library, run.system, config.cells, config.options, ref);
    return run;
}

/// Cell-local outputs: report.json, criterion.csv, path.csv, activation.csv
/// and predictions.csv under out/<algorithm>_<criterion>/, plus the fitted
/// dataset and summary.json at the top level.
inline void write_outputs(const DiscoveryRun& run, const fs::path& out) {
    fs::create_directories(out);
    save_csv(run.data.fitted, (out / "dataset.csv").string());
    if (run.data.reference) save_csv(*run.data.reference, (out / "reference.csv").string());
    const auto ctx = report_context(run.config, run.data.fitted);
    const auto& lib = run.config.library;
    const Dataset* ref = run.data.reference ? &*run.data.reference : nullptr;

    json summary = {{"name", run.config.name}, {"cells", json::array()}};
    for (const auto& r : run.results) {
        const fs::path dir = out / cell_dir_name(r.cell);
        fs::create_directories(dir);
        const json report = cell_report(lib, r, ctx);
        write_text((dir / "report.json").string(), report.dump(2) + "\n");
        json entry = {{"cell", r.cell.label()}, {"status", report["status"]}};
        if (r.ok) {
            std::ostringstream crit, path, act, pred;
            write_criterion_csv(r, crit);
            write_path_csv(lib, run.system, r, path);
            write_activation_csv(lib, run.system, r, act);
            write_predictions_csv(lib, r.model, run.data.fitted, ref, pred);
            write_text((dir / "criterion.csv").string(), crit.str());
            write_text((dir / "path.csv").string(), path.str());
            write_text((dir / "activation.csv").string(), act.str());
            write_text((dir / "predictions.csv").string(), pred.str());
            entry["n_active"] = r.model.size();
            if (report.contains("ground_truth_recovered")) entry["ground_truth_recovered"] = report["ground_truth_recovered"];
        } else {
            entry["error"] = r.error;
        }
        summary["cells"].push_back(std::move(entry));
    }
    write_text((out / "summary.json").string(), summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct BenchmarkRow {
    std::string scenario;
    Cell cell;
    bool ok = false;
    std::optional<bool> recovered;
    std::size_t n_active = 0;
    std::vector<std::pair<std::string, std::optional<double>>> r2; // by block id, in block order
    double avg_nrmse = 0.0;
    double sparse_seconds = 0.0;
    double refine_seconds = 0.0;
    std::string error;
};

/// Rows against the reference data when noise was added, else the fitted
/// data. A scenario that cannot even load its data yields one failed row per
/// requested cell.
inline std::vector<BenchmarkRow> benchmark(const std::vector<RunConfig>& scenarios) {
    std::vector<std::future<std::vector<BenchmarkRow>>> tasks;
    for (const auto& sc : scenarios) {
        tasks.push_back(std::async(std::launch::async, [sc] {
            std::vector<BenchmarkRow> rows;
            DiscoveryRun run;
            try {
                run = execute(sc);
            } catch (const std::exception& e) {
                for (const auto& c : sc.cells) rows.push_back({sc.name, c, false, {}, 0, {}, 0.0, 0.0, 0.0, e.what()});
                return rows;
            }
            for (const auto& r : run.results) {
                BenchmarkRow row;
                row.scenario = sc.name;
                row.cell = r.cell;
                row.ok = r.ok;
                row.error = r.error;
                if (r.ok) {
                    const auto& m = r.reference_metrics ? *r.reference_metrics : r.model.metrics;
                    row.n_active = r.model.size();
                    if (sc.ground_truth) row.recovered = support_matches(sc.library, r.model, sc.ground_truth->support());
                    for (const auto& md : m.modes) row.r2.emplace_back(md.block_id, md.r2);
                    row.avg_nrmse = m.avg_nrmse;
                    row.sparse_seconds = r.model.provenance.sparse_seconds;
                    row.refine_seconds = r.model.provenance.refine_seconds;
                }
                rows.push_back(std::move(row));
            }
            return rows;
        }));
    }
    std::vector<BenchmarkRow> out;
    for (auto& t : tasks)
        for (auto& r : t.get()) out.push_back(std::move(r));
    return out;
}

inline std::vector<std::string> benchmark_mode_columns(const std::vector<BenchmarkRow>& rows) {
    std::vector<std::string> cols;
    for (const auto& r : rows)
        for (const auto& [id, v] : r.r2)
            if (std::find(cols.begin(), cols.end(), id) == cols.end()) cols.push_back(id);
    return cols;
}

inline void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, std::ostream& os, bool timings = true) {
    const auto cols = benchmark_mode_columns(rows);
    os << "scenario,algorithm,criterion,status,ground_truth_recovered,n_active";
    for (const auto& c : cols) os << ",r2_" << detail::csv_field(c);
    os << ",avg_nrmse";
    if (timings) os << ",sparse_seconds,refine_seconds";
    os << ",error\n";
    for (const auto& r : rows) {
        os << detail::csv_field(r.scenario) << ',' << to_string(r.cell.algorithm) << ',' << to_string(r.cell.criterion)
           << ',' << (r.ok ? "ok" : "failed") << ',' << (r.recovered ? (*r.recovered ? "true" : "false") : "") << ','
           << (r.ok ? std::to_string(r.n_active) : std::string());
        for (const auto& c : cols) {
            os << ',';
            const auto it = std::find_if(r.r2.begin(), r.r2.end(), [&](const auto& e) { return e.first == c; });
            if (it != r.r2.end() && it->second) os << detail::format_double(*it->second);
        }
        os << ',' << (r.ok ? detail::format_double(r.avg_nrmse) : std::string());
        if (timings)
            os << ',' << (r.ok ? detail::format_double(r.sparse_seconds) : std::string()) << ','
               << (r.ok ? detail::format_double(r.refine_seconds) : std::string());
        os << ',' << detail::csv_field(r.error) << '\n';
    }
}

inline json benchmark_to_json(const std::vector<BenchmarkRow>& rows, bool timings = true) {
    json j = json::array();
    for (const auto& r : rows) {
        json rj = {{"scenario", r.scenario},
                   {"algorithm", std::string(to_string(r.cell.algorithm))},
                   {"criterion", std::string(to_string(r.cell.criterion))},
                   {"status", r.ok ? "ok" : "failed"}};
        rj["ground_truth_recovered"] = r.recovered ? json(*r.recovered) : json(nullptr);
        if (r.ok) {
            rj["n_active"] = r.n_active;
            json r2 = json::object();
            for (const auto& [id, v] : r.r2) r2[id] = v ? json(*v) : json(nullptr);
            rj["r2"] = std::move(r2);
            rj["avg_nrmse"] = r.avg_nrmse;
            if (timings) {
                rj["sparse_seconds"] = r.sparse_seconds;
                rj["refine_seconds"] = r.refine_seconds;
            }
        } else {
            rj["error"] = r.error;
        }
        j.push_back(std::move(rj));
    }
    return j;
}

/// {"scenarios": [<run config with a name>, ...], "seed": 42}. A top-level
/// seed is inherited by scenarios that do not set one.
inline std::vector<RunConfig> load_benchmark_config(const json& j, const fs::path& base = {},
                                                    std::optional<std::uint64_t> seed_override = {}) {
    if (!j.is_object()) throw ConfigError("benchmark configuration must be a JSON object");
    std::vector<RunConfig> out;
    const std::optional<std::uint64_t> shared =
        seed_override ? seed_override
                      : (j.contains("seed") ? std::optional<std::uint64_t>(j.at("seed").get<std::uint64_t>())
                                            : std::nullopt);
    for (const auto& sj : j.value("scenarios", json::array())) {
        RunConfig c = run_config_from_json(sj, base);
        if (seed_override || (!c.seed && shared)) c.seed = shared;
        finalize_seeds(c);
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace hyperdisc
