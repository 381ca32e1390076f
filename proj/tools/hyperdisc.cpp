// Command-line front end: generate, discover, benchmark, evaluate.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hyperdisc/io.hpp"
#include "hyperdisc/run.hpp"

using namespace hyperdisc;

namespace {

std::vector<Cell> parse_cells(const std::string& list) {
    std::vector<Cell> cells;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) cells.push_back(cell_from_string(item));
    if (cells.empty()) throw ConfigError("--cells is empty");
    return cells;
}

void print_cell_line(const CellResult& r) {
    std::cout << r.cell.label() << ": ";
    if (!r.ok) {
        std::cout << "FAILED (" << r.error << ")\n";
        return;
    }
    const auto& m = r.reference_metrics ? *r.reference_metrics : r.model.metrics;
    std::cout << r.model.size() << " terms";
    if (m.overall_r2) std::cout << ", R2 " << *m.overall_r2;
    std::cout << ", RMSE " << m.overall_rmse << ", sparse " << r.model.provenance.sparse_seconds << " s, refine "
              << r.model.provenance.refine_seconds << " s\n";
}

int cmd_generate(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
    const auto j = read_json_file(config);
    auto src = dataset_source_from_json(j.contains("dataset") ? j.at("dataset") : j, fs::path(config).parent_path());
    if (seed) src.noise_seed = seed;
    if (src.noise > 0.0 && !src.noise_seed) throw ConfigError("a seed is required when noise is added");
    const auto data = load_dataset(src);
    save_csv(data.fitted, out);
    std::cout << "wrote " << data.fitted.n_obs() << " observations to " << out << '\n';
    return 0;
}

int cmd_discover(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
                 const std::string& cells) {
    RunConfig c = load_run_config(config);
    if (seed) c.seed = seed;
    if (!cells.empty()) c.cells = parse_cells(cells);
    if (!out.empty()) c.output_dir = out;
    finalize_seeds(c);
    const auto run = execute(c);
    write_outputs(run, c.output_dir);
    for (const auto& r : run.results) print_cell_line(r);
    return run.all_ok() ? 0 : 1;
}

int cmd_benchmark(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
                  const std::string& cells) {
    const auto j = read_json_file(config);
    auto scenarios = load_benchmark_config(j, fs::path(config).parent_path(), seed);
    if (!cells.empty())
        for (auto& s : scenarios) {
            s.cells = parse_cells(cells);
            finalize_seeds(s);
        }
    const bool timings = j.value("timings", true);
    const auto rows = benchmark(scenarios);
    const fs::path dir = out.empty() ? fs::path(j.value("output", std::string("benchmark_out"))) : fs::path(out);
    fs::create_directories(dir);
    std::ostringstream csv;
    write_benchmark_csv(rows, csv, timings);
    write_text((dir / "summary.csv").string(), csv.str());
    write_text((dir / "summary.json").string(), benchmark_to_json(rows, timings).dump(2) + "\n");
    bool ok = true;
    for (const auto& r : rows) {
        std::cout << r.scenario << ' ' << r.cell.label() << ": "
                  << (r.ok ? std::to_string(r.n_active) + " terms" : "FAILED (" + r.error + ")");
        if (r.recovered) std::cout << (*r.recovered ? ", recovered" : ", not recovered");
        std::cout << '\n';
        ok = ok && r.ok;
    }
    std::cout << "summary written to " << dir.string() << '\n';
    return ok ? 0 : 1;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path, const std::string& out) {
    const auto [lib, coeffs] = model_from_report(read_json_file(model_path));
    const auto data = load_csv(data_path);
    const auto text = metrics_to_json(evaluate_metrics(lib, coeffs, data)).dump(2) + "\n";
    if (out.empty()) std::cout << text;
    else write_text(out, text);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse discovery of hyperelastic strain-energy functions"};
    app.require_subcommand(1);

    std::string config, out, cells, model, data;
    std::optional<std::uint64_t> seed;

    auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
    gen->add_option("--config", config, "dataset spec (JSON)")->required();
    gen->add_option("--out", out, "output CSV")->required();
    gen->add_option("--seed", seed, "noise seed");

    auto* disc = app.add_subcommand("discover", "run discovery cells from a config");
    disc->add_option("--config", config, "run config (JSON)")->required();
    disc->add_option("--out", out, "output directory");
    disc->add_option("--seed", seed, "seed for noise and cross-validation");
    disc->add_option("--cells", cells, "comma-separated cells, e.g. lasso:bic,omp:cv");

    auto* bench = app.add_subcommand("benchmark", "sweep scenarios and write a summary table");
    bench->add_option("--config", config, "benchmark config (JSON)")->required();
    bench->add_option("--out", out, "output directory");
    bench->add_option("--seed", seed, "seed for every scenario");
    bench->add_option("--cells", cells, "comma-separated cells");

    auto* eval = app.add_subcommand("evaluate", "metrics of a saved model on a dataset");
    eval->add_option("--model", model, "cell report (JSON)")->required();
    eval->add_option("--data", data, "dataset (CSV)")->required();
    eval->add_option("--out", out, "metrics output (JSON); stdout when omitted");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_generate(config, out, seed);
        if (*disc) return cmd_discover(config, out, seed, cells);
        if (*bench) return cmd_benchmark(config, out, seed, cells);
        if (*eval) return cmd_evaluate(model, data, out);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
