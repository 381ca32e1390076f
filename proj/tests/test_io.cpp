#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyperdisc/io.hpp"
#include "hyperdisc/run.hpp"

using namespace hyperdisc;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    explicit TempDir(const std::string& tag) : path_(fs::temp_directory_path() / ("hyperdisc_" + tag)) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

RunConfig o2_config(double noise = 0.0) {
    json j = {{"dataset", {{"kind", "synthetic"}, {"truth", "O2"}, {"n_per_mode", 30}, {"noise", noise}}},
              {"library", {{"preset", "benchmark"}, {"name", "O2"}}},
              {"seed", 7},
              {"timings", false}};
    auto c = run_config_from_json(j);
    finalize_seeds(c);
    return c;
}

} // namespace

TEST(Json, LibraryRoundTrip) {
    for (const auto& lib : {benchmark_library("MR2O2"),
                            make_orthotropic_library(StructuralFrame::canonical(), 2.5, true)}) {
        const auto back = library_from_json(library_to_json(lib));
        ASSERT_EQ(back.size(), lib.size());
        for (std::size_t i = 0; i < lib.size(); ++i) EXPECT_TRUE(back.terms[i] == lib.terms[i]);
        EXPECT_EQ(back.w_bar, lib.w_bar);
        EXPECT_EQ(back.frame.has_value(), lib.frame.has_value());
        EXPECT_EQ(library_to_json(back), library_to_json(lib));
    }
}

TEST(Json, Presets) {
    EXPECT_EQ(library_from_json(json("treloar")).size(), 15u);
    EXPECT_EQ(library_from_json(json{{"preset", "orthotropic"}, {"w_bar", 1.0}}).size(), 32u);
    EXPECT_THROW(library_from_json(json{{"preset", "orthotropic"}, {"w_bar", 0.0}}), ConfigError);
    EXPECT_THROW(library_from_json(json{{"preset", "nope"}}), ConfigError);
}

TEST(Json, GroundTruthRoundTrip) {
    const auto g = cardiac_reference();
    const auto back = ground_truth_from_json(ground_truth_to_json(g));
    EXPECT_EQ(back.name, g.name);
    EXPECT_EQ(back.coeffs.c, g.coeffs.c);
    EXPECT_EQ(back.coeffs.w, g.coeffs.w);
    ASSERT_EQ(back.lib.size(), g.lib.size());
    for (std::size_t i = 0; i < g.lib.size(); ++i) EXPECT_TRUE(back.lib.terms[i] == g.lib.terms[i]);
}

TEST(Config, SeedRules) {
    json j = {{"dataset", {{"kind", "synthetic"}, {"truth", "O2"}, {"noise", 0.1}}},
              {"library", "O2"},
              {"cells", {"lasso:aic"}}};
    auto c = run_config_from_json(j);
    EXPECT_THROW(finalize_seeds(c), ConfigError);
    j["dataset"]["noise_seed"] = 3;
    c = run_config_from_json(j);
    EXPECT_NO_THROW(finalize_seeds(c));
    j["cells"] = {"lasso:cv"};
    c = run_config_from_json(j);
    EXPECT_THROW(finalize_seeds(c), ConfigError);
    j["seed"] = 9;
    c = run_config_from_json(j);
    finalize_seeds(c);
    EXPECT_EQ(c.options.cv.seed, 9u);
    EXPECT_EQ(*c.dataset.noise_seed, 3u);
}

TEST(Config, MissingCsvFailsBeforeAnyOutput) {
    TempDir tmp("missing");
    const fs::path out = tmp.path() / "out";
    json j = {{"dataset", {{"kind", "csv"}, {"path", "nowhere.csv"}}}, {"library", "treloar"},
              {"output", out.string()}};
    EXPECT_THROW(run_config_from_json(j, tmp.path()), ConfigError);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Outputs, FullGridWritesNineReports) {
    TempDir tmp("grid");
    const auto run = execute(o2_config());
    ASSERT_TRUE(run.all_ok());
    write_outputs(run, tmp.path());
    int reports = 0;
    for (const auto& cell : full_grid()) {
        const fs::path dir = tmp.path() / cell_dir_name(cell);
        for (const char* f : {"report.json", "criterion.csv", "path.csv", "activation.csv", "predictions.csv"})
            EXPECT_TRUE(fs::exists(dir / f)) << dir / f;
        const auto report = read_json_file((dir / "report.json").string());
        EXPECT_EQ(report["status"], "ok");
        EXPECT_TRUE(report["ground_truth_recovered"].get<bool>());
        ++reports;
    }
    EXPECT_EQ(reports, 9);
    EXPECT_TRUE(fs::exists(tmp.path() / "summary.json"));
    EXPECT_TRUE(fs::exists(tmp.path() / "dataset.csv"));
}

TEST(Outputs, DeterministicWithoutTimings) {
    TempDir a("det_a"), b("det_b");
    write_outputs(execute(o2_config(0.05)), a.path());
    write_outputs(execute(o2_config(0.05)), b.path());
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a.path())) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a.path());
        EXPECT_EQ(slurp(e.path()), slurp(b.path() / rel)) << rel;
        ++files;
    }
    EXPECT_GT(files, 40);
}

TEST(Outputs, ReportMetricsRecomputable) {
    const auto run = execute(o2_config(0.05));
    const auto& lib = run.config.library;
    for (const auto& r : run.results) {
        const auto report = cell_report(lib, r, report_context(run.config, run.data.fitted));
        const auto [lib2, coeffs] = model_from_report(json::parse(report.dump()));
        const auto m = evaluate_metrics(lib2, coeffs, run.data.fitted);
        const auto& stored = report["metrics"];
        EXPECT_NEAR(m.avg_nrmse, stored["avg_nrmse"].get<double>(), 1e-10);
        EXPECT_NEAR(m.overall_rmse, stored["overall_rmse"].get<double>(), 1e-10);
        for (std::size_t i = 0; i < m.modes.size(); ++i)
            EXPECT_NEAR(*m.modes[i].r2, stored["modes"][i]["r2"].get<double>(), 1e-10);
    }
}

TEST(Outputs, SupportMatchFlag) {
    const auto lib = benchmark_library("O2");
    const auto truth = ground_truth("O2").support();
    DiscoveredModel m;
    m.active_terms = {*lib.find(BasisTerm::ogden(-3)), *lib.find(BasisTerm::ogden(3))};
    m.c_star = {16.0, 8.0};
    EXPECT_TRUE(support_matches(lib, m, truth));
    m.active_terms.push_back(*lib.find(BasisTerm::ogden(4)));
    m.c_star.push_back(0.1);
    EXPECT_FALSE(support_matches(lib, m, truth));
    m.active_terms.resize(1);
    m.c_star.resize(1);
    EXPECT_FALSE(support_matches(lib, m, truth));
}

TEST(Benchmark, EmptyScenarioListWritesHeaderOnly) {
    std::ostringstream os;
    write_benchmark_csv(benchmark({}), os);
    const auto text = os.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
    EXPECT_EQ(text.rfind("scenario,algorithm,criterion,status", 0), 0u);
}

TEST(Benchmark, RowsFollowScenarios) {
    auto c = o2_config();
    c.name = "O2_clean";
    c.cells = {{Algorithm::OMP, Criterion::BIC}, {Algorithm::LASSO, Criterion::AIC}};
    const auto rows = benchmark({c});
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.scenario, "O2_clean");
        EXPECT_TRUE(r.ok);
        EXPECT_TRUE(*r.recovered);
        EXPECT_EQ(r.n_active, 2u);
        ASSERT_EQ(r.r2.size(), 3u);
        EXPECT_EQ(r.r2[0].first, "UT");
    }
    std::ostringstream os;
    write_benchmark_csv(rows, os, false);
    EXPECT_NE(os.str().find("r2_UT,r2_PS,r2_EBT"), std::string::npos);
}
