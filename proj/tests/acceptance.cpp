// Acceptance report: one PASS/FAIL line per criterion, on stdout and in
// acceptance_report.txt. The exit status is nonzero only when a criterion
// could not be evaluated at all.

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hyperdisc/io.hpp"
#include "hyperdisc/run.hpp"
#include "oracles.hpp"

using namespace hyperdisc;

namespace {

constexpr std::uint64_t kNoiseSeed = 42;
constexpr std::uint64_t kCvSeed = 7;

struct Outcome {
    std::vector<std::string> failures;

    void check(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    bool passed() const { return failures.empty(); }
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

DiscoveryRun run(json j) {
    j["seed"] = kCvSeed;
    j["timings"] = true;
    auto c = run_config_from_json(j, ".");
    finalize_seeds(c);
    return execute(c);
}

json synthetic(const std::string& truth, double noise) {
    json d = {{"kind", "synthetic"}, {"truth", truth}, {"noise", noise}};
    if (noise > 0.0) d["noise_seed"] = kNoiseSeed;
    return {{"dataset", d}, {"library", {{"preset", "benchmark"}, {"name", truth}}}};
}

bool within(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

double coefficient(const ModelLibrary& lib, const DiscoveredModel& m, const BasisTerm& t) {
    const auto idx = lib.find(t);
    for (std::size_t i = 0; idx && i < m.size(); ++i)
        if (m.active_terms[i] == *idx) return m.c_star[i];
    return 0.0;
}

bool has_support(const ModelLibrary& lib, const DiscoveredModel& m, const std::vector<BasisTerm>& terms) {
    return support_matches(lib, m, terms);
}

bool contains_support(const ModelLibrary& lib, const DiscoveredModel& m, const std::vector<BasisTerm>& terms) {
    for (const auto& t : terms)
        if (coefficient(lib, m, t) <= 0.0) return false;
    return true;
}

double min_r2(const FitMetrics& m) { return m.min_r2().value_or(-INFINITY); }

double total_seconds(const CellResult& r) {
    return r.model.provenance.sparse_seconds + r.model.provenance.refine_seconds;
}

std::string support_string(const ModelLibrary& lib, const DiscoveredModel& m) {
    std::string s = "{";
    for (std::size_t i = 0; i < m.size(); ++i) s += (i ? ", " : "") + lib.terms[m.active_terms[i]].label();
    return s + "}";
}

bool run_ok(Outcome& o, const DiscoveryRun& r) {
    for (const auto& c : r.results) o.check(c.ok, c.cell.label() + " failed: " + c.error);
    return r.all_ok();
}

// ---------------------------------------------------------------------------

Outcome o2_clean() {
    Outcome o;
    const auto r = run(synthetic("O2", 0.0));
    if (!run_ok(o, r)) return o;
    const auto& lib = r.config.library;
    const auto truth = ground_truth("O2").support();
    for (const auto& c : r.results) {
        const auto& m = c.model;
        const auto l = c.cell.label();
        o.check(has_support(lib, m, truth), l + " support " + support_string(lib, m));
        o.check(within(coefficient(lib, m, BasisTerm::ogden(-3)), 16.0, 1e-3) &&
                    within(coefficient(lib, m, BasisTerm::ogden(3)), 8.0, 1e-3),
                l + " coefficients off");
        o.check(min_r2(m.metrics) >= 1.0 - 1e-6, l + " min R2 " + fmt(min_r2(m.metrics), 8));
        o.check(total_seconds(c) < 2.0, l + " took " + fmt(total_seconds(c)) + " s");
    }
    return o;
}

Outcome o2_noisy() {
    Outcome o;
    const auto r = run(synthetic("O2", 0.10));
    if (!run_ok(o, r)) return o;
    const auto& lib = r.config.library;
    const auto truth = ground_truth("O2").support();
    for (const auto& c : r.results) {
        const auto& m = c.model;
        const auto l = c.cell.label();
        if (c.cell.criterion == Criterion::CV)
            o.check(contains_support(lib, m, truth) && m.size() <= 3, l + " support " + support_string(lib, m));
        else
            o.check(has_support(lib, m, truth), l + " support " + support_string(lib, m));
        o.check(min_r2(*c.reference_metrics) >= 0.998, l + " min R2 vs clean " + fmt(min_r2(*c.reference_metrics)));
    }
    return o;
}

Outcome mr2_clean() {
    Outcome o;
    const auto r = run(synthetic("MR2", 0.0));
    if (!run_ok(o, r)) return o;
    const auto& lib = r.config.library;
    const auto truth = ground_truth("MR2").support();
    for (const auto& c : r.results) {
        const auto& m = c.model;
        const auto l = c.cell.label();
        if (c.cell.algorithm == Algorithm::LARS) {
            const auto& ebt = m.metrics.modes.back();
            const double r2 = ebt.r2.value_or(1.0);
            o.check(m.size() == 1 && r2 < 0.5,
                    l + " has " + std::to_string(m.size()) + " terms, R2_EBT " + fmt(r2) + " (expected 1 term, < 0.5)");
            continue;
        }
        o.check(has_support(lib, m, truth), l + " support " + support_string(lib, m));
        o.check(within(coefficient(lib, m, BasisTerm::mooney_rivlin(1, 0)), 40.0, 1e-3) &&
                    within(coefficient(lib, m, BasisTerm::mooney_rivlin(0, 1)), 20.0, 1e-3),
                l + " coefficients off");
    }
    return o;
}

Outcome mr2o2() {
    Outcome o;
    const auto truth = ground_truth("MR2O2").support();
    for (double noise : {0.0, 0.05}) {
        const auto r = run(synthetic("MR2O2", noise));
        if (!run_ok(o, r)) continue;
        const auto& lib = r.config.library;
        for (const auto& c : r.results) {
            const auto l = c.cell.label() + " at " + fmt(100 * noise) + "%";
            o.check(has_support(lib, c.model, truth), l + " support " + support_string(lib, c.model));
            if (noise > 0.0)
                o.check(c.reference_metrics->avg_nrmse <= 0.02,
                        l + " AvgNRMSE " + fmt(c.reference_metrics->avg_nrmse));
        }
    }
    return o;
}

Outcome treloar() {
    Outcome o;
    const auto r = run({{"dataset", {{"kind", "csv"}, {"path", "data/treloar.csv"}}}, {"library", "treloar"}});
    if (!run_ok(o, r)) return o;
    const auto& lib = r.config.library;
    using T = BasisTerm;
    const std::vector<BasisTerm> terms = {T::mooney_rivlin(1, 0), T::mooney_rivlin(3, 0), T::ogden(-1), T::ogden(1)};
    const double expected[] = {0.0752, 3.1e-5, 0.0819, 0.4398};
    for (const auto& c : r.results) {
        const auto& m = c.model;
        const auto l = c.cell.label();
        o.check(m.size() == 4, l + " has " + std::to_string(m.size()) + " terms");
        o.check(min_r2(m.metrics) >= 0.985, l + " min R2 " + fmt(min_r2(m.metrics)));
        o.check(total_seconds(c) < 5.0, l + " took " + fmt(total_seconds(c)) + " s");
        if (c.cell.algorithm == Algorithm::LARS) continue;
        o.check(has_support(lib, m, terms), l + " support " + support_string(lib, m));
        o.check(m.metrics.avg_rmse <= 0.065, l + " AvgRMSE " + fmt(m.metrics.avg_rmse));
        std::string coeffs;
        bool close = true;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const double v = coefficient(lib, m, terms[i]);
            close = close && within(v, expected[i], 0.05);
            coeffs += (i ? ", " : "") + fmt(v);
        }
        o.check(close, l + " coefficients (" + coeffs + ") MPa");
    }
    return o;
}

json cardiac(double noise) {
    json d = {{"kind", "csv"}, {"path", "data/cardiac_surrogate.csv"}, {"noise", noise}};
    if (noise > 0.0) d["noise_seed"] = kNoiseSeed;
    return {{"dataset", d}, {"library", {{"preset", "orthotropic"}, {"w_bar", 1.0}}}, {"ground_truth", "cardiac"}};
}

Outcome cardiac_clean() {
    Outcome o;
    const auto r = run(cardiac(0.0));
    if (!run_ok(o, r)) return o;
    const auto& lib = r.config.library;
    for (const auto& c : r.results) {
        const auto& m = c.model;
        const auto l = c.cell.label();
        const double r2 = m.metrics.overall_r2.value_or(-INFINITY);
        o.check(m.size() == 4, l + " has " + std::to_string(m.size()) + " terms " + support_string(lib, m));
        o.check(r2 >= 0.915, l + " R2 " + fmt(r2));
        o.check(m.metrics.overall_rmse <= 0.39, l + " RMSE " + fmt(m.metrics.overall_rmse) + " kPa");
        o.check(m.provenance.sparse_seconds < 5.0, l + " sparse stage " + fmt(m.provenance.sparse_seconds) + " s");
        o.check(m.provenance.refine_seconds < 120.0, l + " refinement " + fmt(m.provenance.refine_seconds) + " s");
    }
    return o;
}

Outcome cardiac_noisy() {
    Outcome o;
    const auto r = run(cardiac(0.10));
    if (!run_ok(o, r)) return o;
    const auto& lib = r.config.library;
    const auto truth = cardiac_reference().support();
    for (const auto& c : r.results) {
        const auto& m = c.model;
        const auto l = c.cell.label();
        const auto& ref = *c.reference_metrics;
        const double r2 = ref.overall_r2.value_or(-INFINITY);
        if (c.cell.algorithm == Algorithm::LASSO && c.cell.criterion == Criterion::BIC) {
            o.check(has_support(lib, m, truth), l + " support " + support_string(lib, m));
            o.check(r2 >= 0.91, l + " R2 " + fmt(r2));
            o.check(ref.overall_rmse <= 0.40, l + " RMSE " + fmt(ref.overall_rmse) + " kPa");
        } else {
            o.check(m.size() >= 4 && m.size() <= 5, l + " has " + std::to_string(m.size()) + " terms");
            o.check(r2 >= 0.905, l + " R2 " + fmt(r2));
        }
    }
    return o;
}

// ---------------------------------------------------------------------------

double kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PathPoint& pt, double lambda_max) {
    const Eigen::VectorXd g = 2.0 * X.transpose() * (y - X * pt.c_scaled);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j)
        worst = std::max(worst, pt.c_scaled(j) > 0.0 ? std::abs(g(j) - pt.knob) : g(j) - pt.knob);
    return worst / lambda_max;
}

Outcome properties() {
    Outcome o;

    // uniaxial stress against the energy derivative
    const auto g = ground_truth("MR2O2");
    const LoadingMode ut(ModeKind::UT, {Component::P11});
    double fd_worst = 0.0;
    for (double l : {0.7, 1.3, 2.0, 3.5}) {
        auto W = [&](double s) { return energy(g.lib, g.coeffs, deformation_gradient(ModeKind::UT, {s, 1.0})); };
        const double h = 1e-5 * l;
        const double fd = (W(l + h) - W(l - h)) / (2.0 * h);
        const double p = predict_stress(g.lib, g.coeffs, ut, deformation_gradient(ModeKind::UT, {l, 1.0}))[0];
        fd_worst = std::max(fd_worst, std::abs(fd - p) / std::max(1.0, std::abs(p)));
    }
    o.check(fd_worst <= 1e-6, "finite-difference stress mismatch " + fmt(fd_worst));

    double kkt = 0.0;
    for (const char* name : {"O2", "MR2", "MR1O1", "MR2O2"}) {
        auto d = isotropic_benchmark(ground_truth(name), {0.05, kNoiseSeed});
        const auto sys = assemble(d, benchmark_library(name));
        const auto path = lasso_path(sys);
        const double lmax = lasso_lambda_max(sys.design, sys.target);
        for (const auto& pt : path.points) kkt = std::max(kkt, kkt_residual(sys.design, sys.target, pt, lmax));
    }
    o.check(kkt <= 1e-6, "LASSO KKT residual " + fmt(kkt));

    std::mt19937 gen(51);
    std::normal_distribution<double> nd(0.0, 1.0);
    bool omp_ok = true;
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index p = 3 + t % 6;
        const Eigen::MatrixXd Q = oracle::orthonormal_columns(20, p, gen);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(20);
        for (Eigen::Index j = 0; j < p; ++j) y += nd(gen) * Q.col(j);
        const auto path = omp_path(Q, y);
        for (std::size_t k = 1; k < path.points.size(); ++k) {
            const auto ref = oracle::best_k_subset(Q, y, static_cast<int>(k));
            omp_ok = omp_ok && std::abs(path.points[k].rss - ref.rss) <= 1e-10 * std::max(1.0, ref.rss);
        }
    }
    o.check(omp_ok, "OMP differs from the exhaustive subset search");

    const auto data = isotropic_benchmark(g, {0.1, kNoiseSeed});
    const auto ws = build_weighted_system(data, benchmark_library("MR2O2"));
    const auto sys = standardize(ws);
    double rt = 0.0;
    for (Eigen::Index j = 0; j < sys.design.cols(); ++j) {
        const Eigen::VectorXd back = sys.design.col(j) * sys.col_std(j) +
                                     Eigen::VectorXd::Constant(sys.design.rows(), sys.col_mean(j));
        rt = std::max(rt, (back - ws.design.col(j)).cwiseAbs().maxCoeff() /
                              std::max(1.0, ws.design.col(j).cwiseAbs().maxCoeff()));
    }
    o.check(rt <= 1e-12, "standardisation round trip " + fmt(rt));

    o.check(aic(60.0, 60, 2) == 4.0, "AIC spot value " + fmt(aic(60.0, 60, 2)));
    o.check(std::abs(bic(60.0, 60, 2) - 2.0 * std::log(60.0)) < 1e-12, "BIC spot value " + fmt(bic(60.0, 60, 2)));

    json j = synthetic("MR2O2", 0.1);
    j["timings"] = false;
    const auto a = run(j), b = run(j);
    const auto ctx = report_context(a.config, a.data.fitted);
    bool same = a.results.size() == b.results.size();
    for (std::size_t i = 0; same && i < a.results.size(); ++i) {
        auto ra = cell_report(a.config.library, a.results[i], ctx);
        auto rb = cell_report(b.config.library, b.results[i], ctx);
        ra["provenance"].erase("sparse_seconds");
        ra["provenance"].erase("refine_seconds");
        rb["provenance"].erase("sparse_seconds");
        rb["provenance"].erase("refine_seconds");
        same = ra.dump() == rb.dump();
    }
    o.check(same, "seeded runs differ");
    return o;
}

// Support selected on the cardiac data for several linearisation values.
Outcome linearisation() {
    Outcome o;
    const auto data = load_csv("data/cardiac_surrogate.csv");
    std::vector<std::size_t> base;
    for (double w_bar : {1.0, 0.1, 10.0}) {
        const auto lib = make_orthotropic_library(StructuralFrame::canonical(), w_bar);
        const auto r = run_cell(data, lib, assemble(data, lib), {Algorithm::LASSO, Criterion::BIC}, {});
        o.check(r.ok, "w_bar " + fmt(w_bar) + " failed: " + r.error);
        if (!r.ok) continue;
        if (w_bar == 1.0) base = r.selected_terms;
        else
            o.check(r.selected_terms == base, "w_bar " + fmt(w_bar) + " selects " +
                                                  std::to_string(r.selected_terms.size()) + " terms, w_bar 1 selects " +
                                                  std::to_string(base.size()));
    }
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 O2 0% noise", o2_clean},
        {"2 O2 10% noise", o2_noisy},
        {"3 MR2 0% noise", mr2_clean},
        {"4 MR2O2 0% and 5% noise", mr2o2},
        {"5 Treloar", treloar},
        {"6 cardiac 0% added noise", cardiac_clean},
        {"7 cardiac 10% noise", cardiac_noisy},
        {"8 property suites", properties},
        {"9 cardiac support across w_bar 0.1..10", linearisation},
    };
    std::ofstream report("acceptance_report.txt");
    std::ostringstream out;
    int passed = 0, errors = 0;
    for (const auto& [name, fn] : criteria) {
        try {
            const auto o = fn();
            out << (o.passed() ? "PASS " : "FAIL ") << "criterion " << name;
            if (!o.passed()) {
                out << ": " << o.failures.front();
                if (o.failures.size() > 1) out << " (+" << o.failures.size() - 1 << " more)";
                out << '\n';
                for (std::size_t i = 1; i < o.failures.size() && i < 12; ++i) out << "     " << o.failures[i] << '\n';
            } else {
                out << '\n';
            }
            passed += o.passed();
        } catch (const std::exception& e) {
            out << "FAIL criterion " << name << ": not evaluated (" << e.what() << ")\n";
            ++errors;
        }
        std::cout << out.str();
        report << out.str();
        out.str("");
    }
    out << passed << "/" << criteria.size() << " criteria passed\n";
    std::cout << out.str();
    report << out.str();
    return errors == 0 ? 0 : 1;
}
