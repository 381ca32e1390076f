#pragma once

#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "assembly.hpp"
#include "data.hpp"
#include "errors.hpp"
#include "library.hpp"
#include "pipeline.hpp"
#include "refine.hpp"

namespace hyperdisc {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Basis terms and libraries
// ---------------------------------------------------------------------------

inline json term_to_json(const BasisTerm& t) {
    json j;
    switch (t.family) {
    case TermFamily::MooneyRivlin:
        j = {{"family", "mooney_rivlin"}, {"j", t.j}, {"k", t.k}};
        break;
    case TermFamily::Ogden:
        j = {{"family", "ogden"}, {"alpha", t.alpha}};
        break;
    case TermFamily::Ortho:
        j = {{"family", "ortho"}, {"index", t.index}};
        break;
    }
    j["label"] = t.label();
    return j;
}

namespace detail {

template <class T>
T required(const json& j, const char* key, const char* where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string(where) + ": missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(where) + ": bad '" + key + "': " + e.what());
    }
}

template <class T>
T optional_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad '") + key + "': " + e.what());
    }
}

inline json vec3_to_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

inline Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("a frame direction needs three components");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace detail

inline BasisTerm term_from_json(const json& j) {
    const auto family = detail::required<std::string>(j, "family", "term");
    if (family == "mooney_rivlin")
        return BasisTerm::mooney_rivlin(detail::required<int>(j, "j", "term"), detail::required<int>(j, "k", "term"));
    if (family == "ogden") return BasisTerm::ogden(detail::required<double>(j, "alpha", "term"));
    if (family == "ortho") return BasisTerm::ortho(detail::required<int>(j, "index", "term"));
    throw ConfigError("unknown term family '" + family + "'");
}

inline json frame_to_json(const StructuralFrame& f) {
    return {{"f0", detail::vec3_to_json(f.f0)}, {"s0", detail::vec3_to_json(f.s0)}, {"n0", detail::vec3_to_json(f.n0)}};
}

inline StructuralFrame frame_from_json(const json& j) {
    StructuralFrame f;
    if (j.contains("f0")) f.f0 = detail::vec3_from_json(j.at("f0"));
    if (j.contains("s0")) f.s0 = detail::vec3_from_json(j.at("s0"));
    if (j.contains("n0")) f.n0 = detail::vec3_from_json(j.at("n0"));
    if (!f.is_orthonormal(1e-9)) throw DomainError("structural frame is not orthonormal");
    return f;
}

/// Explicit form: every term plus its w_bar, and the frame when present.
inline json library_to_json(const ModelLibrary& lib) {
    json j;
    j["terms"] = json::array();
    for (const auto& t : lib.terms) j["terms"].push_back(term_to_json(t));
    j["w_bar"] = lib.w_bar;
    if (lib.frame) j["frame"] = frame_to_json(*lib.frame);
    return j;
}

/// Accepts the explicit form or one of the presets
///   {"preset": "isotropic", "mr_order": 3, "ogden_alphas": [...]}
///   {"preset": "orthotropic", "w_bar": 1, "drop_reference_stress_terms": false}
///   {"preset": "benchmark", "name": "O2"}
inline ModelLibrary library_from_json(const json& j) {
    if (j.is_string()) return benchmark_library(j.get<std::string>());
    if (!j.is_object()) throw ConfigError("library spec must be an object or a benchmark name");
    std::optional<StructuralFrame> frame;
    if (j.contains("frame")) frame = frame_from_json(j.at("frame"));

    if (j.contains("preset")) {
        const auto preset = j.at("preset").get<std::string>();
        if (preset == "isotropic")
            return make_isotropic_library(detail::optional_or<int>(j, "mr_order", 0),
                                          detail::optional_or<std::vector<double>>(j, "ogden_alphas", {}));
        if (preset == "orthotropic")
            return make_orthotropic_library(frame.value_or(StructuralFrame::canonical()),
                                            detail::optional_or<double>(j, "w_bar", 1.0),
                                            detail::optional_or<bool>(j, "drop_reference_stress_terms", false));
        if (preset == "benchmark") return benchmark_library(detail::required<std::string>(j, "name", "library"));
        throw ConfigError("unknown library preset '" + preset + "'");
    }

    const auto& terms_j = j.at("terms");
    std::vector<BasisTerm> terms;
    for (const auto& t : terms_j) terms.push_back(term_from_json(t));
    ModelLibrary lib = make_library(std::move(terms), frame);
    if (j.contains("w_bar")) {
        const auto& wb = j.at("w_bar");
        if (wb.is_number()) {
            for (std::size_t i = 0; i < lib.size(); ++i)
                if (lib.terms[i].has_nonlinear_slot()) lib.w_bar[i] = wb.get<double>();
        } else {
            auto v = wb.get<std::vector<double>>();
            if (v.size() != lib.size()) throw ConfigError("w_bar needs one value per term");
            lib.w_bar = std::move(v);
        }
        for (std::size_t i = 0; i < lib.size(); ++i)
            if (lib.terms[i].has_nonlinear_slot() && !(lib.w_bar[i] > 0.0))
                throw ConfigError("w_bar must be positive for exponential terms");
    }
    return lib;
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

inline json ground_truth_to_json(const GroundTruth& g) {
    json j;
    j["name"] = g.name;
    j["terms"] = json::array();
    for (const auto& t : g.lib.terms) j["terms"].push_back(term_to_json(t));
    j["c"] = g.coeffs.c;
    j["w"] = g.coeffs.w;
    return j;
}

/// A preset name ("O2", "MR2", "MR1O1", "MR2O2", "cardiac") or an object
/// with terms, c and optional w.
inline GroundTruth ground_truth_from_json(const json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        return name == "cardiac" ? cardiac_reference() : ground_truth(name);
    }
    if (!j.contains("terms")) return ground_truth(detail::required<std::string>(j, "name", "ground truth"));
    std::vector<BasisTerm> terms;
    for (const auto& t : j.at("terms")) terms.push_back(term_from_json(t));
    return make_ground_truth(detail::optional_or<std::string>(j, "name", "custom"), std::move(terms),
                             detail::required<std::vector<double>>(j, "c", "ground truth"),
                             detail::optional_or<std::vector<double>>(j, "w", {}));
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json metrics_to_json(const FitMetrics& m) {
    json j;
    j["modes"] = json::array();
    for (const auto& md : m.modes) {
        json mj = {{"block_id", md.block_id}, {"mode_kind", std::string(to_string(md.kind))}, {"n_obs", md.n_obs},
                   {"rmse", md.rmse}, {"nrmse", md.nrmse}};
        mj["r2"] = md.r2 ? json(*md.r2) : json(nullptr);
        j["modes"].push_back(std::move(mj));
    }
    j["avg_nrmse"] = m.avg_nrmse;
    j["avg_rmse"] = m.avg_rmse;
    j["overall_r2"] = m.overall_r2 ? json(*m.overall_r2) : json(nullptr);
    j["overall_rmse"] = m.overall_rmse;
    return j;
}

struct ReportContext {
    Units units = Units::Pa;
    std::optional<std::vector<BasisTerm>> truth_support;
    bool include_timings = true;
};

/// Full JSON report of one cell. The library is embedded so the model can be
/// re-evaluated from the report alone.
inline json cell_report(const ModelLibrary& lib, const CellResult& r, const ReportContext& ctx) {
    json j;
    j["cell"] = r.cell.label();
    j["algorithm"] = std::string(to_string(r.cell.algorithm));
    j["criterion"] = std::string(to_string(r.cell.criterion));
    j["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    j["path_termination"] = r.path.termination;
    j["path_points"] = r.path.points.size();
    j["selected_point"] = r.selection.chosen_index;
    j["selected_knob"] = r.path.points[r.selection.chosen_index].knob;
    j["rss_floored"] = r.selection.rss_floored;
    j["selected_terms"] = json::array();
    for (auto t : r.selected_terms) j["selected_terms"].push_back(lib.terms[t].label());

    const auto& m = r.model;
    j["n_active"] = m.size();
    j["units"] = std::string(to_string(ctx.units));
    j["terms"] = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& t = lib.terms[m.active_terms[i]];
        json tj = {{"library_index", m.active_terms[i]}, {"descriptor", term_to_json(t)}, {"c", m.c_star[i]}};
        tj["w"] = t.has_nonlinear_slot() ? json(m.w_star[i]) : json(nullptr);
        j["terms"].push_back(std::move(tj));
    }
    j["refinement"] = {{"converged", m.converged}, {"iterations", m.iterations}, {"note", m.note}};
    j["metrics"] = metrics_to_json(m.metrics);
    if (r.reference_metrics) j["reference_metrics"] = metrics_to_json(*r.reference_metrics);
    if (lib.is_isotropic()) {
        const auto cr = check_consistency(lib, m.coefficients(lib));
        j["consistency"] = {{"mu0_mooney_rivlin", cr.mu0_MR}, {"mu0_ogden", cr.mu0_Ogden},
                            {"mu0_total", cr.mu0_total}, {"positive", cr.positive}};
    }
    if (ctx.truth_support) j["ground_truth_recovered"] = support_matches(lib, m, *ctx.truth_support);
    j["provenance"] = {{"algorithm", m.provenance.algorithm},
                       {"criterion", m.provenance.criterion},
                       {"seed", m.provenance.seed}};
    if (ctx.include_timings) {
        j["provenance"]["sparse_seconds"] = m.provenance.sparse_seconds;
        j["provenance"]["refine_seconds"] = m.provenance.refine_seconds;
    }
    j["library"] = library_to_json(lib);
    return j;
}

/// Rebuilds the library and full coefficient vector from a cell report.
inline std::pair<ModelLibrary, EnergyCoefficients> model_from_report(const json& report) {
    if (!report.contains("library") || !report.contains("terms"))
        throw ConfigError("report has no model (failed cell?)");
    ModelLibrary lib = library_from_json(report.at("library"));
    EnergyCoefficients e = EnergyCoefficients::zeros(lib);
    for (const auto& tj : report.at("terms")) {
        const auto idx = tj.at("library_index").get<std::size_t>();
        if (idx >= lib.size()) throw ConfigError("report term index out of range");
        e.c[idx] = tj.at("c").get<double>();
        if (!tj.at("w").is_null()) e.w[idx] = tj.at("w").get<double>();
    }
    return {std::move(lib), std::move(e)};
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

} // namespace detail

/// step, knob, n_active, score, std_err (empty for information criteria)
inline void write_criterion_csv(const CellResult& r, std::ostream& os) {
    os << "step,knob,n_active,score,std_err,selected\n";
    for (std::size_t k = 0; k < r.selection.scores.size(); ++k) {
        const auto& pt = r.path.points[k];
        os << k << ',' << detail::format_double(pt.knob) << ',' << pt.n_active() << ','
           << detail::format_double(r.selection.scores[k]) << ','
           << (k < r.selection.cv_std_err.size() ? detail::format_double(r.selection.cv_std_err[k]) : std::string())
           << ',' << (k == r.selection.chosen_index ? 1 : 0) << '\n';
    }
}

/// One row per path point: knob, rss and the back-transformed coefficient of
/// every library term.
inline void write_path_csv(const ModelLibrary& lib, const RegressionSystem& sys, const CellResult& r,
                           std::ostream& os) {
    os << "step,knob,rss";
    for (const auto& t : lib.terms) os << ',' << detail::csv_field(t.label());
    os << '\n';
    for (std::size_t k = 0; k < r.path.points.size(); ++k) {
        const auto& pt = r.path.points[k];
        os << k << ',' << detail::format_double(pt.knob) << ',' << detail::format_double(pt.rss);
        for (double c : back_transform(sys, pt.c_scaled)) os << ',' << detail::format_double(c);
        os << '\n';
    }
}

/// Term x step boolean grid of the path's active sets.
inline void write_activation_csv(const ModelLibrary& lib, const RegressionSystem& sys, const CellResult& r,
                                 std::ostream& os) {
    os << "term";
    for (std::size_t k = 0; k < r.path.points.size(); ++k) os << ",step_" << k;
    os << '\n';
    std::vector<std::vector<int>> grid(lib.size(), std::vector<int>(r.path.points.size(), 0));
    for (std::size_t k = 0; k < r.path.points.size(); ++k)
        for (auto t : active_library_terms(sys, r.path.points[k])) grid[t][k] = 1;
    for (std::size_t t = 0; t < lib.size(); ++t) {
        os << detail::csv_field(lib.terms[t].label());
        for (int v : grid[t]) os << ',' << v;
        os << '\n';
    }
}

/// Measured and predicted stress for every observation; the reference column
/// holds the clean data when it differs from the fitted data.
inline void write_predictions_csv(const ModelLibrary& lib, const DiscoveredModel& m, const Dataset& data,
                                  const Dataset* reference, std::ostream& os) {
    const auto pred = predict_dataset(lib, m.coefficients(lib), data);
    os << "mode_kind,block_id,p1,p2,component,measured,predicted" << (reference ? ",reference" : "") << '\n';
    for (std::size_t b = 0; b < data.blocks.size(); ++b) {
        const auto& blk = data.blocks[b];
        const bool two = parameter_count(blk.mode.kind) == 2;
        std::size_t i = 0;
        for (std::size_t s = 0; s < blk.samples.size(); ++s) {
            for (std::size_t c = 0; c < blk.mode.measured.size(); ++c, ++i) {
                const auto& smp = blk.samples[s];
                os << to_string(blk.mode.kind) << ',' << blk.id << ',' << detail::format_double(smp.params.p1) << ','
                   << (two ? detail::format_double(smp.params.p2) : std::string()) << ','
                   << to_string(blk.mode.measured[c]) << ',' << detail::format_double(smp.values[c]) << ','
                   << detail::format_double(pred[b][i]);
                if (reference) os << ',' << detail::format_double(reference->blocks[b].samples[s].values[c]);
                os << '\n';
            }
        }
    }
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw Error("failed writing '" + path + "'");
}

inline json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(is, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

} // namespace hyperdisc
