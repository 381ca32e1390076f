#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "kinematics.hpp"
#include "library.hpp"
#include "rng.hpp"

namespace hyperdisc {

/// A reference energy used to generate data: the model's own terms with
/// their coefficients and nonlinear parameters.
struct GroundTruth {
    std::string name = "custom";
    ModelLibrary lib;
    EnergyCoefficients coeffs;

    std::vector<BasisTerm> support() const {
        std::vector<BasisTerm> s;
        for (std::size_t j = 0; j < lib.size(); ++j)
            if (coeffs.c[j] != 0.0) s.push_back(lib.terms[j]);
        return s;
    }
};

/// Gaussian noise with std = relative_std * |clean| + absolute_std.
struct NoiseSpec {
    double relative_std = 0.0;
    std::uint64_t seed = 0;
    double absolute_std = 0.0;
};

inline GroundTruth make_ground_truth(std::string name, std::vector<BasisTerm> terms, std::vector<double> c,
                                     std::vector<double> w = {}) {
    if (terms.size() != c.size()) throw ConfigError("ground truth needs one coefficient per term");
    GroundTruth g;
    g.name = std::move(name);
    g.lib = make_library(std::move(terms));
    g.coeffs.c = std::move(c);
    g.coeffs.w = g.lib.w_bar;
    for (std::size_t i = 0; i < w.size() && i < g.coeffs.w.size(); ++i) g.coeffs.w[i] = w[i];
    return g;
}

/// Reference energies of the isotropic benchmarks (coefficients in Pa).
inline GroundTruth ground_truth(std::string_view name) {
    using T = BasisTerm;
    if (name == "O2") return make_ground_truth("O2", {T::ogden(-3), T::ogden(3)}, {16.0, 8.0});
    if (name == "MR2") return make_ground_truth("MR2", {T::mooney_rivlin(1, 0), T::mooney_rivlin(0, 1)}, {40.0, 20.0});
    if (name == "MR1O1") return make_ground_truth("MR1O1", {T::mooney_rivlin(0, 1), T::ogden(-3)}, {40.0, 8.0});
    if (name == "MR2O2")
        return make_ground_truth("MR2O2", {T::mooney_rivlin(1, 0), T::mooney_rivlin(0, 1), T::ogden(-3), T::ogden(1)},
                                 {40.0, 20.0, 16.0, 800.0});
    throw ConfigError("unknown ground truth '" + std::string(name) + "'");
}

/// Candidate library handed to discovery for each isotropic benchmark: only
/// the family of the reference energy.
inline ModelLibrary benchmark_library(std::string_view name) {
    if (name == "O2") return make_isotropic_library(0, {-4, -3, -2, -1, 1, 2, 3, 4});
    if (name == "MR2") return make_isotropic_library(3, {});
    if (name == "MR1O1" || name == "MR2O2" || name == "treloar") return make_isotropic_library(3, {-4, -3, -1, 1, 3, 4});
    throw ConfigError("no benchmark library named '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

/// Equispaced loading parameters on [lo, hi]. A grid point sitting on the
/// reference state (stretch 1, shear 0) is moved half a grid step up.
inline std::vector<double> loading_grid(ModeKind kind, double lo, double hi, int n) {
    if (n < 2) throw ConfigError("a synthetic grid needs at least two points");
    if (!(hi > lo)) throw ConfigError("synthetic range must have hi > lo");
    const bool shear = kind == ModeKind::SS || is_shear_mode(kind);
    if (!shear && !(lo > 0.0)) throw DomainError("stretch range must be strictly positive");
    const double ref = shear ? 0.0 : 1.0;
    const double h = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double v = lo + h * i;
        if (std::abs(v - ref) < 1e-12 * std::max(1.0, std::abs(hi))) v = ref + 0.5 * h;
        g[static_cast<std::size_t>(i)] = v;
    }
    return g;
}

/// Adds Gaussian noise in stacking order (block, sample,
/// component), one draw per observation from a single seeded stream.
inline void add_noise(Dataset& data, const NoiseSpec& noise) {
    if (!(noise.relative_std >= 0.0) || !(noise.absolute_std >= 0.0))
        throw ConfigError("noise level must be non-negative");
    if (noise.relative_std == 0.0 && noise.absolute_std == 0.0) return;
    SplitMix64 rng(noise.seed);
    for (auto& b : data.blocks)
        for (auto& s : b.samples)
            for (auto& v : s.values) v += (noise.relative_std * std::abs(v) + noise.absolute_std) * rng.normal();
}

struct BlockSpec {
    std::string id;
    LoadingMode mode;
    std::vector<ModeParams> params;
};

/// Clean forward-model stresses at the given loading states, then noise.
inline Dataset generate(const GroundTruth& truth, const std::vector<BlockSpec>& blocks, const NoiseSpec& noise = {},
                        Units units = Units::Pa) {
    Dataset d;
    d.units = units;
    for (const auto& spec : blocks) {
        ModeBlock b{spec.id, spec.mode, {}};
        for (const auto& p : spec.params) {
            const Mat3 F = deformation_gradient(spec.mode.kind, p);
            b.samples.push_back({p, predict_stress(truth.lib, truth.coeffs, spec.mode, F)});
        }
        d.blocks.push_back(std::move(b));
    }
    add_noise(d, noise);
    return d;
}

/// One block per mode, n_per_mode equispaced values of the first loading
/// parameter over range (two-parameter modes load both directions equally).
inline Dataset generate_synthetic(const GroundTruth& truth, const std::vector<LoadingMode>& modes, int n_per_mode,
                                  std::pair<double, double> range, const NoiseSpec& noise = {},
                                  Units units = Units::Pa) {
    if (modes.empty()) throw ConfigError("no loading modes requested");
    std::vector<BlockSpec> specs;
    for (const auto& m : modes) {
        BlockSpec s{std::string(to_string(m.kind)), m, {}};
        for (double v : loading_grid(m.kind, range.first, range.second, n_per_mode))
            s.params.push_back({v, parameter_count(m.kind) == 2 ? v : 1.0});
        specs.push_back(std::move(s));
    }
    return generate(truth, specs, noise, units);
}

/// UT, PS and EBT, P11 only, 60 points on [0.6, 5.0].
inline Dataset isotropic_benchmark(const GroundTruth& truth, const NoiseSpec& noise = {}, int n_per_mode = 60,
                                   std::pair<double, double> range = {0.6, 5.0}) {
    return generate_synthetic(truth,
                              {LoadingMode(ModeKind::UT, {Component::P11}), LoadingMode(ModeKind::PS, {Component::P11}),
                               LoadingMode(ModeKind::EBT, {Component::P11})},
                              n_per_mode, range, noise);
}

/// Orthotropic reference energy for the myocardium surrogate (kPa):
/// quadratic I2, exp-quadratic I4f and I4n, exp-quadratic I8fs.
inline GroundTruth cardiac_reference() {
    using T = BasisTerm;
    return make_ground_truth("cardiac", {T::ortho(7), T::ortho(12), T::ortho(20), T::ortho(24)},
                             {6.1424, 0.0459, 0.0661, 0.0035}, {1.0, 31.2897, 16.3484, 13.1169});
}

/// Five biaxial protocols (fibre:normal strain ratios 1:1, 1:0.75, 0.75:1,
/// 1:0.5, 0.5:1 up to 10% stretch) and six simple shear modes up to
/// gamma = 0.5, ten loading steps each.
inline std::vector<BlockSpec> cardiac_protocols(int steps = 10) {
    std::vector<BlockSpec> specs;
    const std::pair<double, double> ratios[] = {{1.0, 1.0}, {1.0, 0.75}, {0.75, 1.0}, {1.0, 0.5}, {0.5, 1.0}};
    for (const auto& [rf, rn] : ratios) {
        BlockSpec s{"BT_" + detail::format_number(rf) + "_" + detail::format_number(rn),
                    LoadingMode(ModeKind::ANISO_BT, {Component::Pff, Component::Pnn}), {}};
        for (int i = 1; i <= steps; ++i) {
            const double t = 0.1 * i / static_cast<double>(steps);
            s.params.push_back({1.0 + t * rf, 1.0 + t * rn});
        }
        specs.push_back(std::move(s));
    }
    for (auto k : {ModeKind::SHEAR_fs, ModeKind::SHEAR_sf, ModeKind::SHEAR_fn, ModeKind::SHEAR_nf, ModeKind::SHEAR_sn,
                   ModeKind::SHEAR_ns}) {
        BlockSpec s{std::string(to_string(k)), LoadingMode(k), {}};
        for (int i = 1; i <= steps; ++i) s.params.push_back({0.5 * i / static_cast<double>(steps), 1.0});
        specs.push_back(std::move(s));
    }
    return specs;
}

/// Surrogate myocardium dataset: the reference energy on the cardiac
/// protocols plus fixed seeded scatter.
inline Dataset cardiac_surrogate(const NoiseSpec& scatter = {0.08, 20240601, 0.25}) {
    return generate(cardiac_reference(), cardiac_protocols(), scatter, Units::kPa);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader = "mode_kind,block_id,p1,p2,component,value";

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, std::size_t row, std::string_view what) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ParseError("non-numeric " + std::string(what) + " '" + std::string(s) + "'", row);
    return v;
}

} // namespace detail

inline void write_csv(const Dataset& data, std::ostream& os) {
    os << "# units: " << to_string(data.units) << '\n' << kCsvHeader << '\n';
    for (const auto& b : data.blocks) {
        const bool two = parameter_count(b.mode.kind) == 2;
        for (const auto& s : b.samples) {
            for (std::size_t c = 0; c < b.mode.measured.size(); ++c) {
                os << to_string(b.mode.kind) << ',' << b.id << ',' << detail::format_double(s.params.p1) << ','
                   << (two ? detail::format_double(s.params.p2) : std::string()) << ','
                   << to_string(b.mode.measured[c]) << ',' << detail::format_double(s.values[c]) << '\n';
            }
        }
    }
}

inline void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    write_csv(data, os);
    if (!os) throw Error("failed writing '" + path + "'");
}

/// Parses the observation-per-row CSV. Rows of a block with the same
/// loading parameters and distinct components form one sample; the block's
/// measured components are taken from its first sample.
inline Dataset read_csv(std::istream& is) {
    Dataset data;
    bool have_header = false;
    std::optional<Units> units;
    std::map<std::string, std::size_t> block_index;
    std::string line;
    std::size_t row = 0;

    // components collected per sample before reordering
    struct RawSample {
        ModeParams params;
        std::vector<std::pair<Component, double>> values;
        std::size_t row;
    };
    std::vector<std::vector<RawSample>> raw;

    while (std::getline(is, line)) {
        ++row;
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        if (text.front() == '#') {
            auto body = detail::trim(text.substr(1));
            if (body.rfind("units:", 0) == 0) units = units_from_string(detail::trim(body.substr(6)));
            continue;
        }
        const auto f = detail::split_fields(text);
        if (!have_header) {
            const auto expected = detail::split_fields(kCsvHeader);
            if (f != expected) throw ParseError("header must be '" + std::string(kCsvHeader) + "'", row);
            have_header = true;
            continue;
        }
        if (f.size() != 6) throw ParseError("expected 6 columns, found " + std::to_string(f.size()), row);

        ModeKind kind;
        Component comp;
        try {
            kind = mode_kind_from_string(f[0]);
            comp = component_from_string(f[4]);
        } catch (const Error& e) {
            throw ParseError(e.what(), row);
        }
        if (f[1].empty()) throw ParseError("missing block_id", row);
        ModeParams p;
        p.p1 = detail::parse_double(f[2], row, "p1");
        if (parameter_count(kind) == 2) {
            if (f[3].empty()) throw ParseError("missing p2 for two-parameter mode", row);
            p.p2 = detail::parse_double(f[3], row, "p2");
        } else if (!f[3].empty()) {
            p.p2 = detail::parse_double(f[3], row, "p2");
        }
        const double value = detail::parse_double(f[5], row, "value");

        const std::string id(f[1]);
        auto it = block_index.find(id);
        if (it == block_index.end()) {
            it = block_index.emplace(id, data.blocks.size()).first;
            data.blocks.push_back(ModeBlock{id, LoadingMode(kind), {}});
            data.blocks.back().mode.measured.clear();
            raw.emplace_back();
        }
        auto& block = data.blocks[it->second];
        if (block.mode.kind != kind) throw ParseError("block '" + id + "' mixes deformation modes", row);
        auto& samples = raw[it->second];
        const bool same_state = !samples.empty() && samples.back().params.p1 == p.p1 &&
                                samples.back().params.p2 == p.p2 &&
                                std::none_of(samples.back().values.begin(), samples.back().values.end(),
                                             [&](const auto& cv) { return cv.first == comp; });
        if (!same_state) samples.push_back({p, {}, row});
        samples.back().values.emplace_back(comp, value);
    }
    if (!have_header) throw ParseError("missing header", row);
    if (data.blocks.empty()) throw ParseError("no observations", row);

    for (std::size_t b = 0; b < data.blocks.size(); ++b) {
        auto& block = data.blocks[b];
        for (const auto& cv : raw[b].front().values) block.mode.measured.push_back(cv.first);
        try {
            require_admissible(block.mode);
        } catch (const Error& e) {
            throw ParseError(e.what(), raw[b].front().row);
        }
        for (const auto& rs : raw[b]) {
            if (rs.values.size() != block.mode.measured.size())
                throw ParseError("block '" + block.id + "': sample measures a different component set", rs.row);
            Sample s{rs.params, std::vector<double>(block.mode.measured.size())};
            for (const auto& [c, v] : rs.values) {
                const auto pos = std::find(block.mode.measured.begin(), block.mode.measured.end(), c);
                if (pos == block.mode.measured.end())
                    throw ParseError("block '" + block.id + "': unexpected component", rs.row);
                s.values[static_cast<std::size_t>(pos - block.mode.measured.begin())] = v;
            }
            block.samples.push_back(std::move(s));
        }
    }
    data.units = units.value_or(Units::Pa);
    return data;
}

inline Dataset load_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open dataset '" + path + "'");
    return read_csv(is);
}

} // namespace hyperdisc
