#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "assembly.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "library.hpp"
#include "nnls.hpp"

namespace hyperdisc {

struct RefineOptions {
    double ridge = 1e-6;
    double w_lower = 1e-3;
    double w_upper = 1e2;
    double threshold = 1e-6;
    int max_iter = 500;
    double ftol = 1e-10;
    double gtol = 1e-8;
    int max_failures = 20; // consecutive rejected steps before giving up
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct ModeMetrics {
    std::string block_id;
    ModeKind kind = ModeKind::UT;
    std::size_t n_obs = 0;
    std::optional<double> r2; // absent when the block's measurements have zero variance
    double rmse = 0.0;
    double nrmse = 0.0;
};

struct FitMetrics {
    std::vector<ModeMetrics> modes;
    double avg_nrmse = 0.0;
    double avg_rmse = 0.0;
    std::optional<double> overall_r2;
    double overall_rmse = 0.0;

    std::optional<double> min_r2() const {
        std::optional<double> m;
        for (const auto& md : modes)
            if (md.r2) m = m ? std::min(*m, *md.r2) : *md.r2;
        return m;
    }
};

/// Model predictions for every observation, one vector per block in
/// stacking order.
inline std::vector<std::vector<double>> predict_dataset(const ModelLibrary& lib, const EnergyCoefficients& coeffs,
                                                        const Dataset& data) {
    std::vector<std::vector<double>> out;
    out.reserve(data.blocks.size());
    for (const auto& b : data.blocks) {
        std::vector<double> pred;
        pred.reserve(b.n_obs());
        for (const auto& s : b.samples) {
            const auto p = predict_stress(lib, coeffs, b.mode, deformation_gradient(b.mode.kind, s.params));
            pred.insert(pred.end(), p.begin(), p.end());
        }
        out.push_back(std::move(pred));
    }
    return out;
}

inline FitMetrics evaluate_metrics(const ModelLibrary& lib, const EnergyCoefficients& coeffs, const Dataset& data) {
    data.validate();
    const auto pred = predict_dataset(lib, coeffs, data);
    FitMetrics m;
    double ss_res_all = 0.0, sum_all = 0.0, sum2_all = 0.0;
    std::size_t n_all = 0;
    for (std::size_t b = 0; b < data.blocks.size(); ++b) {
        const auto obs = data.blocks[b].observations();
        ModeMetrics mm;
        mm.block_id = data.blocks[b].id;
        mm.kind = data.blocks[b].mode.kind;
        mm.n_obs = obs.size();
        double ss_res = 0.0, sum = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const double r = obs[i] - pred[b][i];
            ss_res += r * r;
            sum += obs[i];
            sum2 += obs[i] * obs[i];
        }
        const double n = static_cast<double>(obs.size());
        const double mean = sum / n;
        double ss_tot = 0.0;
        for (double v : obs) ss_tot += (v - mean) * (v - mean);
        if (ss_tot > 0.0) mm.r2 = 1.0 - ss_res / ss_tot;
        mm.rmse = std::sqrt(ss_res / n);
        const double rms = std::sqrt(sum2 / n);
        mm.nrmse = rms > 0.0 ? mm.rmse / rms : std::numeric_limits<double>::quiet_NaN();
        m.avg_nrmse += mm.nrmse;
        m.avg_rmse += mm.rmse;
        ss_res_all += ss_res;
        sum_all += sum;
        sum2_all += sum2;
        n_all += obs.size();
        m.modes.push_back(std::move(mm));
    }
    const double nb = static_cast<double>(m.modes.size());
    m.avg_nrmse /= nb;
    m.avg_rmse /= nb;
    const double na = static_cast<double>(n_all);
    const double ss_tot_all = sum2_all - sum_all * sum_all / na;
    if (ss_tot_all > 0.0) m.overall_r2 = 1.0 - ss_res_all / ss_tot_all;
    m.overall_rmse = std::sqrt(ss_res_all / na);
    return m;
}

// ---------------------------------------------------------------------------
// Discovered model
// ---------------------------------------------------------------------------

struct Provenance {
    std::string algorithm;
    std::string criterion;
    std::uint64_t seed = 0;
    double sparse_seconds = 0.0;
    double refine_seconds = 0.0;
};

struct DiscoveredModel {
    std::vector<std::size_t> active_terms; // library indices, ascending
    std::vector<double> c_star;            // aligned with active_terms
    std::vector<double> w_star;            // aligned with active_terms (used only for terms with a slot)
    FitMetrics metrics;
    bool converged = true;
    int iterations = 0;
    std::string note;
    Provenance provenance;

    std::size_t size() const { return active_terms.size(); }

    EnergyCoefficients coefficients(const ModelLibrary& lib) const {
        EnergyCoefficients e = EnergyCoefficients::zeros(lib);
        for (std::size_t i = 0; i < active_terms.size(); ++i) {
            if (active_terms[i] >= lib.size()) throw ContractViolation("model term index out of range");
            e.c[active_terms[i]] = c_star[i];
            if (i < w_star.size()) e.w[active_terms[i]] = w_star[i];
        }
        return e;
    }
};

inline ModelLibrary sub_library(const ModelLibrary& lib, std::span<const std::size_t> active) {
    ModelLibrary sub;
    sub.frame = lib.frame;
    for (auto j : active) {
        if (j >= lib.size()) throw ContractViolation("active term index out of range");
        sub.terms.push_back(lib.terms[j]);
        sub.w_bar.push_back(lib.w_bar[j]);
    }
    return sub;
}

/// Removes coefficients below the threshold. Returns true if anything was
/// removed.
inline bool apply_threshold(DiscoveredModel& m, double threshold) {
    DiscoveredModel kept = m;
    kept.active_terms.clear();
    kept.c_star.clear();
    kept.w_star.clear();
    for (std::size_t i = 0; i < m.active_terms.size(); ++i) {
        if (m.c_star[i] < threshold) continue;
        kept.active_terms.push_back(m.active_terms[i]);
        kept.c_star.push_back(m.c_star[i]);
        kept.w_star.push_back(i < m.w_star.size() ? m.w_star[i] : 0.0);
    }
    const bool changed = kept.active_terms.size() != m.active_terms.size();
    m = std::move(kept);
    return changed;
}

// ---------------------------------------------------------------------------
// Linear refit
// ---------------------------------------------------------------------------

/// Ridge-regularised NNLS on the weighted, unstandardised columns of the
/// active terms (nonlinear parameters held at w, or w_bar when w is empty),
/// repeated after thresholding until the support is stable.
inline DiscoveredModel refit_linear(const Dataset& data, const ModelLibrary& lib, std::vector<std::size_t> active,
                                    const RefineOptions& opt = {}, std::span<const double> block_weights = {},
                                    std::span<const double> w = {}) {
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    if (active.empty()) throw DegenerateError("refit needs at least one active term");

    DiscoveredModel m;
    while (true) {
        if (active.empty()) throw DegenerateError("every refitted coefficient fell below the threshold");
        std::vector<double> w_sub;
        for (auto j : active) w_sub.push_back(j < w.size() ? w[j] : lib.w_bar[j]);
        const ModelLibrary sub = sub_library(lib, active);
        const WeightedSystem ws = build_weighted_system(data, sub, w_sub, block_weights);
        const auto fit = nnls_ridge(ws.design, ws.target, opt.ridge);
        m.active_terms = active;
        m.c_star.assign(fit.x.data(), fit.x.data() + fit.x.size());
        m.w_star = w_sub;
        m.converged = fit.converged;
        if (!apply_threshold(m, opt.threshold)) break;
        active = m.active_terms;
    }
    m.metrics = evaluate_metrics(lib, m.coefficients(lib), data);
    return m;
}

// ---------------------------------------------------------------------------
// Joint refit of coefficients and nonlinear parameters
// ---------------------------------------------------------------------------

/// Residual r(c, w) = [Psi(w) c - y; sqrt(ridge) c] of the weighted system
/// for a fixed set of active terms. The parameter vector is c followed by
/// the w of every active term that has a nonlinear slot.
class JointProblem {
public:
    JointProblem(const Dataset& data, const ModelLibrary& lib, std::vector<std::size_t> active, double ridge,
                 std::span<const double> block_weights = {})
        : data_(data), sub_(sub_library(lib, active)), active_(std::move(active)), ridge_(ridge),
          weights_(block_weights.empty() ? mode_weights(data)
                                         : std::vector<double>(block_weights.begin(), block_weights.end())) {
        for (std::size_t i = 0; i < sub_.size(); ++i)
            if (sub_.terms[i].has_nonlinear_slot()) slots_.push_back(i);
    }

    std::size_t n_terms() const { return active_.size(); }
    std::size_t n_slots() const { return slots_.size(); }
    std::size_t n_params() const { return n_terms() + n_slots(); }
    const std::vector<std::size_t>& slots() const { return slots_; }

    Eigen::VectorXd pack(std::span<const double> c, std::span<const double> w) const {
        Eigen::VectorXd th(static_cast<Eigen::Index>(n_params()));
        for (std::size_t i = 0; i < n_terms(); ++i) th(static_cast<Eigen::Index>(i)) = c[i];
        for (std::size_t s = 0; s < n_slots(); ++s) th(static_cast<Eigen::Index>(n_terms() + s)) = w[slots_[s]];
        return th;
    }

    std::vector<double> w_of(const Eigen::VectorXd& th) const {
        std::vector<double> w = sub_.w_bar;
        for (std::size_t s = 0; s < n_slots(); ++s) w[slots_[s]] = th(static_cast<Eigen::Index>(n_terms() + s));
        return w;
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& th) const {
        const auto w = w_of(th);
        const WeightedSystem ws = build_weighted_system(data_, sub_, w, weights_);
        const auto k = static_cast<Eigen::Index>(n_terms());
        const Eigen::Index n = ws.design.rows();
        Eigen::VectorXd r(n + k);
        r.head(n) = ws.design * th.head(k) - ws.target;
        r.tail(k) = std::sqrt(ridge_) * th.head(k);
        return r;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& th) const {
        const auto w = w_of(th);
        const WeightedSystem ws = build_weighted_system(data_, sub_, w, weights_);
        const Eigen::MatrixXd dpsi = weighted_dw(w);
        const auto k = static_cast<Eigen::Index>(n_terms());
        const Eigen::Index n = ws.design.rows();
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + k, static_cast<Eigen::Index>(n_params()));
        J.topLeftCorner(n, k) = ws.design;
        J.bottomLeftCorner(k, k) = std::sqrt(ridge_) * Eigen::MatrixXd::Identity(k, k);
        for (std::size_t s = 0; s < n_slots(); ++s) {
            const auto j = static_cast<Eigen::Index>(slots_[s]);
            J.col(k + static_cast<Eigen::Index>(s)).head(n) = th(j) * dpsi.col(j);
        }
        return J;
    }

    double cost(const Eigen::VectorXd& th) const { return 0.5 * residual(th).squaredNorm(); }

private:
    Eigen::MatrixXd weighted_dw(std::span<const double> w) const {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(data_.n_obs()), static_cast<Eigen::Index>(sub_.size()));
        Eigen::Index row = 0;
        for (std::size_t b = 0; b < data_.blocks.size(); ++b) {
            const auto& block = data_.blocks[b];
            for (const auto& s : block.samples) {
                const Eigen::MatrixXd d =
                    stress_block_dw(sub_, block.mode, deformation_gradient(block.mode.kind, s.params), w);
                for (Eigen::Index r = 0; r < d.rows(); ++r) out.row(row++) = weights_[b] * d.row(r);
            }
        }
        return out;
    }

    const Dataset& data_;
    ModelLibrary sub_;
    std::vector<std::size_t> active_;
    double ridge_;
    std::vector<double> weights_;
    std::vector<std::size_t> slots_;
};

struct LmResult {
    Eigen::VectorXd theta;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string reason;
};

/// Projected Levenberg-Marquardt on a JointProblem with c >= 0 and
/// w in [w_lower, w_upper]. Variables sitting on a bound with the gradient
/// pushing outward are frozen for the step; trial points are projected
/// back onto the box.
inline LmResult projected_lm(const JointProblem& prob, Eigen::VectorXd theta, const RefineOptions& opt) {
    const auto k = static_cast<Eigen::Index>(prob.n_terms());
    const auto np = static_cast<Eigen::Index>(prob.n_params());
    auto project = [&](Eigen::VectorXd& th) {
        for (Eigen::Index i = 0; i < np; ++i)
            th(i) = i < k ? std::max(th(i), 0.0) : std::clamp(th(i), opt.w_lower, opt.w_upper);
    };
    project(theta);

    LmResult res;
    Eigen::VectorXd r = prob.residual(theta);
    double f = 0.5 * r.squaredNorm();
    double mu = 1e-3;
    int failures = 0;

    for (int it = 0; it < opt.max_iter; ++it) {
        res.iterations = it + 1;
        const Eigen::MatrixXd J = prob.jacobian(theta);
        const Eigen::VectorXd g = J.transpose() * r;

        std::vector<Eigen::Index> free;
        double pg_inf = 0.0;
        for (Eigen::Index i = 0; i < np; ++i) {
            const bool at_lower = i < k ? theta(i) <= 0.0 : theta(i) <= opt.w_lower;
            const bool at_upper = i >= k && theta(i) >= opt.w_upper;
            if ((at_lower && g(i) > 0.0) || (at_upper && g(i) < 0.0)) continue;
            free.push_back(i);
            pg_inf = std::max(pg_inf, std::abs(g(i)));
        }
        if (pg_inf < opt.gtol) {
            res.converged = true;
            res.reason = "projected gradient below tolerance";
            break;
        }

        const auto nf = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd Jf(J.rows(), nf);
        Eigen::VectorXd gf(nf);
        for (Eigen::Index a = 0; a < nf; ++a) {
            Jf.col(a) = J.col(free[static_cast<std::size_t>(a)]);
            gf(a) = g(free[static_cast<std::size_t>(a)]);
        }
        const Eigen::MatrixXd H = Jf.transpose() * Jf;
        Eigen::VectorXd D = H.diagonal();
        const double dmax = std::max(D.maxCoeff(), std::numeric_limits<double>::min());
        D = D.cwiseMax(1e-12 * dmax);

        bool accepted = false;
        while (!accepted && failures < opt.max_failures) {
            Eigen::MatrixXd A = H;
            A.diagonal() += mu * D;
            const Eigen::VectorXd step = A.ldlt().solve(-gf);
            Eigen::VectorXd trial = theta;
            for (Eigen::Index a = 0; a < nf; ++a) trial(free[static_cast<std::size_t>(a)]) += step(a);
            project(trial);
            const Eigen::VectorXd rt = prob.residual(trial);
            const double ft = 0.5 * rt.squaredNorm();
            if (std::isfinite(ft) && ft < f) {
                const double rel = (f - ft) / std::max(f, std::numeric_limits<double>::min());
                theta = trial;
                r = rt;
                f = ft;
                mu = std::max(mu / 3.0, 1e-12);
                failures = 0;
                accepted = true;
                if (rel < opt.ftol) {
                    res.converged = true;
                    res.reason = "relative cost change below tolerance";
                }
            } else {
                mu *= 4.0;
                ++failures;
            }
        }
        if (res.converged) break;
        if (!accepted) {
            res.reason = "no cost decrease in " + std::to_string(opt.max_failures) + " consecutive steps";
            break;
        }
    }
    if (res.reason.empty()) res.reason = "iteration limit reached";
    res.theta = theta;
    res.cost = f;
    return res;
}

/// Joint refit of c and the nonlinear parameters of the active terms,
/// started from the linear refit at w_bar. Thresholding can shrink the
/// support; the fit is then repeated from the current values.
inline DiscoveredModel refit_nonlinear(const Dataset& data, const ModelLibrary& lib, std::vector<std::size_t> active,
                                       const RefineOptions& opt = {}, std::span<const double> block_weights = {}) {
    DiscoveredModel m = refit_linear(data, lib, std::move(active), opt, block_weights);
    int total_iter = 0;
    while (true) {
        const JointProblem prob(data, lib, m.active_terms, opt.ridge, block_weights);
        if (prob.n_slots() == 0) break;
        const auto lm = projected_lm(prob, prob.pack(m.c_star, m.w_star), opt);
        total_iter += lm.iterations;
        const auto w = prob.w_of(lm.theta);
        for (std::size_t i = 0; i < m.size(); ++i) {
            m.c_star[i] = lm.theta(static_cast<Eigen::Index>(i));
            m.w_star[i] = w[i];
        }
        m.converged = lm.converged;
        m.note = lm.reason;
        if (!apply_threshold(m, opt.threshold)) break;
        if (m.active_terms.empty()) throw DegenerateError("every refitted coefficient fell below the threshold");
    }
    m.iterations = total_iter;
    m.metrics = evaluate_metrics(lib, m.coefficients(lib), data);
    return m;
}

/// Linear refit when no active term has a nonlinear slot, joint refit
/// otherwise.
inline DiscoveredModel refine(const Dataset& data, const ModelLibrary& lib, const std::vector<std::size_t>& active,
                              const RefineOptions& opt = {}, std::span<const double> block_weights = {}) {
    bool nonlinear = false;
    for (auto j : active)
        if (j < lib.size() && lib.terms[j].has_nonlinear_slot()) nonlinear = true;
    return nonlinear ? refit_nonlinear(data, lib, active, opt, block_weights)
                     : refit_linear(data, lib, active, opt, block_weights);
}

} // namespace hyperdisc
