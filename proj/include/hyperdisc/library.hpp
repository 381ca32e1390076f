#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "kinematics.hpp"

namespace hyperdisc {

enum class TermFamily { MooneyRivlin, Ogden, Ortho };

/// One candidate basis function phi_j of the strain-energy library.
///
/// Mooney-Rivlin terms are (I1-3)^j (I2-3)^k, Ogden terms are
/// sum_i lambda_i^alpha - 3, and orthotropic terms are the 32 functions built
/// from eight kinematic arguments (I1-3, I2-3, the clamped I4 stretches and
/// the I8 couplings) in four shapes: linear, exp-linear, quadratic and
/// exp-quadratic. Even orthotropic indices are exponentials and carry a
/// nonlinear parameter w.
struct BasisTerm {
    TermFamily family = TermFamily::MooneyRivlin;
    int j = 0;
    int k = 0;
    double alpha = 0.0;
    int index = 0;

    static BasisTerm mooney_rivlin(int j, int k) {
        if (j < 0 || k < 0 || j + k < 1)
            throw ConfigError("Mooney-Rivlin term needs j, k >= 0 and j + k >= 1");
        BasisTerm t;
        t.family = TermFamily::MooneyRivlin;
        t.j = j;
        t.k = k;
        return t;
    }

    static BasisTerm ogden(double alpha) {
        if (alpha == 0.0 || !std::isfinite(alpha))
            throw ConfigError("Ogden exponent must be finite and nonzero");
        BasisTerm t;
        t.family = TermFamily::Ogden;
        t.alpha = alpha;
        return t;
    }

    static BasisTerm ortho(int index) {
        if (index < 1 || index > 32) throw ConfigError("orthotropic term index must lie in 1..32");
        BasisTerm t;
        t.family = TermFamily::Ortho;
        t.index = index;
        return t;
    }

    bool has_nonlinear_slot() const { return family == TermFamily::Ortho && index % 2 == 0; }

    // 0..7: I1, I2, I4f, I4s, I4n, I8fs, I8fn, I8sn
    int ortho_argument() const { return (index - 1) / 4; }
    // 0 linear, 1 exp-linear, 2 quadratic, 3 exp-quadratic
    int ortho_shape() const { return (index - 1) % 4; }

    std::string label() const;

    friend bool operator==(const BasisTerm& a, const BasisTerm& b) {
        if (a.family != b.family) return false;
        switch (a.family) {
        case TermFamily::MooneyRivlin: return a.j == b.j && a.k == b.k;
        case TermFamily::Ogden: return a.alpha == b.alpha;
        case TermFamily::Ortho: return a.index == b.index;
        }
        return false;
    }
};

namespace detail {

inline std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

inline constexpr std::array<const char*, 8> kOrthoArgumentLabels = {
    "(I1-3)", "(I2-3)", "(I4f*-1)", "(I4s*-1)", "(I4n*-1)", "I8fs", "I8fn", "I8sn",
};

} // namespace detail

inline std::string BasisTerm::label() const {
    switch (family) {
    case TermFamily::MooneyRivlin: {
        std::string out;
        auto power = [](const char* base, int p) {
            std::string s = base;
            if (p > 1) s += "^" + std::to_string(p);
            return s;
        };
        if (j > 0) out += power("(I1-3)", j);
        if (k > 0) out += power("(I2-3)", k);
        return out;
    }
    case TermFamily::Ogden:
        return "sum(lambda^" + detail::format_number(alpha) + "-1)";
    case TermFamily::Ortho: {
        const std::string x = detail::kOrthoArgumentLabels[ortho_argument()];
        switch (ortho_shape()) {
        case 0: return x;
        case 1: return "exp[w*" + x + "]-1";
        case 2: return x + "^2";
        default: return "exp[w*" + x + "^2]-1";
        }
    }
    }
    return "?";
}

/// Ordered set of basis terms. Term order fixes the column order of every
/// design matrix built from the library. w_bar holds the linearisation value
/// of each term's nonlinear parameter (ignored for terms without one).
struct ModelLibrary {
    std::vector<BasisTerm> terms;
    std::vector<double> w_bar;
    std::optional<StructuralFrame> frame;

    std::size_t size() const { return terms.size(); }

    bool is_isotropic() const {
        for (const auto& t : terms)
            if (t.family == TermFamily::Ortho) return false;
        return true;
    }

    bool has_nonlinear_slots() const {
        for (const auto& t : terms)
            if (t.has_nonlinear_slot()) return true;
        return false;
    }

    std::optional<std::size_t> find(const BasisTerm& term) const {
        for (std::size_t i = 0; i < terms.size(); ++i)
            if (terms[i] == term) return i;
        return std::nullopt;
    }
};

/// Linear coefficients c (one per term) and nonlinear parameters w (one per
/// term; only read for terms with a nonlinear slot).
struct EnergyCoefficients {
    std::vector<double> c;
    std::vector<double> w;

    static EnergyCoefficients zeros(const ModelLibrary& lib) {
        return {std::vector<double>(lib.size(), 0.0), lib.w_bar};
    }
};

inline ModelLibrary make_library(std::vector<BasisTerm> terms, std::optional<StructuralFrame> frame = std::nullopt,
                                 double w_bar = 1.0) {
    ModelLibrary lib;
    lib.terms = std::move(terms);
    lib.w_bar.assign(lib.terms.size(), w_bar);
    lib.frame = frame;
    for (const auto& t : lib.terms)
        if (t.family == TermFamily::Ortho && !lib.frame) lib.frame = StructuralFrame::canonical();
    return lib;
}

/// Mooney-Rivlin terms of total order 1..mr_order in graded order (j
/// descending within a grade), followed by one Ogden term per alpha.
inline ModelLibrary make_isotropic_library(int mr_order, const std::vector<double>& ogden_alphas) {
    if (mr_order < 0) throw ConfigError("Mooney-Rivlin order must be non-negative");
    std::vector<BasisTerm> terms;
    for (int grade = 1; grade <= mr_order; ++grade)
        for (int j = grade; j >= 0; --j) terms.push_back(BasisTerm::mooney_rivlin(j, grade - j));
    for (double a : ogden_alphas) terms.push_back(BasisTerm::ogden(a));
    if (terms.empty()) throw ConfigError("isotropic library is empty");
    return make_library(std::move(terms));
}

// Terms whose stress does not vanish in the undeformed state: the linear and
// exp-linear I8 couplings (d I8 / dF = sym(a0 x b0) at F = I is pure shear and
// survives pressure elimination).
inline bool induces_reference_stress(const BasisTerm& t) {
    return t.family == TermFamily::Ortho && t.ortho_argument() >= 5 && t.ortho_shape() <= 1;
}

/// The 32-term orthotropic library, all nonlinear parameters fixed to w_bar.
/// With drop_reference_stress_terms the six I8 terms that induce stress at
/// F = I are left out.
inline ModelLibrary make_orthotropic_library(const StructuralFrame& frame, double w_bar,
                                             bool drop_reference_stress_terms = false) {
    if (!frame.is_orthonormal()) throw DomainError("structural frame is not orthonormal");
    if (!(w_bar > 0.0) || !std::isfinite(w_bar))
        throw ConfigError("linearisation value w_bar must be positive");
    std::vector<BasisTerm> terms;
    for (int i = 1; i <= 32; ++i) {
        auto t = BasisTerm::ortho(i);
        if (drop_reference_stress_terms && induces_reference_stress(t)) continue;
        terms.push_back(t);
    }
    return make_library(std::move(terms), frame, w_bar);
}

/// Everything a term evaluation needs from one deformation gradient,
/// computed once and shared across all library columns.
class KinematicState {
public:
    explicit KinematicState(const Mat3& F, const std::optional<StructuralFrame>& frame = std::nullopt)
        : F_(F), C_(F.transpose() * F), inv_(invariants(F, frame)), frame_(frame) {
        FinvT_ = F.inverse().transpose();
        diagonal_ = (F - Mat3(F.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
        if (!diagonal_) {
            Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
            U_ = svd.matrixU();
            V_ = svd.matrixV();
            sigma_ = svd.singularValues();
        }
    }

    const Mat3& F() const { return F_; }
    const Mat3& C() const { return C_; }
    const Mat3& FinvT() const { return FinvT_; }
    const InvariantSet& inv() const { return inv_; }

    // dI1/dF
    Mat3 dI1() const { return 2.0 * F_; }
    // dI2/dF
    Mat3 dI2() const { return 2.0 * (inv_.I1 * F_ - F_ * C_); }

    // Gradient of sum_i lambda_i^alpha.
    Mat3 ogden_gradient(double alpha) const {
        if (diagonal_) {
            Mat3 G = Mat3::Zero();
            for (int i = 0; i < 3; ++i) G(i, i) = alpha * std::pow(F_(i, i), alpha - 1.0);
            return G;
        }
        Vec3 g;
        for (int i = 0; i < 3; ++i) g(i) = alpha * std::pow(sigma_(i), alpha - 1.0);
        return U_ * g.asDiagonal() * V_.transpose();
    }

    double ogden_value(double alpha) const {
        double s = 0.0;
        for (double l : inv_.stretches) s += std::pow(l, alpha);
        return s - 3.0;
    }

    // Kinematic argument x of an orthotropic term and dx/dF.
    std::pair<double, Mat3> ortho_argument(int argument) const {
        const auto& fr = frame_ ? *frame_ : StructuralFrame{};
        const auto& a = inv_.aniso ? *inv_.aniso : InvariantSet::Anisotropic{};
        auto stretch_arg = [&](double i4, const Vec3& dir) -> std::pair<double, Mat3> {
            // max{I4, 1} - 1; derivative zero on the compressive side and at I4 = 1
            if (i4 > 1.0) return {i4 - 1.0, 2.0 * F_ * (dir * dir.transpose())};
            return {0.0, Mat3::Zero()};
        };
        auto coupling_arg = [&](double i8, const Vec3& u, const Vec3& v) -> std::pair<double, Mat3> {
            return {i8, F_ * (u * v.transpose() + v * u.transpose())};
        };
        switch (argument) {
        case 0: return {inv_.I1 - 3.0, dI1()};
        case 1: return {inv_.I2 - 3.0, dI2()};
        case 2: return stretch_arg(a.I4f, fr.f0);
        case 3: return stretch_arg(a.I4s, fr.s0);
        case 4: return stretch_arg(a.I4n, fr.n0);
        case 5: return coupling_arg(a.I8fs, fr.f0, fr.s0);
        case 6: return coupling_arg(a.I8fn, fr.f0, fr.n0);
        case 7: return coupling_arg(a.I8sn, fr.s0, fr.n0);
        default: break;
        }
        throw ContractViolation("orthotropic argument out of range");
    }

private:
    Mat3 F_;
    Mat3 C_;
    Mat3 FinvT_;
    InvariantSet inv_;
    std::optional<StructuralFrame> frame_;
    bool diagonal_ = false;
    Mat3 U_ = Mat3::Identity();
    Mat3 V_ = Mat3::Identity();
    Vec3 sigma_ = Vec3::Ones();
};

namespace detail {

inline double ipow(double x, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

// Scalar shape functions of the orthotropic family: value, d/dx, d/dw and
// d2/dx dw for shape 0..3 at argument x and parameter w.
struct ShapeEval {
    double value = 0.0;
    double dx = 0.0;
    double dw = 0.0;
    double dxdw = 0.0;
};

inline ShapeEval ortho_shape(int shape, double x, double w) {
    ShapeEval s;
    switch (shape) {
    case 0:
        s.value = x;
        s.dx = 1.0;
        break;
    case 1: {
        const double e = std::exp(w * x);
        s.value = e - 1.0;
        s.dx = w * e;
        s.dw = x * e;
        s.dxdw = e * (1.0 + w * x);
        break;
    }
    case 2:
        s.value = x * x;
        s.dx = 2.0 * x;
        break;
    default: {
        const double e = std::exp(w * x * x);
        s.value = e - 1.0;
        s.dx = 2.0 * w * x * e;
        s.dw = x * x * e;
        s.dxdw = 2.0 * x * e * (1.0 + w * x * x);
        break;
    }
    }
    return s;
}

} // namespace detail

/// phi_j evaluated at the state.
inline double term_value(const BasisTerm& t, double w, const KinematicState& s) {
    switch (t.family) {
    case TermFamily::MooneyRivlin:
        return detail::ipow(s.inv().I1 - 3.0, t.j) * detail::ipow(s.inv().I2 - 3.0, t.k);
    case TermFamily::Ogden:
        return s.ogden_value(t.alpha);
    case TermFamily::Ortho: {
        const auto [x, dx] = s.ortho_argument(t.ortho_argument());
        return detail::ortho_shape(t.ortho_shape(), x, w).value;
    }
    }
    return 0.0;
}

/// d phi_j / dF, before pressure elimination.
inline Mat3 term_gradient(const BasisTerm& t, double w, const KinematicState& s) {
    switch (t.family) {
    case TermFamily::MooneyRivlin: {
        const double a = s.inv().I1 - 3.0;
        const double b = s.inv().I2 - 3.0;
        Mat3 G = Mat3::Zero();
        if (t.j > 0) G += (t.j * detail::ipow(a, t.j - 1) * detail::ipow(b, t.k)) * s.dI1();
        if (t.k > 0) G += (t.k * detail::ipow(a, t.j) * detail::ipow(b, t.k - 1)) * s.dI2();
        return G;
    }
    case TermFamily::Ogden:
        return s.ogden_gradient(t.alpha);
    case TermFamily::Ortho: {
        const auto [x, dx] = s.ortho_argument(t.ortho_argument());
        return detail::ortho_shape(t.ortho_shape(), x, w).dx * dx;
    }
    }
    return Mat3::Zero();
}

/// d^2 phi_j / dF dw; zero for terms without a nonlinear slot.
inline Mat3 term_gradient_dw(const BasisTerm& t, double w, const KinematicState& s) {
    if (!t.has_nonlinear_slot()) return Mat3::Zero();
    const auto [x, dx] = s.ortho_argument(t.ortho_argument());
    return detail::ortho_shape(t.ortho_shape(), x, w).dxdw * dx;
}

/// Removes the hydrostatic part fixed by the mode's traction-free direction:
/// P = G - p F^-T with p chosen so that P_zz = 0.
inline Mat3 eliminate_pressure(const Mat3& G, ModeKind kind, const Mat3& FinvT) {
    const auto z = traction_free_index(kind);
    if (!z) return G;
    const double p = G(*z, *z) / FinvT(*z, *z);
    return G - p * FinvT;
}

inline void require_admissible(const LoadingMode& mode) {
    const auto allowed = admissible_components(mode.kind);
    for (Component c : mode.measured) {
        if (std::find(allowed.begin(), allowed.end(), c) == allowed.end())
            throw ContractViolation("component " + std::string(to_string(c)) +
                                    " is not determinable for mode " + std::string(to_string(mode.kind)));
    }
}

inline double extract(const Mat3& P, Component c) {
    const auto [i, j] = component_slot(c);
    return P(i, j);
}

inline double term_w(const ModelLibrary& lib, std::span<const double> w, std::size_t j) {
    if (!lib.terms[j].has_nonlinear_slot()) return 0.0;
    return j < w.size() ? w[j] : lib.w_bar[j];
}

/// Effective stress of term j under the mode, one value per measured
/// component (same order as mode.measured).
inline std::vector<double> stress_contribution(const ModelLibrary& lib, std::size_t term_index, const LoadingMode& mode,
                                               const Mat3& F, std::span<const double> w = {}) {
    if (term_index >= lib.size()) throw ContractViolation("term index out of range");
    require_admissible(mode);
    const KinematicState s(F, lib.frame);
    const Mat3 P = eliminate_pressure(term_gradient(lib.terms[term_index], term_w(lib, w, term_index), s), mode.kind,
                                      s.FinvT());
    std::vector<double> out;
    out.reserve(mode.measured.size());
    for (Component c : mode.measured) out.push_back(extract(P, c));
    return out;
}

/// All term contributions at one sample: rows = measured components,
/// columns = library terms.
inline Eigen::MatrixXd stress_block(const ModelLibrary& lib, const LoadingMode& mode, const Mat3& F,
                                    std::span<const double> w = {}) {
    const KinematicState s(F, lib.frame);
    Eigen::MatrixXd out(mode.measured.size(), lib.size());
    for (std::size_t j = 0; j < lib.size(); ++j) {
        const Mat3 P = eliminate_pressure(term_gradient(lib.terms[j], term_w(lib, w, j), s), mode.kind, s.FinvT());
        for (std::size_t r = 0; r < mode.measured.size(); ++r) out(r, j) = extract(P, mode.measured[r]);
    }
    return out;
}

/// Derivative of stress_block with respect to each term's own nonlinear
/// parameter (column j is zero for terms without a slot).
inline Eigen::MatrixXd stress_block_dw(const ModelLibrary& lib, const LoadingMode& mode, const Mat3& F,
                                       std::span<const double> w = {}) {
    const KinematicState s(F, lib.frame);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(mode.measured.size(), lib.size());
    for (std::size_t j = 0; j < lib.size(); ++j) {
        if (!lib.terms[j].has_nonlinear_slot()) continue;
        const Mat3 P =
            eliminate_pressure(term_gradient_dw(lib.terms[j], term_w(lib, w, j), s), mode.kind, s.FinvT());
        for (std::size_t r = 0; r < mode.measured.size(); ++r) out(r, j) = extract(P, mode.measured[r]);
    }
    return out;
}

/// W = sum_j c_j phi_j(F).
inline double energy(const ModelLibrary& lib, const EnergyCoefficients& coeffs, const Mat3& F) {
    if (coeffs.c.size() != lib.size()) throw ContractViolation("coefficient count does not match library");
    const KinematicState s(F, lib.frame);
    double W = 0.0;
    for (std::size_t j = 0; j < lib.size(); ++j) {
        if (coeffs.c[j] == 0.0) continue;
        W += coeffs.c[j] * term_value(lib.terms[j], term_w(lib, coeffs.w, j), s);
    }
    return W;
}

/// Model stress for the measured components of a mode.
inline std::vector<double> predict_stress(const ModelLibrary& lib, const EnergyCoefficients& coeffs,
                                          const LoadingMode& mode, const Mat3& F) {
    if (coeffs.c.size() != lib.size()) throw ContractViolation("coefficient count does not match library");
    require_admissible(mode);
    const KinematicState s(F, lib.frame);
    Mat3 G = Mat3::Zero();
    for (std::size_t j = 0; j < lib.size(); ++j) {
        if (coeffs.c[j] == 0.0) continue;
        G += coeffs.c[j] * term_gradient(lib.terms[j], term_w(lib, coeffs.w, j), s);
    }
    const Mat3 P = eliminate_pressure(G, mode.kind, s.FinvT());
    std::vector<double> out;
    for (Component c : mode.measured) out.push_back(extract(P, c));
    return out;
}

struct ConsistencyReport {
    double mu0_MR = 0.0;
    double mu0_Ogden = 0.0;
    double mu0_total = 0.0;
    bool positive = false;
};

/// Initial shear modulus implied by the linearisation of an isotropic model.
inline ConsistencyReport check_consistency(const ModelLibrary& lib, const EnergyCoefficients& coeffs) {
    if (!lib.is_isotropic()) throw ConfigError("consistency check is only defined for isotropic libraries");
    if (coeffs.c.size() != lib.size()) throw ContractViolation("coefficient count does not match library");
    ConsistencyReport r;
    for (std::size_t j = 0; j < lib.size(); ++j) {
        const auto& t = lib.terms[j];
        if (t.family == TermFamily::MooneyRivlin && t.j + t.k == 1) r.mu0_MR += 2.0 * coeffs.c[j];
        if (t.family == TermFamily::Ogden) r.mu0_Ogden += 0.5 * coeffs.c[j] * t.alpha * (t.alpha - 1.0);
    }
    r.mu0_total = r.mu0_MR + r.mu0_Ogden;
    r.positive = r.mu0_total > 0.0;
    return r;
}

} // namespace hyperdisc
