#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace hyperdisc {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

enum class ModeKind {
    UT,
    SS,
    PS,
    BT,
    EBT,
    ANISO_BT,
    SHEAR_fs,
    SHEAR_sf,
    SHEAR_fn,
    SHEAR_nf,
    SHEAR_sn,
    SHEAR_ns,
};

inline constexpr std::array<ModeKind, 12> kAllModeKinds = {
    ModeKind::UT,       ModeKind::SS,       ModeKind::PS,       ModeKind::BT,
    ModeKind::EBT,      ModeKind::ANISO_BT, ModeKind::SHEAR_fs, ModeKind::SHEAR_sf,
    ModeKind::SHEAR_fn, ModeKind::SHEAR_nf, ModeKind::SHEAR_sn, ModeKind::SHEAR_ns,
};

inline std::string_view to_string(ModeKind kind) {
    switch (kind) {
    case ModeKind::UT: return "UT";
    case ModeKind::SS: return "SS";
    case ModeKind::PS: return "PS";
    case ModeKind::BT: return "BT";
    case ModeKind::EBT: return "EBT";
    case ModeKind::ANISO_BT: return "ANISO_BT";
    case ModeKind::SHEAR_fs: return "SHEAR_fs";
    case ModeKind::SHEAR_sf: return "SHEAR_sf";
    case ModeKind::SHEAR_fn: return "SHEAR_fn";
    case ModeKind::SHEAR_nf: return "SHEAR_nf";
    case ModeKind::SHEAR_sn: return "SHEAR_sn";
    case ModeKind::SHEAR_ns: return "SHEAR_ns";
    }
    throw ConfigError("unknown deformation mode");
}

inline ModeKind mode_kind_from_string(std::string_view label) {
    for (ModeKind k : kAllModeKinds)
        if (to_string(k) == label) return k;
    throw ConfigError("unknown deformation mode '" + std::string(label) + "'");
}

inline bool is_shear_mode(ModeKind kind) {
    return kind >= ModeKind::SHEAR_fs;
}

inline bool is_anisotropic_mode(ModeKind kind) {
    return kind == ModeKind::ANISO_BT || is_shear_mode(kind);
}

// Number of scalar loading parameters a sample of this mode carries.
inline int parameter_count(ModeKind kind) {
    return (kind == ModeKind::BT || kind == ModeKind::ANISO_BT) ? 2 : 1;
}

// Stress component labels. Isotropic modes use 1/2/3 indices, anisotropic
// modes the fibre/sheet/normal frame; both map onto the same 3x3 slots.
enum class Component { P11, P22, P12, Pff, Pnn, Pfs, Psf, Pfn, Pnf, Psn, Pns };

inline constexpr std::array<Component, 11> kAllComponents = {
    Component::P11, Component::P22, Component::P12, Component::Pff,
    Component::Pnn, Component::Pfs, Component::Psf, Component::Pfn,
    Component::Pnf, Component::Psn, Component::Pns,
};

inline std::string_view to_string(Component c) {
    switch (c) {
    case Component::P11: return "P11";
    case Component::P22: return "P22";
    case Component::P12: return "P12";
    case Component::Pff: return "Pff";
    case Component::Pnn: return "Pnn";
    case Component::Pfs: return "Pfs";
    case Component::Psf: return "Psf";
    case Component::Pfn: return "Pfn";
    case Component::Pnf: return "Pnf";
    case Component::Psn: return "Psn";
    case Component::Pns: return "Pns";
    }
    throw ConfigError("unknown stress component");
}

inline Component component_from_string(std::string_view label) {
    for (Component c : kAllComponents)
        if (to_string(c) == label) return c;
    throw ConfigError("unknown stress component '" + std::string(label) + "'");
}

// (row, column) of the component in the 3x3 first Piola-Kirchhoff tensor.
inline std::pair<int, int> component_slot(Component c) {
    switch (c) {
    case Component::P11: return {0, 0};
    case Component::P22: return {1, 1};
    case Component::P12: return {0, 1};
    case Component::Pff: return {0, 0};
    case Component::Pnn: return {2, 2};
    case Component::Pfs: return {0, 1};
    case Component::Psf: return {1, 0};
    case Component::Pfn: return {0, 2};
    case Component::Pnf: return {2, 0};
    case Component::Psn: return {1, 2};
    case Component::Pns: return {2, 1};
    }
    throw ConfigError("unknown stress component");
}

// Slot of the shear amount gamma in F for a simple-shear mode.
inline std::pair<int, int> shear_slot(ModeKind kind) {
    switch (kind) {
    case ModeKind::SS:
    case ModeKind::SHEAR_fs: return {0, 1};
    case ModeKind::SHEAR_sf: return {1, 0};
    case ModeKind::SHEAR_fn: return {0, 2};
    case ModeKind::SHEAR_nf: return {2, 0};
    case ModeKind::SHEAR_sn: return {1, 2};
    case ModeKind::SHEAR_ns: return {2, 1};
    default: break;
    }
    throw ContractViolation("mode " + std::string(to_string(kind)) + " is not a shear mode");
}

// Components whose value is determinable for a mode once the pressure has
// been eliminated through the mode's zero-stress condition.
inline std::vector<Component> admissible_components(ModeKind kind) {
    switch (kind) {
    case ModeKind::UT: return {Component::P11};
    case ModeKind::PS: return {Component::P11, Component::P22};
    case ModeKind::BT:
    case ModeKind::EBT: return {Component::P11, Component::P22};
    case ModeKind::SS: return {Component::P12, Component::P11, Component::P22};
    case ModeKind::ANISO_BT: return {Component::Pff, Component::Pnn};
    case ModeKind::SHEAR_fs: return {Component::Pfs};
    case ModeKind::SHEAR_sf: return {Component::Psf};
    case ModeKind::SHEAR_fn: return {Component::Pfn};
    case ModeKind::SHEAR_nf: return {Component::Pnf};
    case ModeKind::SHEAR_sn: return {Component::Psn};
    case ModeKind::SHEAR_ns: return {Component::Pns};
    }
    throw ConfigError("unknown deformation mode");
}

// Diagonal index held traction-free (P_zz = 0) to fix the pressure, if any.
// Anisotropic shear modes only report pressure-free shear components.
inline std::optional<int> traction_free_index(ModeKind kind) {
    if (kind == ModeKind::ANISO_BT) return 1;
    if (is_shear_mode(kind)) return std::nullopt;
    return 2;
}

/// A deformation protocol and the stress components measured under it.
struct LoadingMode {
    ModeKind kind = ModeKind::UT;
    std::vector<Component> measured;

    LoadingMode() = default;
    LoadingMode(ModeKind k, std::vector<Component> components)
        : kind(k), measured(std::move(components)) {
        if (measured.empty())
            throw ContractViolation("loading mode needs at least one measured component");
    }

    // Default measurement set: the first admissible component.
    explicit LoadingMode(ModeKind k) : LoadingMode(k, {admissible_components(k).front()}) {}
};

/// Loading parameters of one sample: a stretch, a shear amount, or the two
/// stretches of a biaxial test.
struct ModeParams {
    double p1 = 1.0;
    double p2 = 1.0;
};

struct StructuralFrame {
    Vec3 f0 = Vec3::UnitX();
    Vec3 s0 = Vec3::UnitY();
    Vec3 n0 = Vec3::UnitZ();

    static StructuralFrame canonical() { return {}; }

    bool is_orthonormal(double tol = 1e-12) const {
        return std::abs(f0.norm() - 1.0) < tol && std::abs(s0.norm() - 1.0) < tol &&
               std::abs(n0.norm() - 1.0) < tol && std::abs(f0.dot(s0)) < tol &&
               std::abs(f0.dot(n0)) < tol && std::abs(s0.dot(n0)) < tol;
    }
};

namespace detail {

inline void require_stretch(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw DomainError("stretch must be positive and finite, got " + std::to_string(lambda));
}

inline void require_finite(double value) {
    if (!std::isfinite(value)) throw DomainError("loading parameter must be finite");
}

} // namespace detail

/// Deformation gradient of an isochoric loading mode (det F = 1).
inline Mat3 deformation_gradient(ModeKind kind, const ModeParams& p) {
    Mat3 F = Mat3::Identity();
    switch (kind) {
    case ModeKind::UT: {
        detail::require_stretch(p.p1);
        const double lateral = 1.0 / std::sqrt(p.p1);
        F.diagonal() << p.p1, lateral, lateral;
        return F;
    }
    case ModeKind::PS:
        detail::require_stretch(p.p1);
        F.diagonal() << p.p1, 1.0, 1.0 / p.p1;
        return F;
    case ModeKind::EBT:
        detail::require_stretch(p.p1);
        F.diagonal() << p.p1, p.p1, 1.0 / (p.p1 * p.p1);
        return F;
    case ModeKind::BT:
        detail::require_stretch(p.p1);
        detail::require_stretch(p.p2);
        F.diagonal() << p.p1, p.p2, 1.0 / (p.p1 * p.p2);
        return F;
    case ModeKind::ANISO_BT:
        // stretches along fibre (p1) and normal (p2); the sheet axis is free
        detail::require_stretch(p.p1);
        detail::require_stretch(p.p2);
        F.diagonal() << p.p1, 1.0 / (p.p1 * p.p2), p.p2;
        return F;
    case ModeKind::SS:
    case ModeKind::SHEAR_fs:
    case ModeKind::SHEAR_sf:
    case ModeKind::SHEAR_fn:
    case ModeKind::SHEAR_nf:
    case ModeKind::SHEAR_sn:
    case ModeKind::SHEAR_ns: {
        detail::require_finite(p.p1);
        const auto [i, j] = shear_slot(kind);
        F(i, j) = p.p1;
        return F;
    }
    }
    throw ConfigError("unknown deformation mode");
}

inline Mat3 deformation_gradient(ModeKind kind, double p1, double p2 = 1.0) {
    return deformation_gradient(kind, ModeParams{p1, p2});
}

/// Isotropic invariants and principal stretches of C = F^T F, plus the
/// orthotropic stretch and coupling invariants when a frame is supplied.
struct InvariantSet {
    double I1 = 3.0;
    double I2 = 3.0;
    std::array<double, 3> stretches = {1.0, 1.0, 1.0};

    struct Anisotropic {
        double I4f = 1.0, I4s = 1.0, I4n = 1.0;
        double I8fs = 0.0, I8fn = 0.0, I8sn = 0.0;
    };
    std::optional<Anisotropic> aniso;
};

inline InvariantSet invariants(const Mat3& F, const std::optional<StructuralFrame>& frame = std::nullopt) {
    if (!F.allFinite()) throw DomainError("deformation gradient has non-finite entries");
    const Mat3 C = F.transpose() * F;
    InvariantSet out;
    const double trC = C.trace();
    out.I1 = trC;
    out.I2 = 0.5 * (trC * trC - (C * C).trace());

    // singular values come back sorted in decreasing order
    Eigen::JacobiSVD<Mat3> svd(F);
    const Vec3 sv = svd.singularValues();
    out.stretches = {sv(0), sv(1), sv(2)};

    if (frame) {
        InvariantSet::Anisotropic a;
        a.I4f = frame->f0.dot(C * frame->f0);
        a.I4s = frame->s0.dot(C * frame->s0);
        a.I4n = frame->n0.dot(C * frame->n0);
        a.I8fs = frame->f0.dot(C * frame->s0);
        a.I8fn = frame->f0.dot(C * frame->n0);
        a.I8sn = frame->s0.dot(C * frame->n0);
        out.aniso = a;
    }
    return out;
}

} // namespace hyperdisc
