#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "kinematics.hpp"

namespace hyperdisc {

enum class Units { Pa, kPa, MPa };

inline std::string_view to_string(Units u) {
    switch (u) {
    case Units::Pa: return "Pa";
    case Units::kPa: return "kPa";
    case Units::MPa: return "MPa";
    }
    return "?";
}

inline Units units_from_string(std::string_view s) {
    if (s == "Pa") return Units::Pa;
    if (s == "kPa") return Units::kPa;
    if (s == "MPa") return Units::MPa;
    throw ConfigError("unknown stress unit '" + std::string(s) + "'");
}

/// One loading state and the measured stresses, ordered like mode.measured.
struct Sample {
    ModeParams params;
    std::vector<double> values;
};

/// All samples recorded under one deformation protocol.
struct ModeBlock {
    std::string id;
    LoadingMode mode;
    std::vector<Sample> samples;

    std::size_t n_obs() const { return samples.size() * mode.measured.size(); }

    // Observations in stacking order: sample-major, component-minor.
    std::vector<double> observations() const {
        std::vector<double> out;
        out.reserve(n_obs());
        for (const auto& s : samples) out.insert(out.end(), s.values.begin(), s.values.end());
        return out;
    }
};

struct Dataset {
    std::vector<ModeBlock> blocks;
    Units units = Units::Pa;

    std::size_t n_obs() const {
        std::size_t n = 0;
        for (const auto& b : blocks) n += b.n_obs();
        return n;
    }

    void validate() const {
        if (blocks.empty()) throw ContractViolation("dataset has no blocks");
        for (const auto& b : blocks) {
            if (b.samples.empty()) throw ContractViolation("block '" + b.id + "' has no samples");
            if (b.mode.measured.empty()) throw ContractViolation("block '" + b.id + "' measures nothing");
            for (const auto& s : b.samples) {
                if (s.values.size() != b.mode.measured.size())
                    throw ContractViolation("block '" + b.id + "': sample value count differs from component count");
                for (double v : s.values)
                    if (!std::isfinite(v)) throw ContractViolation("block '" + b.id + "' has a non-finite stress");
                if (!std::isfinite(s.params.p1) || !std::isfinite(s.params.p2))
                    throw ContractViolation("block '" + b.id + "' has a non-finite loading parameter");
            }
        }
    }
};

} // namespace hyperdisc
