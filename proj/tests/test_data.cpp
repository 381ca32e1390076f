#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hyperdisc/data.hpp"

using namespace hyperdisc;

namespace {

const LoadingMode kUT(ModeKind::UT, {Component::P11});

double ut_stress(const GroundTruth& g, double l) {
    return predict_stress(g.lib, g.coeffs, kUT, deformation_gradient(ModeKind::UT, {l, 1.0}))[0];
}

Dataset parse(const std::string& text) {
    std::istringstream is(text);
    return read_csv(is);
}

std::size_t parse_error_row(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.row();
    }
    return 0;
}

} // namespace

TEST(Generation, OgdenUniaxialClosedForm) {
    // c alpha (l^(alpha-1) - l^(-alpha/2-1)) summed over both terms
    const double l = 2.0;
    const double expected = 16.0 * -3.0 * (std::pow(l, -4.0) - std::pow(l, 0.5)) +
                            8.0 * 3.0 * (std::pow(l, 2.0) - std::pow(l, -2.5));
    EXPECT_NEAR(ut_stress(ground_truth("O2"), l), expected, 1e-10);
    EXPECT_NEAR(expected, 156.64, 0.01);
}

TEST(Generation, NeoHookeanUniaxial) {
    const auto g = make_ground_truth("nh", {BasisTerm::mooney_rivlin(1, 0)}, {3.0});
    for (double l : {0.6, 0.9, 1.3, 2.5, 5.0}) EXPECT_NEAR(ut_stress(g, l), 2.0 * 3.0 * (l - 1.0 / (l * l)), 1e-10);
}

TEST(Generation, BenchmarkLayout) {
    const auto d = isotropic_benchmark(ground_truth("MR2"));
    ASSERT_EQ(d.blocks.size(), 3u);
    for (const auto& b : d.blocks) {
        ASSERT_EQ(b.samples.size(), 60u);
        EXPECT_DOUBLE_EQ(b.samples.front().params.p1, 0.6);
        EXPECT_DOUBLE_EQ(b.samples.back().params.p1, 5.0);
        for (const auto& s : b.samples) EXPECT_NE(s.params.p1, 1.0);
    }
}

TEST(Generation, ReferenceStateMovedOffGrid) {
    const auto g = loading_grid(ModeKind::UT, 0.5, 1.5, 11);
    EXPECT_NEAR(g[5], 1.05, 1e-12);
    const auto s = loading_grid(ModeKind::SHEAR_fs, -0.5, 0.5, 11);
    EXPECT_NEAR(s[5], 0.05, 1e-12);
    EXPECT_NEAR(loading_grid(ModeKind::SS, -0.5, 0.5, 11)[5], 0.05, 1e-12);
}

TEST(Generation, RejectsBadRanges) {
    EXPECT_THROW(loading_grid(ModeKind::UT, 0.0, 2.0, 10), DomainError);
    EXPECT_THROW(loading_grid(ModeKind::UT, -1.0, 2.0, 10), DomainError);
    EXPECT_THROW(loading_grid(ModeKind::UT, 2.0, 1.0, 10), ConfigError);
    EXPECT_THROW(loading_grid(ModeKind::UT, 0.5, 2.0, 1), ConfigError);
    EXPECT_THROW(ground_truth("nope"), ConfigError);
}

TEST(Noise, ZeroLevelLeavesDataUntouched) {
    const auto clean = isotropic_benchmark(ground_truth("MR1O1"));
    const auto same = isotropic_benchmark(ground_truth("MR1O1"), {0.0, 99});
    for (std::size_t b = 0; b < clean.blocks.size(); ++b)
        EXPECT_EQ(clean.blocks[b].observations(), same.blocks[b].observations());
    EXPECT_THROW(isotropic_benchmark(ground_truth("O2"), {-0.1, 1}), ConfigError);
}

TEST(Noise, RelativeStatistics) {
    const auto truth = ground_truth("MR2O2");
    const auto clean = isotropic_benchmark(truth, {}, 500);
    const auto noisy = isotropic_benchmark(truth, {0.1, 2024}, 500);
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < clean.blocks.size(); ++b) {
        const auto c = clean.blocks[b].observations();
        const auto y = noisy.blocks[b].observations();
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double z = (y[i] - c[i]) / std::abs(c[i]);
            sum += z;
            sum2 += z * z;
            ++n;
        }
    }
    ASSERT_GE(n, 1000u);
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(sum2 / static_cast<double>(n) - mean * mean);
    EXPECT_GE(sd, 0.09);
    EXPECT_LE(sd, 0.11);
    EXPECT_LT(std::abs(mean), 0.01);
}

TEST(Noise, SeedReproducibility) {
    const auto truth = ground_truth("O2");
    const auto a = isotropic_benchmark(truth, {0.05, 11});
    const auto b = isotropic_benchmark(truth, {0.05, 11});
    const auto c = isotropic_benchmark(truth, {0.05, 12});
    EXPECT_EQ(a.blocks[1].observations(), b.blocks[1].observations());
    EXPECT_NE(a.blocks[1].observations(), c.blocks[1].observations());
}

TEST(Csv, RoundTripIsExact) {
    const auto d = cardiac_surrogate();
    std::ostringstream os;
    write_csv(d, os);
    const auto back = parse(os.str());
    EXPECT_EQ(back.units, Units::kPa);
    ASSERT_EQ(back.blocks.size(), d.blocks.size());
    for (std::size_t b = 0; b < d.blocks.size(); ++b) {
        EXPECT_EQ(back.blocks[b].id, d.blocks[b].id);
        EXPECT_EQ(back.blocks[b].mode.kind, d.blocks[b].mode.kind);
        EXPECT_EQ(back.blocks[b].mode.measured, d.blocks[b].mode.measured);
        EXPECT_EQ(back.blocks[b].observations(), d.blocks[b].observations());
        for (std::size_t s = 0; s < d.blocks[b].samples.size(); ++s) {
            EXPECT_EQ(back.blocks[b].samples[s].params.p1, d.blocks[b].samples[s].params.p1);
            EXPECT_EQ(back.blocks[b].samples[s].params.p2, d.blocks[b].samples[s].params.p2);
        }
    }
    std::ostringstream again;
    write_csv(back, again);
    EXPECT_EQ(again.str(), os.str());
}

TEST(Csv, ErrorsCarryRowNumbers) {
    const std::string header = "mode_kind,block_id,p1,p2,component,value\n";
    EXPECT_THROW(parse(""), ParseError);
    EXPECT_THROW(parse(header), ParseError);
    EXPECT_EQ(parse_error_row(header + "UT,a,1.5,,P11,3\nXX,a,1.5,,P11,3\n"), 3u);
    EXPECT_EQ(parse_error_row(header + "UT,a,1.5,,P11,3\nUT,a,1.6,,P11,abc\n"), 3u);
    EXPECT_EQ(parse_error_row("# units: Pa\n" + header + "UT,a,1.5,,P11\n"), 3u);
    EXPECT_EQ(parse_error_row("mode,block\n"), 1u);
    EXPECT_EQ(parse_error_row(header + "BT,b,1.2,,P11,1\n"), 2u);
}

TEST(Csv, ShippedDatasets) {
    const auto treloar = load_csv("data/treloar.csv");
    EXPECT_EQ(treloar.blocks.size(), 3u);
    EXPECT_EQ(treloar.units, Units::MPa);
    const auto cardiac = load_csv("data/cardiac_surrogate.csv");
    EXPECT_EQ(cardiac.blocks.size(), 11u);
    EXPECT_EQ(cardiac.n_obs(), 160u);
    EXPECT_THROW(load_csv("data/missing.csv"), ConfigError);
}

TEST(Cardiac, SurrogateMatchesShippedFile) {
    const auto shipped = load_csv("data/cardiac_surrogate.csv");
    const auto fresh = cardiac_surrogate();
    ASSERT_EQ(shipped.blocks.size(), fresh.blocks.size());
    for (std::size_t b = 0; b < fresh.blocks.size(); ++b)
        EXPECT_EQ(shipped.blocks[b].observations(), fresh.blocks[b].observations());
}
