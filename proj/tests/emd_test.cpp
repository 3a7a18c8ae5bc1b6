#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "staug/emd.hpp"
#include "staug/random.hpp"
#include "test_support.hpp"

namespace staug::emd {
namespace {

using staug::testing::pearson;
using staug::testing::rel_l2;
using staug::testing::tone;

TEST(FindExtrema, SingleOscillation) {
    const std::vector<double> s = {0, 1, 0, -1, 0};
    auto ex = find_extrema(s);
    EXPECT_EQ(ex.maxima, std::vector<std::size_t>({1}));
    EXPECT_EQ(ex.minima, std::vector<std::size_t>({3}));
}

TEST(FindExtrema, PlateauTakesLowerMidpoint) {
    EXPECT_EQ(find_extrema(std::vector<double>{0, 1, 1, 0}).maxima, std::vector<std::size_t>({1}));
    EXPECT_EQ(find_extrema(std::vector<double>{0, 1, 1, 1, 0}).maxima, std::vector<std::size_t>({2}));
    EXPECT_EQ(find_extrema(std::vector<double>{3, 1, 1, 1, 1, 3}).minima, std::vector<std::size_t>({2}));
    // A plateau on a monotone stretch is not an extremum.
    EXPECT_EQ(find_extrema(std::vector<double>{0, 1, 1, 2}).total(), 0u);
}

TEST(FindExtrema, ShortSignalsHaveNone) {
    EXPECT_EQ(find_extrema(std::vector<double>{1, 2}).total(), 0u);
    EXPECT_EQ(find_extrema(std::vector<double>{}).total(), 0u);
}

TEST(FindExtrema, SampledSinusoidMatchesBruteForceScan) {
    const auto s = tone(64, 1.0 / 16.0);
    std::vector<std::size_t> maxima, minima;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        if (s[k] > s[k - 1] && s[k] > s[k + 1]) maxima.push_back(k);
        if (s[k] < s[k - 1] && s[k] < s[k + 1]) minima.push_back(k);
    }
    ASSERT_EQ(maxima, std::vector<std::size_t>({4, 20, 36, 52}));
    ASSERT_EQ(minima, std::vector<std::size_t>({12, 28, 44, 60}));
    auto ex = find_extrema(s);
    EXPECT_EQ(ex.maxima, maxima);
    EXPECT_EQ(ex.minima, minima);
}

TEST(Envelope, EqualEndKnotsGiveConstant) {
    const std::size_t L = 20;
    std::vector<double> s(L, 0.0);
    s[0] = 5.0;
    s[L - 1] = 5.0;
    const std::vector<std::size_t> idx = {0, L - 1};
    const auto env = envelope(s, idx, EmdConfig{});
    for (double v : env) EXPECT_NEAR(v, 5.0, 1e-12);
}

TEST(Envelope, PassesThroughKnots) {
    std::vector<double> s(11, 0.0);
    s[5] = 10.0;
    const std::vector<std::size_t> idx = {0, 5, 10};
    const auto env = envelope(s, idx, EmdConfig{});
    EXPECT_EQ(env[5], 10.0);
    EXPECT_EQ(env[0], 0.0);
    EXPECT_EQ(env[10], 0.0);
}

TEST(Envelope, SinusoidUpperEnvelopeIsFlat) {
    const auto s = tone(64, 1.0 / 16.0);
    const auto ex = find_extrema(s);
    for (auto mode : {BoundaryMode::ExtremumAxis, BoundaryMode::EndpointAxis}) {
        EmdConfig cfg;
        cfg.boundary = mode;
        const auto env = envelope(s, ex.maxima, cfg);
        for (std::size_t k : ex.maxima) EXPECT_DOUBLE_EQ(env[k], 1.0);
        for (std::size_t t = ex.maxima.front(); t <= ex.maxima.back(); ++t) {
            EXPECT_GE(env[t], 0.95);
            EXPECT_LE(env[t], 1.05);
        }
    }
}

TEST(Envelope, ExtremumAxisExtendsSinusoidExactly) {
    // Mirroring about the outermost extremum continues a sinusoid, so the
    // envelope stays flat right up to the ends.
    const auto s = tone(64, 1.0 / 16.0);
    const auto ex = find_extrema(s);
    const auto env = envelope(s, ex.maxima, EmdConfig{});
    for (double v : env) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Envelope, DegenerateBelowTwoExtrema) {
    const std::vector<double> s = {0, 1, 0};
    const std::vector<std::size_t> one = {1};
    EXPECT_THROW(envelope(s, one, EmdConfig{}), DegenerateEnvelopeError);
}

TEST(Sift, WellResolvedToneIsAlreadyAnImf) {
    for (double f : {0.05, 0.1}) {
        const auto s = tone(256, f);
        const auto r = sift(s, EmdConfig{});
        EXPECT_LT(rel_l2(r.imf, s), 0.05) << "f=" << f;
        EXPECT_FALSE(r.terminated);
    }
}

TEST(Sift, NearNyquistToneStopsAfterOneIteration) {
    // At 2.5 samples per period the sampled peaks alternate between
    // sin(0.8 pi) and sin(0.4 pi), so the envelope mean is not zero; the
    // candidate still tracks the tone closely.
    const auto s = tone(256, 0.4);
    const auto r = sift(s, EmdConfig{});
    EXPECT_EQ(r.iterations, 1u);
    EXPECT_GT(pearson(r.imf, s), 0.98);
}

TEST(Sift, FirstPassIsolatesHighTone) {
    const auto hi = tone(512, 0.4);
    const auto s = staug::testing::add(tone(512, 0.05), hi);
    const auto r = sift(s, EmdConfig{});
    EXPECT_GT(std::abs(pearson(r.imf, hi)), 0.9);
}

TEST(Sift, OscillationCheckOnlyExtendsSifting) {
    // Sum of the two-tone signal and a ramp: the low-frequency IMFs are
    // where the SD threshold alone stops too early.
    std::vector<double> s(512);
    for (std::size_t t = 0; t < s.size(); ++t) s[t] = 0.002 * static_cast<double>(t);
    s = staug::testing::add(staug::testing::add(tone(512, 0.05), tone(512, 0.4)), s);
    EmdConfig sd_only;
    sd_only.require_oscillation = false;
    std::vector<double> residue = s;
    for (int k = 0; k < 4; ++k) {
        const auto with = sift(residue, EmdConfig{});
        const auto without = sift(residue, sd_only);
        EXPECT_GE(with.iterations, without.iterations);
        if (with.iterations < EmdConfig{}.max_sift_iters && !with.terminated) {
            EXPECT_TRUE(oscillates(with.imf)) << "IMF " << k + 1;
        }
        for (std::size_t t = 0; t < residue.size(); ++t) residue[t] -= with.imf[t];
    }
}

TEST(Sift, Oscillates) {
    EXPECT_TRUE(oscillates(tone(64, 0.1)));
    std::vector<double> shifted = tone(64, 0.1);
    for (double& v : shifted) v += 2.0;
    EXPECT_FALSE(oscillates(shifted));
}

TEST(Sift, ConstantSignalIsNotSiftable) {
    const std::vector<double> s(64, 3.0);
    EXPECT_FALSE(siftable(find_extrema(s)));
    const auto r = sift(s, EmdConfig{});
    EXPECT_TRUE(r.terminated);
    EXPECT_EQ(r.imf, s);
}

TEST(Decompose, RampHasNoImfs) {
    std::vector<double> s(100);
    for (std::size_t t = 0; t < s.size(); ++t) s[t] = static_cast<double>(t) / 100.0;
    const auto dec = decompose(s);
    EXPECT_TRUE(dec.imfs.empty());
    EXPECT_EQ(dec.residue, s);
    EXPECT_EQ(dec.stop_reason, StopReason::FewExtrema);
}

TEST(Decompose, RecoversTwoToneComponents) {
    const std::size_t L = 512;
    const auto lo = tone(L, 0.05);
    const auto hi = tone(L, 0.4);
    std::vector<double> ramp(L);
    for (std::size_t t = 0; t < L; ++t) ramp[t] = 0.002 * static_cast<double>(t);
    const auto s = staug::testing::add(staug::testing::add(lo, hi), ramp);
    const auto dec = decompose(s);

    ASSERT_GE(dec.imfs.size(), 2u);
    ASSERT_LE(dec.imfs.size(), 6u);
    EXPECT_GT(std::abs(pearson(dec.imfs[0], hi)), 0.9);
    double best_lo = 0.0;
    for (const auto& imf : dec.imfs) best_lo = std::max(best_lo, std::abs(pearson(imf, lo)));
    EXPECT_GT(best_lo, 0.8);
    EXPECT_GT(pearson(dec.residue, ramp), 0.9);
}

TEST(Decompose, CompletenessOnRandomSignals) {
    RandomSource rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t L = 3 + rng.uniform_index(300);
        std::vector<double> s(L);
        for (double& v : s) v = rng.normal() * (1.0 + 10.0 * rng.uniform01());
        const auto dec = decompose(s);
        EXPECT_LT(rel_l2(dec.reconstruct(), s), 1e-8);
        for (const auto& imf : dec.imfs) ASSERT_EQ(imf.size(), L);
    }
}

TEST(Decompose, DegenerateInputs) {
    EXPECT_TRUE(decompose(std::vector<double>{1.0}).imfs.empty());
    EXPECT_TRUE(decompose(std::vector<double>(10, 0.0)).imfs.empty());
}

TEST(Decompose, ReportsExactlyOneStopReason) {
    EmdConfig cfg;
    cfg.max_imfs = 1;
    const auto s = staug::testing::add(tone(256, 0.05), tone(256, 0.3));
    EXPECT_EQ(decompose(s, cfg).stop_reason, StopReason::MaxImfs);
    EXPECT_EQ(decompose(tone(256, 0.05)).stop_reason, StopReason::FewExtrema);

    // Once the strong fast tone is removed, the weak slow one holds
    // well under half of the input energy.
    EmdConfig loose;
    loose.residue_energy_ratio = 0.5;
    const auto weak_slow = staug::testing::add(tone(256, 0.3), tone(256, 0.03, 0.3));
    EXPECT_EQ(decompose(weak_slow, loose).stop_reason, StopReason::NegligibleEnergy);
}

TEST(Decompose, IsDeterministic) {
    RandomSource rng(5);
    std::vector<double> s(300);
    for (double& v : s) v = rng.normal();
    const auto a = decompose(s);
    const auto b = decompose(s);
    EXPECT_EQ(a.imfs, b.imfs);
    EXPECT_EQ(a.residue, b.residue);
}

TEST(Decompose, RejectsInvalidConfig) {
    EmdConfig cfg;
    cfg.sd_threshold = 0.0;
    EXPECT_THROW(decompose(tone(64, 0.1), cfg), ConfigError);
    cfg = {};
    cfg.residue_energy_ratio = 1.0;
    EXPECT_THROW(decompose(tone(64, 0.1), cfg), ConfigError);
}

TEST(DecomposeWindow, ChannelsDecomposeIndependently) {
    const std::size_t d = 96, h = 96;
    std::vector<double> ramp(d + h);
    for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = 0.01 * static_cast<double>(t);
    const auto osc = tone(d + h, 0.1);
    Matrix hist(2, d), fut(2, h);
    for (std::size_t t = 0; t < d + h; ++t) {
        (t < d ? hist(0, t) : fut(0, t - d)) = ramp[t];
        (t < d ? hist(1, t) : fut(1, t - d)) = osc[t];
    }
    const WindowPair w{hist, fut, 0, 0};
    const auto dec = decompose_window(w);
    ASSERT_EQ(dec.channels.size(), 2u);
    EXPECT_EQ(dec.channels[0].imf_count(), 0u);
    EXPECT_GE(dec.channels[1].imf_count(), 1u);
    EXPECT_EQ(dec.channels[0].source_length, d + h);

    const auto hist_only = decompose_window(w, WindowPart::History);
    EXPECT_EQ(hist_only.channels[1].source_length, d);

    const WindowPair single{Matrix::from_rows({std::vector<double>(osc.begin(), osc.begin() + d)}),
                            Matrix::from_rows({std::vector<double>(osc.begin() + d, osc.end())}), 0, 0};
    const auto one = decompose_window(single);
    const auto direct = decompose(osc);
    EXPECT_EQ(one.channels[0].imfs, direct.imfs);
}

}  // namespace
}  // namespace staug::emd
