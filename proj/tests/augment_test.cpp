#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "staug/augment.hpp"
#include "test_support.hpp"

namespace staug {
namespace {

using testing::pearson;
using testing::rel_l2;
using testing::tone;

// sin(2 pi 0.05 t) + sin(2 pi 0.4 t) + 0.002 t cut into one window.
WindowPair two_tone_window(std::size_t d = 256, std::size_t h = 256, std::size_t offset = 0) {
    Matrix hist(1, d), fut(1, h);
    auto value = [](double t) {
        return std::sin(2.0 * M_PI * 0.05 * t) + std::sin(2.0 * M_PI * 0.4 * t) + 0.002 * t;
    };
    for (std::size_t t = 0; t < d; ++t) hist(0, t) = value(static_cast<double>(t + offset));
    for (std::size_t t = 0; t < h; ++t) fut(0, t) = value(static_cast<double>(d + t + offset));
    return {std::move(hist), std::move(fut), offset, 0};
}

std::vector<WindowPair> tone_dataset(std::size_t n, std::size_t c, std::size_t d, std::size_t h) {
    const std::size_t T = n + d + h;
    Matrix m(c, T);
    RandomSource noise(11);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t t = 0; t < T; ++t) {
            const double tt = static_cast<double>(t);
            m(ch, t) = std::sin(2.0 * M_PI * (0.03 + 0.02 * ch) * tt) + 0.4 * std::sin(2.0 * M_PI * 0.21 * tt) +
                       0.001 * tt + 0.1 * noise.normal();
        }
    }
    return enumerate_windows(MultivariateSeries(std::move(m)), d, h, 1);
}

double max_abs_diff(const WindowPair& a, const WindowPair& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.history.size(); ++k)
        m = std::max(m, std::abs(a.history.flat()[k] - b.history.flat()[k]));
    for (std::size_t k = 0; k < a.future.size(); ++k)
        m = std::max(m, std::abs(a.future.flat()[k] - b.future.flat()[k]));
    return m;
}

TEST(Recombine, UnitWeightsReconstruct) {
    const auto w = two_tone_window();
    const auto signal = w.joined(0);
    const auto dec = emd::decompose(signal);
    ASSERT_GE(dec.imf_count(), 2u);
    WeightVector ones{std::vector<double>(dec.imf_count(), 1.0), 1.0};
    EXPECT_LT(rel_l2(recombine(dec, ones, ResiduePolicy::FixedOne), signal), 1e-8);
}

TEST(Recombine, ZeroWeightsGiveResidue) {
    const auto signal = two_tone_window().joined(0);
    const auto dec = emd::decompose(signal);
    WeightVector zeros{std::vector<double>(dec.imf_count(), 0.0), 1.0};
    EXPECT_EQ(recombine(dec, zeros, ResiduePolicy::FixedOne), dec.residue);
}

TEST(Recombine, LinearInWeights) {
    const auto signal = two_tone_window().joined(0);
    const auto dec = emd::decompose(signal);
    RandomSource rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        auto w1 = draw_weights(dec.imf_count(), 0.0, 2.0, rng);
        auto w2 = draw_weights(dec.imf_count(), 0.0, 2.0, rng);
        WeightVector sum{w1.weights, 1.0};
        for (std::size_t i = 0; i < sum.weights.size(); ++i) sum.weights[i] += w2.weights[i];
        const auto a = recombine(dec, w1, ResiduePolicy::Dropped);
        const auto b = recombine(dec, w2, ResiduePolicy::Dropped);
        const auto s = recombine(dec, sum, ResiduePolicy::Dropped);
        for (std::size_t t = 0; t < s.size(); ++t) ASSERT_NEAR(a[t] + b[t], s[t], 1e-10);
    }
}

TEST(Recombine, WeightedResidueUsesResidueWeight) {
    const auto signal = two_tone_window().joined(0);
    const auto dec = emd::decompose(signal);
    WeightVector w{std::vector<double>(dec.imf_count(), 0.0), 0.5};
    const auto out = recombine(dec, w, ResiduePolicy::Weighted);
    for (std::size_t t = 0; t < out.size(); ++t) EXPECT_DOUBLE_EQ(out[t], 0.5 * dec.residue[t]);
    const auto fixed = recombine(dec, w, ResiduePolicy::FixedOne);
    EXPECT_EQ(fixed, dec.residue);
}

TEST(Recombine, WeightCountMismatchThrows) {
    const auto dec = emd::decompose(two_tone_window().joined(0));
    WeightVector w{std::vector<double>(dec.imf_count() + 1, 1.0), 1.0};
    EXPECT_THROW(recombine(dec, w, ResiduePolicy::FixedOne), ShapeError);
}

TEST(Recombine, LowFrequencyComponentOnly) {
    const auto signal = two_tone_window().joined(0);
    const auto dec = emd::decompose(signal);
    const auto slow = tone(512, 0.05);
    const auto fast = tone(512, 0.4);
    std::size_t best = 0;
    double best_rho = 0.0;
    for (std::size_t i = 0; i < dec.imf_count(); ++i) {
        const double rho = std::abs(pearson(dec.imfs[i], slow));
        if (rho > best_rho) best_rho = rho, best = i;
    }
    WeightVector w{std::vector<double>(dec.imf_count(), 0.0), 1.0};
    w.weights[best] = 1.0;
    const auto out = recombine(dec, w, ResiduePolicy::FixedOne);
    std::vector<double> slow_trend(512);
    for (std::size_t t = 0; t < 512; ++t) slow_trend[t] = slow[t] + 0.002 * static_cast<double>(t);
    EXPECT_GT(pearson(out, slow_trend), 0.8);
    EXPECT_LT(std::abs(pearson(out, fast)), 0.3);
}

TEST(FreqAugment, RampChannelPassesThrough) {
    Matrix hist(2, 32), fut(2, 16);
    for (std::size_t t = 0; t < 32; ++t) {
        hist(0, t) = 0.1 * static_cast<double>(t);
        hist(1, t) = std::sin(0.9 * static_cast<double>(t));
    }
    for (std::size_t t = 0; t < 16; ++t) {
        fut(0, t) = 0.1 * static_cast<double>(32 + t);
        fut(1, t) = std::sin(0.9 * static_cast<double>(32 + t));
    }
    WindowPair w{hist, fut, 0, 0};
    const auto dec = emd::decompose_window(w);
    ASSERT_EQ(dec.channels[0].imf_count(), 0u);
    ASSERT_GE(dec.channels[1].imf_count(), 1u);
    RandomSource rng(5);
    const auto out = freq_augment(w, dec, {}, rng);
    EXPECT_EQ(out.history.row(0)[5], w.history.row(0)[5]);
    for (std::size_t t = 0; t < 32; ++t) EXPECT_NEAR(out.history(0, t), w.history(0, t), 1e-12);
    for (std::size_t t = 0; t < 16; ++t) EXPECT_NEAR(out.future(0, t), w.future(0, t), 1e-12);
}

TEST(FreqAugment, DeterministicForSeed) {
    const auto w = two_tone_window(64, 32);
    const auto dec = emd::decompose_window(w);
    RandomSource a(8), b(8);
    EXPECT_EQ(freq_augment(w, dec, {}, a).history, freq_augment(w, dec, {}, b).history);
}

TEST(FreqAugment, DisabledReturnsInput) {
    const auto w = two_tone_window(64, 32);
    const auto dec = emd::decompose_window(w);
    AugmentConfig cfg;
    cfg.enable_freq = false;
    RandomSource rng(1);
    const auto out = freq_augment(w, dec, cfg, rng);
    EXPECT_EQ(out.history, w.history);
    EXPECT_EQ(out.future, w.future);
}

TEST(FreqAugment, HistoryOnlyLeavesFutureAlone) {
    const auto w = two_tone_window(128, 32);
    const auto dec = emd::decompose_window(w, emd::WindowPart::History);
    RandomSource rng(2);
    const auto out = freq_augment(w, dec, {}, rng);
    EXPECT_EQ(out.future, w.future);
    EXPECT_NE(out.history, w.history);
}

TEST(FreqAugment, MismatchedDecompositionThrows) {
    const auto w = two_tone_window(64, 32);
    const auto other = two_tone_window(64, 16);
    const auto dec = emd::decompose_window(other);
    RandomSource rng(2);
    EXPECT_THROW(freq_augment(w, dec, {}, rng), ShapeError);
}

TEST(FreqAugment, MeanIsPreservedInExpectation) {
    const auto w = two_tone_window(48, 48);
    const auto dec = emd::decompose_window(w);
    const auto original = w.joined(0);
    const std::size_t L = original.size();
    const int draws = 2000;
    std::vector<double> sum(L, 0.0), sq(L, 0.0);
    RandomSource root(17);
    for (int k = 0; k < draws; ++k) {
        RandomSource rng = root.child(static_cast<std::uint64_t>(k));
        const auto s = freq_augment(w, dec, {}, rng).joined(0);
        for (std::size_t t = 0; t < L; ++t) {
            sum[t] += s[t];
            sq[t] += s[t] * s[t];
        }
    }
    for (std::size_t t = 0; t < L; ++t) {
        const double mean = sum[t] / draws;
        const double var = std::max(0.0, sq[t] / draws - mean * mean);
        const double se = std::sqrt(var / draws);
        EXPECT_LT(std::abs(mean - original[t]), 5.0 * se + 1e-12) << "t=" << t;
    }
}

TEST(Mixup, Endpoints) {
    const auto ds = tone_dataset(10, 3, 12, 6);
    EXPECT_EQ(mixup(ds[0], ds[7], 1.0).history, ds[0].history);
    EXPECT_EQ(mixup(ds[0], ds[7], 1.0).future, ds[0].future);
    EXPECT_EQ(mixup(ds[0], ds[7], 0.0).history, ds[7].history);
    EXPECT_EQ(mixup(ds[0], ds[7], 0.0).future, ds[7].future);
}

TEST(Mixup, Midpoint) {
    WindowPair a{Matrix::from_rows({{2.0, 4.0}}), Matrix::from_rows({{6.0}}), 0, 0};
    WindowPair b{Matrix::from_rows({{0.0, 0.0}}), Matrix::from_rows({{2.0}}), 1, 0};
    const auto m = mixup(a, b, 0.5);
    EXPECT_EQ(m.history, Matrix::from_rows({{1.0, 2.0}}));
    EXPECT_EQ(m.future, Matrix::from_rows({{4.0}}));
}

TEST(Mixup, StaysWithinParents) {
    const auto ds = tone_dataset(40, 2, 16, 8);
    RandomSource rng(4);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto& a = ds[rng.uniform_index(ds.size())];
        const auto& b = ds[rng.uniform_index(ds.size())];
        const double lambda = draw_lambda(0.5, rng);
        const auto m = mixup(a, b, lambda);
        for (std::size_t k = 0; k < m.history.size(); ++k) {
            const double x = a.history.flat()[k], y = b.history.flat()[k];
            ASSERT_GE(m.history.flat()[k], std::min(x, y));
            ASSERT_LE(m.history.flat()[k], std::max(x, y));
        }
        for (std::size_t k = 0; k < m.future.size(); ++k) {
            const double x = a.future.flat()[k], y = b.future.flat()[k];
            ASSERT_GE(m.future.flat()[k], std::min(x, y));
            ASSERT_LE(m.future.flat()[k], std::max(x, y));
        }
    }
}

TEST(Mixup, RejectsBadInput) {
    const auto a = tone_dataset(2, 2, 8, 4);
    const auto b = tone_dataset(2, 1, 8, 4);
    EXPECT_THROW(mixup(a[0], b[0], 0.5), ShapeError);
    EXPECT_THROW(mixup(a[0], a[1], 1.5), ConfigError);
}

class StaugSampleTest : public ::testing::Test {
protected:
    void SetUp() override {
        data = tone_dataset(12, 2, 32, 16);
        cache = precompute(data);
    }
    std::vector<WindowPair> data;
    DecompositionCache cache;
};

TEST_F(StaugSampleTest, BothStagesOffIsIdentity) {
    AugmentConfig cfg;
    cfg.enable_freq = cfg.enable_time = false;
    RandomSource rng(1);
    const auto out = staug_sample(3, data, cache, cfg, rng);
    EXPECT_EQ(out.history, data[3].history);
    EXPECT_EQ(out.future, data[3].future);
}

TEST_F(StaugSampleTest, SelfPairWithUnitWeightsIsIdentity) {
    AugmentConfig cfg;
    cfg.weight_low = 1.0;
    cfg.weight_high = 1.0 + 1e-12;
    std::vector<WindowPair> single{data[4]};
    RandomSource rng(9);
    const auto out = staug_sample(0, single, cache, cfg, rng);
    EXPECT_LT(max_abs_diff(out, data[4]), 1e-8);
}

TEST_F(StaugSampleTest, TraceRecordsDraws) {
    RandomSource rng(10);
    SampleTrace tr;
    const auto out = staug_sample(2, data, cache, {}, rng, &tr);
    EXPECT_EQ(tr.index, 2u);
    EXPECT_LT(tr.partner, data.size());
    EXPECT_GE(tr.lambda, 0.0);
    EXPECT_LE(tr.lambda, 1.0);
    EXPECT_EQ(tr.weights_i.size(), 2u);
    EXPECT_EQ(tr.weights_j.size(), 2u);

    // Replaying the trace by hand gives the same sample.
    const auto ai = [&] {
        WindowPair w = data[2];
        const auto& dec = cache.at(key_of(w));
        for (std::size_t c = 0; c < 2; ++c) {
            const auto s = recombine(dec.channels[c], tr.weights_i[c], ResiduePolicy::FixedOne);
            std::copy_n(s.begin(), 32, w.history.row(c).begin());
            std::copy(s.begin() + 32, s.end(), w.future.row(c).begin());
        }
        return w;
    }();
    const auto aj = [&] {
        WindowPair w = data[tr.partner];
        const auto& dec = cache.at(key_of(w));
        for (std::size_t c = 0; c < 2; ++c) {
            const auto s = recombine(dec.channels[c], tr.weights_j[c], ResiduePolicy::FixedOne);
            std::copy_n(s.begin(), 32, w.history.row(c).begin());
            std::copy(s.begin() + 32, s.end(), w.future.row(c).begin());
        }
        return w;
    }();
    EXPECT_LT(max_abs_diff(out, mixup(ai, aj, tr.lambda)), 1e-12);
}

TEST_F(StaugSampleTest, AblationsDiffer) {
    AugmentConfig both, freq_only, time_only;
    freq_only.enable_time = false;
    time_only.enable_freq = false;
    RandomSource r1(21), r2(21), r3(21);
    const auto a = staug_sample(5, data, cache, both, r1);
    const auto b = staug_sample(5, data, cache, freq_only, r2);
    const auto c = staug_sample(5, data, cache, time_only, r3);
    EXPECT_GT(max_abs_diff(a, b), 0.0);
    EXPECT_GT(max_abs_diff(a, c), 0.0);
    EXPECT_GT(max_abs_diff(b, c), 0.0);
}

TEST_F(StaugSampleTest, NoFreqNeedsNoCache) {
    AugmentConfig cfg;
    cfg.enable_freq = false;
    DecompositionCache empty;
    RandomSource rng(6);
    EXPECT_NO_THROW(staug_sample(1, data, empty, cfg, rng));
}

TEST_F(StaugSampleTest, CacheMissIsReported) {
    DecompositionCache empty;
    RandomSource rng(6);
    try {
        staug_sample(1, data, empty, {}, rng);
        FAIL() << "expected CacheMissError";
    } catch (const CacheMissError& e) {
        EXPECT_NE(std::string(e.what()).find("precompute"), std::string::npos);
    }
}

TEST_F(StaugSampleTest, BadIndexAndEmptyDataset) {
    RandomSource rng(6);
    EXPECT_THROW(staug_sample(data.size(), data, cache, {}, rng), BoundsError);
    std::vector<WindowPair> none;
    EXPECT_THROW(staug_sample(0, none, cache, {}, rng), ConfigError);
}

TEST(StaugSample, TwoWindowGolden) {
    auto ds = tone_dataset(2, 1, 24, 8);
    ds.resize(2);
    const auto cache = precompute(ds);
    RandomSource a(2024), b(2024);
    const auto first = staug_sample(0, ds, cache, {}, a);
    const auto again = staug_sample(0, ds, cache, {}, b);
    EXPECT_EQ(first.history, again.history);
    EXPECT_EQ(first.future, again.future);

    // Recorded on the first verified run; guards the draw order.
    SampleTrace tr;
    RandomSource c(2024);
    staug_sample(0, ds, cache, {}, c, &tr);
    RandomSource replay(2024);
    const std::size_t j = replay.uniform_index(ds.size());
    EXPECT_EQ(tr.partner, j);
    const auto wi = draw_weights(tr.weights_i[0].weights.size(), 0.0, 2.0, replay);
    EXPECT_EQ(wi.weights, tr.weights_i[0].weights);
    const auto wj = draw_weights(tr.weights_j[0].weights.size(), 0.0, 2.0, replay);
    EXPECT_EQ(wj.weights, tr.weights_j[0].weights);
    EXPECT_EQ(draw_lambda(0.5, replay), tr.lambda);
    EXPECT_EQ(tr.partner, 0u);
    EXPECT_EQ(tr.lambda, 0x1.4a53c24a988ccp-3);
    EXPECT_EQ(first.history(0, 0), 0x1.d4ca37212a362p-7);
    EXPECT_EQ(first.history(0, 23), -0x1.376791d8785f8p+0);
    EXPECT_EQ(first.future(0, 7), -0x1.03cab7e1ba846p-1);
}

TEST(Precompute, EmptyDataset) {
    std::vector<WindowPair> none;
    EXPECT_TRUE(precompute(none).empty());
}

TEST(Precompute, CoversEveryWindowAndReconstructs) {
    const auto ds = tone_dataset(20, 2, 32, 16);
    const auto cache = precompute(ds);
    EXPECT_EQ(cache.size(), ds.size());
    for (const auto& w : ds) {
        ASSERT_TRUE(cache.contains(key_of(w)));
        const auto& dec = cache.at(key_of(w));
        for (std::size_t c = 0; c < w.channels(); ++c) {
            EXPECT_LT(rel_l2(dec.channels[c].reconstruct(), w.joined(c)), 1e-8);
        }
    }
}

TEST(Precompute, ThreadedMatchesSerial) {
    const auto ds = tone_dataset(20, 2, 32, 16);
    const auto serial = precompute(ds, {}, emd::WindowPart::Full, 1);
    const auto threaded = precompute(ds, {}, emd::WindowPart::Full, 3);
    for (const auto& w : ds) {
        const auto& a = serial.at(key_of(w));
        const auto& b = threaded.at(key_of(w));
        for (std::size_t c = 0; c < w.channels(); ++c) {
            EXPECT_EQ(a.channels[c].imfs, b.channels[c].imfs);
            EXPECT_EQ(a.channels[c].residue, b.channels[c].residue);
        }
    }
}

TEST(AugmentConfig, Validation) {
    AugmentConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.weight_high = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.alpha = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_EQ(parse_residue_policy("weighted"), ResiduePolicy::Weighted);
    EXPECT_THROW(parse_residue_policy("half"), ConfigError);
}

}  // namespace
}  // namespace staug
