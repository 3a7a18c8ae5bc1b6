#pragma once

// End-to-end train/evaluate protocol: split, normalize, window, optionally
// subsample, precompute decompositions, train with an augmenter, evaluate.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "staug/augment.hpp"
#include "staug/baseline.hpp"
#include "staug/data_io.hpp"
#include "staug/emd.hpp"
#include "staug/forecaster.hpp"
#include "staug/series.hpp"

namespace staug {

enum class AugKind { None, Staug, StaugNoFreq, StaugNoTime, Filter, Permute };

inline const char* to_string(AugKind k) {
    switch (k) {
        case AugKind::None: return "none";
        case AugKind::Staug: return "staug";
        case AugKind::StaugNoFreq: return "staug-nofreq";
        case AugKind::StaugNoTime: return "staug-notime";
        case AugKind::Filter: return "filter";
        case AugKind::Permute: return "permute";
    }
    return "unknown";
}

inline AugKind parse_aug_kind(const std::string& s) {
    for (AugKind k : {AugKind::None, AugKind::Staug, AugKind::StaugNoFreq, AugKind::StaugNoTime, AugKind::Filter,
                      AugKind::Permute}) {
        if (s == to_string(k)) return k;
    }
    throw ConfigError("unknown augmentation '" + s + "'");
}

inline const char* to_string(emd::WindowPart p) {
    switch (p) {
        case emd::WindowPart::History: return "history";
        case emd::WindowPart::Future: return "future";
        case emd::WindowPart::Full: return "full";
    }
    return "unknown";
}

inline emd::WindowPart parse_window_part(const std::string& s) {
    if (s == "full") return emd::WindowPart::Full;
    if (s == "history") return emd::WindowPart::History;
    if (s == "future") return emd::WindowPart::Future;
    throw ConfigError("unknown window part '" + s + "'");
}

/// Stage toggles implied by an augmentation kind.
inline AugmentConfig stages_for(AugKind kind, AugmentConfig cfg) {
    cfg.enable_freq = kind == AugKind::Staug || kind == AugKind::StaugNoTime;
    cfg.enable_time = kind == AugKind::Staug || kind == AugKind::StaugNoFreq;
    return cfg;
}

struct ExperimentConfig {
    std::size_t context = 96;
    std::size_t horizon = 96;
    std::size_t stride = 1;
    AugKind aug = AugKind::None;
    AugmentConfig augment;
    emd::EmdConfig emd;
    TrainConfig train;
    io::SplitSpec split;
    double train_fraction = 1.0;
    std::size_t filter_kernel = 5;
    std::size_t permute_segments = 4;
    std::size_t jobs = 1;
};

struct RunResult {
    Metrics test;
    LinearForecastModel model;
    std::vector<double> loss_trace;
    std::size_t train_windows = 0;
    std::size_t test_windows = 0;
    std::uint64_t seed = 0;
};

/// Runs the whole protocol for `cfg.train.seed`.
inline RunResult run_experiment(const MultivariateSeries& series, const ExperimentConfig& cfg) {
    if (cfg.context == 0 || cfg.horizon == 0) throw ConfigError("context and horizon must be >= 1");
    cfg.augment.validate();
    cfg.emd.validate();
    cfg.train.validate();
    io::subsample_size(1, cfg.train_fraction);

    const auto parts = io::split(series, cfg.split, cfg.context, cfg.horizon);
    const auto norm = io::fit_normalizer(parts.train);
    const auto train_series = norm.apply(parts.train);
    const auto test_series = norm.apply(parts.test);

    const auto all_train = enumerate_windows(train_series, cfg.context, cfg.horizon, cfg.stride);
    const auto test = enumerate_windows(test_series, cfg.context, cfg.horizon, 1);

    const RandomSource root(cfg.train.seed);
    RandomSource sub_rng = root.child(1);
    const std::vector<WindowPair> train_windows = io::subsample_train(all_train, cfg.train_fraction, sub_rng);

    const AugmentConfig aug_cfg = stages_for(cfg.aug, cfg.augment);
    DecompositionCache cache;
    if (aug_cfg.enable_freq) cache = precompute(train_windows, cfg.emd, aug_cfg.part, cfg.jobs);

    Augmenter augmenter;
    switch (cfg.aug) {
        case AugKind::None: break;
        case AugKind::Staug:
        case AugKind::StaugNoFreq:
        case AugKind::StaugNoTime:
            augmenter = [&](std::size_t i, RandomSource& rng) {
                return staug_sample(i, train_windows, cache, aug_cfg, rng);
            };
            break;
        case AugKind::Filter: {
            const std::size_t k = cfg.filter_kernel;
            augmenter = [&, k](std::size_t i, RandomSource&) { return moving_average_filter(train_windows[i], k); };
            break;
        }
        case AugKind::Permute: {
            const std::size_t n = cfg.permute_segments;
            augmenter = [&, n](std::size_t i, RandomSource& rng) {
                return segment_permutation(train_windows[i], n, rng);
            };
            break;
        }
    }

    LinearForecastModel model(series.channels(), cfg.context, cfg.horizon);
    TrainResult trained = train(std::move(model), train_windows, augmenter, cfg.train);

    RunResult r;
    r.test = evaluate(trained.model, test);
    r.model = std::move(trained.model);
    r.loss_trace = std::move(trained.loss_trace);
    r.train_windows = train_windows.size();
    r.test_windows = test.size();
    r.seed = cfg.train.seed;
    return r;
}

// ---------------------------------------------------------------------------
// JSON snapshots
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ExperimentConfig& c) {
    return {
        {"context", c.context},
        {"horizon", c.horizon},
        {"stride", c.stride},
        {"aug", to_string(c.aug)},
        {"augment",
         {{"weight_low", c.augment.weight_low},
          {"weight_high", c.augment.weight_high},
          {"alpha", c.augment.alpha},
          {"residue", to_string(c.augment.residue)},
          {"emd_part", to_string(c.augment.part)}}},
        {"emd",
         {{"sd_threshold", c.emd.sd_threshold},
          {"max_sift_iters", c.emd.max_sift_iters},
          {"max_imfs", c.emd.max_imfs},
          {"residue_energy_ratio", c.emd.residue_energy_ratio},
          {"boundary_extrema", c.emd.boundary_extrema},
          {"boundary", emd::to_string(c.emd.boundary)},
          {"require_oscillation", c.emd.require_oscillation}}},
        {"train",
         {{"learning_rate", c.train.learning_rate},
          {"decay", c.train.decay},
          {"epochs", c.train.epochs},
          {"batch_size", c.train.batch_size}}},
        {"split", {c.split.train, c.split.val, c.split.test}},
        {"filter_kernel", c.filter_kernel},
        {"permute_segments", c.permute_segments},
    };
}

inline nlohmann::json to_json(const io::SynthSpec& s) {
    nlohmann::json tones = nlohmann::json::array();
    for (const auto& list : s.tones) {
        nlohmann::json l = nlohmann::json::array();
        for (const auto& t : list) l.push_back({{"frequency", t.frequency}, {"amplitude", t.amplitude}});
        tones.push_back(l);
    }
    return {{"length", s.length},     {"channels", s.channels}, {"tones", tones},
            {"slope", s.slope},       {"noise_std", s.noise_std}, {"seed", s.seed},
            {"random_phase", s.random_phase}};
}

inline io::SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    io::SynthSpec s;
    s.length = j.value("length", s.length);
    s.channels = j.value("channels", s.channels);
    s.slope = j.value("slope", s.slope);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.seed = j.value("seed", s.seed);
    s.random_phase = j.value("random_phase", s.random_phase);
    if (j.contains("tones")) {
        for (const auto& list : j.at("tones")) {
            std::vector<io::Tone> l;
            for (const auto& t : list) l.push_back({t.at("frequency").get<double>(), t.at("amplitude").get<double>()});
            s.tones.push_back(std::move(l));
        }
    }
    return s;
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(to_json(c).dump()); }

// ---------------------------------------------------------------------------
// Built-in synthetic tasks
// ---------------------------------------------------------------------------

/// Seven channels, each with its own tones, a mild trend and unit noise.
inline io::SynthSpec scarcity_task(std::uint64_t seed = 7, std::size_t length = 2000) {
    io::SynthSpec s;
    s.length = length;
    s.channels = 7;
    s.tones = {
        {{1.0 / 23.0, 1.0}, {1.0 / 97.0, 0.6}},
        {{1.0 / 29.0, 0.8}, {1.0 / 11.0, 0.4}},
        {{1.0 / 37.0, 1.0}, {1.0 / 7.0, 0.3}},
        {{1.0 / 19.0, 0.5}, {1.0 / 61.0, 1.0}},
        {{1.0 / 16.0, 0.7}, {1.0 / 47.0, 0.7}},
        {{1.0 / 31.0, 1.0}},
        {{1.0 / 26.0, 1.0}, {1.0 / 170.0, 0.8}},
    };
    s.slope = 0.0005;
    s.noise_std = 1.0;
    s.seed = seed;
    return s;
}

/// sin(2 pi 0.05 t) + sin(2 pi 0.4 t) + 0.002 t on one channel.
inline io::SynthSpec two_tone_task(std::size_t length = 512) {
    io::SynthSpec s;
    s.length = length;
    s.channels = 1;
    s.tones = {{{0.05, 1.0}, {0.4, 1.0}}};
    s.slope = 0.002;
    s.random_phase = false;
    return s;
}

} // namespace staug
