#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "staug/emd.hpp"
#include "staug/errors.hpp"
#include "staug/random.hpp"
#include "staug/series.hpp"

namespace staug {

/// How the EMD residue enters a recombined signal.
enum class ResiduePolicy {
    FixedOne,  // residue added with weight 1
    Weighted,  // residue gets its own U(a, b) weight
    Dropped,   // residue omitted
};

inline const char* to_string(ResiduePolicy p) {
    switch (p) {
        case ResiduePolicy::FixedOne: return "fixed_one";
        case ResiduePolicy::Weighted: return "weighted";
        case ResiduePolicy::Dropped: return "dropped";
    }
    return "unknown";
}

inline ResiduePolicy parse_residue_policy(const std::string& s) {
    if (s == "fixed_one" || s == "fixed-one") return ResiduePolicy::FixedOne;
    if (s == "weighted") return ResiduePolicy::Weighted;
    if (s == "dropped") return ResiduePolicy::Dropped;
    throw ConfigError("unknown residue policy '" + s + "'");
}

struct AugmentConfig {
    double weight_low = 0.0;
    double weight_high = 2.0;
    double alpha = 0.5;
    ResiduePolicy residue = ResiduePolicy::FixedOne;
    bool enable_freq = true;
    bool enable_time = true;
    emd::WindowPart part = emd::WindowPart::Full;

    void validate() const {
        if (!(weight_low < weight_high)) throw ConfigError("AugmentConfig: weight_low must be < weight_high");
        if (!(alpha > 0.0)) throw ConfigError("AugmentConfig: alpha must be > 0");
    }
};

/// sum_i w_i * IMF_i, plus the weighted residue unless dropped.
inline std::vector<double> recombine(const emd::ChannelDecomposition& dec, const WeightVector& w,
                                     ResiduePolicy policy) {
    if (w.weights.size() != dec.imfs.size()) {
        throw ShapeError("recombine: " + std::to_string(w.weights.size()) + " weights for " +
                         std::to_string(dec.imfs.size()) + " IMFs");
    }
    const std::size_t L = dec.source_length;
    std::vector<double> out(L, 0.0);
    for (std::size_t i = 0; i < dec.imfs.size(); ++i) {
        const double wi = w.weights[i];
        const auto& imf = dec.imfs[i];
        for (std::size_t t = 0; t < L; ++t) out[t] += wi * imf[t];
    }
    if (policy != ResiduePolicy::Dropped) {
        const double rw = policy == ResiduePolicy::FixedOne ? 1.0 : w.residue_weight;
        for (std::size_t t = 0; t < L; ++t) out[t] += rw * dec.residue[t];
    }
    return out;
}

namespace detail {

inline void check_matches(const WindowPair& window, const emd::Decomposition& dec) {
    if (dec.channels.size() != window.channels()) {
        throw ShapeError("decomposition has " + std::to_string(dec.channels.size()) +
                         " channels, window has " + std::to_string(window.channels()));
    }
    std::size_t expected = window.length();
    if (dec.part == emd::WindowPart::History) expected = window.context();
    if (dec.part == emd::WindowPart::Future) expected = window.horizon();
    for (const auto& ch : dec.channels) {
        if (ch.source_length != expected) throw ShapeError("decomposition length does not match window");
    }
}

} // namespace detail

/// Frequency-domain stage. Draws a fresh weight vector per channel and
/// rebuilds the decomposed part of the window; the drawn weights are
/// appended to `drawn` when given.
inline WindowPair freq_augment(const WindowPair& window, const emd::Decomposition& dec,
                               const AugmentConfig& cfg, RandomSource& rng,
                               std::vector<WeightVector>* drawn = nullptr) {
    if (!cfg.enable_freq) return window;
    detail::check_matches(window, dec);
    WindowPair out = window;
    const std::size_t d = window.context();
    for (std::size_t c = 0; c < window.channels(); ++c) {
        const auto& ch = dec.channels[c];
        WeightVector w = draw_weights(ch.imf_count(), cfg.weight_low, cfg.weight_high, rng);
        if (cfg.residue == ResiduePolicy::Weighted) w.residue_weight = rng.uniform(cfg.weight_low, cfg.weight_high);
        const auto s = recombine(ch, w, cfg.residue);
        switch (dec.part) {
            case emd::WindowPart::Full:
                std::copy_n(s.begin(), d, out.history.row(c).begin());
                std::copy(s.begin() + static_cast<std::ptrdiff_t>(d), s.end(), out.future.row(c).begin());
                break;
            case emd::WindowPart::History:
                std::copy(s.begin(), s.end(), out.history.row(c).begin());
                break;
            case emd::WindowPart::Future:
                std::copy(s.begin(), s.end(), out.future.row(c).begin());
                break;
        }
        if (drawn) drawn->push_back(std::move(w));
    }
    return out;
}

/// Convex combination lambda * a + (1 - lambda) * b, one lambda for every
/// channel and for both history and future.
inline WindowPair mixup(const WindowPair& a, const WindowPair& b, double lambda) {
    if (!a.same_shape(b)) throw ShapeError("mixup: windows differ in shape");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mixup: lambda must lie in [0, 1]");
    WindowPair out = a;
    const double mu = 1.0 - lambda;
    auto mix = [&](std::span<double> dst, std::span<const double> x, std::span<const double> y) {
        for (std::size_t k = 0; k < dst.size(); ++k) {
            // Clamping only removes rounding overshoot, e.g. when x == y.
            dst[k] = std::clamp(lambda * x[k] + mu * y[k], std::min(x[k], y[k]), std::max(x[k], y[k]));
        }
    };
    mix(out.history.flat(), a.history.flat(), b.history.flat());
    mix(out.future.flat(), a.future.flat(), b.future.flat());
    return out;
}

struct WindowKey {
    std::uint32_t series_id = 0;
    std::size_t offset = 0;

    auto operator<=>(const WindowKey&) const = default;
};

inline WindowKey key_of(const WindowPair& w) { return {w.series_id, w.source_offset}; }

/// Write-once store of per-window decompositions.
class DecompositionCache {
public:
    void insert(WindowKey key, emd::Decomposition dec) { entries_.insert_or_assign(key, std::move(dec)); }

    bool contains(WindowKey key) const { return entries_.count(key) != 0; }

    const emd::Decomposition& at(WindowKey key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            throw CacheMissError("no decomposition cached for series " + std::to_string(key.series_id) +
                                 " offset " + std::to_string(key.offset) +
                                 "; run precompute over the training windows first");
        }
        return it->second;
    }

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

private:
    std::map<WindowKey, emd::Decomposition> entries_;
};

/// Decomposes every window; `jobs` > 1 splits the work across threads.
inline DecompositionCache precompute(std::span<const WindowPair> dataset, const emd::EmdConfig& cfg = {},
                                     emd::WindowPart part = emd::WindowPart::Full, std::size_t jobs = 1) {
    cfg.validate();
    std::vector<emd::Decomposition> decs(dataset.size());
    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < dataset.size(); i += step) {
            decs[i] = emd::decompose_window(dataset[i], part, cfg);
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, dataset.size()));
    if (jobs == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
    }
    DecompositionCache cache;
    for (std::size_t i = 0; i < dataset.size(); ++i) cache.insert(key_of(dataset[i]), std::move(decs[i]));
    return cache;
}

/// Audit record of the random choices behind one augmented sample.
struct SampleTrace {
    std::size_t index = 0;
    std::size_t partner = 0;
    double lambda = 1.0;
    std::vector<WeightVector> weights_i;
    std::vector<WeightVector> weights_j;
};

/// One augmented training sample for window `index`: recombine it and a
/// uniformly drawn partner, then mix the two with lambda ~ Beta(alpha, alpha).
inline WindowPair staug_sample(std::size_t index, std::span<const WindowPair> dataset,
                               const DecompositionCache& cache, const AugmentConfig& cfg, RandomSource& rng,
                               SampleTrace* trace = nullptr) {
    if (dataset.empty()) throw ConfigError("staug_sample: empty dataset");
    if (index >= dataset.size()) throw BoundsError("staug_sample: index out of range");
    SampleTrace local;
    SampleTrace& tr = trace ? *trace : local;
    tr = SampleTrace{};
    tr.index = index;
    tr.partner = index;

    const WindowPair& wi = dataset[index];
    if (!cfg.enable_freq && !cfg.enable_time) return wi;

    if (!cfg.enable_time) {
        return freq_augment(wi, cache.at(key_of(wi)), cfg, rng, &tr.weights_i);
    }

    const std::size_t j = rng.uniform_index(dataset.size());
    tr.partner = j;
    const WindowPair& wj = dataset[j];
    if (cfg.enable_freq) {
        const auto& di = cache.at(key_of(wi));
        const auto& dj = cache.at(key_of(wj));
        WindowPair ai = freq_augment(wi, di, cfg, rng, &tr.weights_i);
        WindowPair aj = freq_augment(wj, dj, cfg, rng, &tr.weights_j);
        tr.lambda = draw_lambda(cfg.alpha, rng);
        return mixup(ai, aj, tr.lambda);
    }
    tr.lambda = draw_lambda(cfg.alpha, rng);
    return mixup(wi, wj, tr.lambda);
}

} // namespace staug
