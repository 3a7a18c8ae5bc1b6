#pragma once

// Reference augmentations used for qualitative comparison: a deterministic
// smoother and a block shuffle.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "staug/errors.hpp"
#include "staug/random.hpp"
#include "staug/series.hpp"

namespace staug {

namespace detail {

inline void moving_average(std::span<const double> in, std::span<double> out, std::size_t kernel) {
    const auto n = static_cast<std::ptrdiff_t>(in.size());
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -half; k <= half; ++k) {
            acc += in[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(t + k, 0, n - 1))];
        }
        out[static_cast<std::size_t>(t)] = acc / static_cast<double>(kernel);
    }
}

inline void permute_blocks(std::span<double> x, std::size_t n_segments, RandomSource& rng) {
    const std::size_t n = x.size();
    std::vector<std::size_t> bounds(n_segments + 1);
    for (std::size_t s = 0; s <= n_segments; ++s) bounds[s] = s * n / n_segments;
    std::vector<std::size_t> order(n_segments);
    for (std::size_t s = 0; s < n_segments; ++s) order[s] = s;
    // Fisher-Yates with our own index draw; std::shuffle is not portable across libraries.
    for (std::size_t s = n_segments; s > 1; --s) std::swap(order[s - 1], order[rng.uniform_index(s)]);
    std::vector<double> src(x.begin(), x.end());
    std::size_t pos = 0;
    for (std::size_t s : order) {
        for (std::size_t t = bounds[s]; t < bounds[s + 1]; ++t) x[pos++] = src[t];
    }
}

} // namespace detail

/// Centered moving average with edge replication, per channel and part.
inline WindowPair moving_average_filter(const WindowPair& window, std::size_t kernel) {
    if (kernel == 0 || kernel % 2 == 0) throw ConfigError("moving_average_filter: kernel must be odd and >= 1");
    if (kernel > std::min(window.context(), window.horizon())) {
        throw ConfigError("moving_average_filter: kernel " + std::to_string(kernel) + " exceeds min(d, h)");
    }
    WindowPair out = window;
    for (std::size_t c = 0; c < window.channels(); ++c) {
        detail::moving_average(window.history.row(c), out.history.row(c), kernel);
        detail::moving_average(window.future.row(c), out.future.row(c), kernel);
    }
    return out;
}

/// Splits history and future independently into near-equal blocks and
/// shuffles the block order. Every channel uses the same block order.
inline WindowPair segment_permutation(const WindowPair& window, std::size_t n_segments, RandomSource& rng) {
    if (n_segments < 1 || n_segments > window.context()) {
        throw ConfigError("segment_permutation: n_segments must lie in [1, d]");
    }
    WindowPair out = window;
    const std::uint64_t base = rng.next_u64();
    for (std::size_t c = 0; c < window.channels(); ++c) {
        RandomSource hist_rng(base), fut_rng(base ^ 0x5851F42D4C957F2DULL);
        detail::permute_blocks(out.history.row(c), n_segments, hist_rng);
        detail::permute_blocks(out.future.row(c), n_segments, fut_rng);
    }
    return out;
}

} // namespace staug
