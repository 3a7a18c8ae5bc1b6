#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "staug/errors.hpp"
#include "staug/series.hpp"
#include "staug/spline.hpp"

namespace staug::emd {

/// Where envelope knots are reflected to extend past the signal ends.
enum class BoundaryMode {
    /// Reflect about the outermost extremum of either kind, which continues
    /// a locally periodic signal; falls back to the end sample when the
    /// reflected knots would not reach past the end.
    ExtremumAxis,
    /// Reflect about the first and last sample.
    EndpointAxis,
};

struct EmdConfig {
    double sd_threshold = 0.2;          // Cauchy-type stopping threshold for sifting
    std::size_t max_sift_iters = 10;
    std::size_t max_imfs = 10;
    double residue_energy_ratio = 1e-10;
    std::size_t boundary_extrema = 2;   // extrema mirrored across each end
    BoundaryMode boundary = BoundaryMode::ExtremumAxis;
    bool require_oscillation = true;    // also require |zero crossings - extrema| <= 1 to stop

    void validate() const {
        if (!(sd_threshold > 0.0)) throw ConfigError("EmdConfig: sd_threshold must be > 0");
        if (max_sift_iters < 1) throw ConfigError("EmdConfig: max_sift_iters must be >= 1");
        if (max_imfs < 1) throw ConfigError("EmdConfig: max_imfs must be >= 1");
        if (!(residue_energy_ratio > 0.0 && residue_energy_ratio < 1.0)) {
            throw ConfigError("EmdConfig: residue_energy_ratio must lie in (0, 1)");
        }
    }
};

struct Extrema {
    std::vector<std::size_t> maxima;
    std::vector<std::size_t> minima;

    std::size_t total() const noexcept { return maxima.size() + minima.size(); }
};

/// Interior strict local extrema. A flat run that is a local extremum
/// contributes its midpoint, rounded down.
inline Extrema find_extrema(std::span<const double> s) {
    Extrema ex;
    const std::size_t L = s.size();
    if (L < 3) return ex;
    std::size_t i = 1;
    while (i + 1 < L) {
        std::size_t j = i;
        while (j + 1 < L && s[j + 1] == s[i]) ++j;
        if (j + 1 >= L) break;  // plateau touches the right edge
        const double left = s[i - 1];
        const double right = s[j + 1];
        const double v = s[i];
        const std::size_t mid = i + (j - i) / 2;
        if (v > left && v > right) ex.maxima.push_back(mid);
        else if (v < left && v < right) ex.minima.push_back(mid);
        i = j + 1;
    }
    return ex;
}

inline std::size_t count_zero_crossings(std::span<const double> s) {
    std::size_t n = 0;
    int prev = 0;
    for (double v : s) {
        const int sign = (v > 0.0) - (v < 0.0);
        if (sign == 0) continue;
        if (prev != 0 && sign != prev) ++n;
        prev = sign;
    }
    return n;
}

namespace detail {

/// Up to `nb` knots of `idx` reflected about `axis` towards lower indices,
/// outermost first. Knots at or beyond the axis are skipped.
inline std::vector<std::size_t> left_mirror_sources(std::span<const std::size_t> idx, double axis,
                                                    std::size_t nb) {
    std::vector<std::size_t> src;
    for (std::size_t k = 0; k < idx.size() && src.size() < nb; ++k) {
        if (static_cast<double>(idx[k]) > axis) src.push_back(k);
    }
    return src;
}

inline std::vector<std::size_t> right_mirror_sources(std::span<const std::size_t> idx, double axis,
                                                     std::size_t nb) {
    std::vector<std::size_t> src;
    for (std::size_t k = idx.size(); k-- > 0 && src.size() < nb;) {
        if (static_cast<double>(idx[k]) < axis) src.push_back(k);
    }
    return src;
}

} // namespace detail

/// Natural cubic spline through the extrema at `idx`, sampled at 0..L-1.
/// cfg.boundary_extrema knots are mirrored across each end before fitting.
inline std::vector<double> envelope(std::span<const double> s, std::span<const std::size_t> idx,
                                    const EmdConfig& cfg) {
    if (idx.size() < 2) {
        throw DegenerateEnvelopeError("envelope: need >= 2 extrema, got " + std::to_string(idx.size()));
    }
    const std::size_t L = s.size();
    const double last = static_cast<double>(L - 1);
    const std::size_t nb = cfg.boundary_extrema;

    double left_axis = 0.0;
    double right_axis = last;
    if (cfg.boundary == BoundaryMode::ExtremumAxis) {
        const Extrema all = find_extrema(s);
        if (!all.maxima.empty() && !all.minima.empty()) {
            left_axis = static_cast<double>(std::min(all.maxima.front(), all.minima.front()));
            right_axis = static_cast<double>(std::max(all.maxima.back(), all.minima.back()));
        }
    }

    auto left = detail::left_mirror_sources(idx, left_axis, nb);
    if (nb > 0 && (left.empty() || 2.0 * left_axis - static_cast<double>(idx[left.back()]) > 0.0)) {
        left_axis = 0.0;
        left = detail::left_mirror_sources(idx, left_axis, nb);
    }
    auto right = detail::right_mirror_sources(idx, right_axis, nb);
    if (nb > 0 && (right.empty() || 2.0 * right_axis - static_cast<double>(idx[right.back()]) < last)) {
        right_axis = last;
        right = detail::right_mirror_sources(idx, right_axis, nb);
    }

    std::vector<double> x, y;
    x.reserve(idx.size() + left.size() + right.size());
    y.reserve(x.capacity());
    for (std::size_t k = left.size(); k-- > 0;) {
        x.push_back(2.0 * left_axis - static_cast<double>(idx[left[k]]));
        y.push_back(s[idx[left[k]]]);
    }
    for (std::size_t k : idx) {
        x.push_back(static_cast<double>(k));
        y.push_back(s[k]);
    }
    for (std::size_t k : right) {
        x.push_back(2.0 * right_axis - static_cast<double>(idx[k]));
        y.push_back(s[idx[k]]);
    }

    NaturalCubicSpline spline(std::move(x), std::move(y));
    std::vector<double> env(L);
    for (std::size_t t = 0; t < L; ++t) env[t] = spline(static_cast<double>(t));
    return env;
}

struct SiftResult {
    std::vector<double> imf;
    std::size_t iterations = 0;
    bool terminated = false;  // an envelope became degenerate before convergence
};

/// True when zero crossings and extrema differ by at most one.
inline bool oscillates(std::span<const double> s) {
    const auto zc = static_cast<long long>(count_zero_crossings(s));
    const auto ex = static_cast<long long>(find_extrema(s).total());
    return zc - ex <= 1 && ex - zc <= 1;
}

inline bool siftable(const Extrema& ex) { return ex.maxima.size() >= 2 && ex.minima.size() >= 2; }

inline SiftResult sift(std::span<const double> signal, const EmdConfig& cfg) {
    SiftResult r;
    r.imf.assign(signal.begin(), signal.end());
    const std::size_t L = signal.size();
    std::vector<double> next(L);
    for (std::size_t it = 0; it < cfg.max_sift_iters; ++it) {
        const Extrema ex = find_extrema(r.imf);
        if (!siftable(ex)) {
            r.terminated = true;
            return r;
        }
        const auto upper = envelope(r.imf, ex.maxima, cfg);
        const auto lower = envelope(r.imf, ex.minima, cfg);
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < L; ++t) {
            const double mean = 0.5 * (upper[t] + lower[t]);
            next[t] = r.imf[t] - mean;
            num += mean * mean;
            den += r.imf[t] * r.imf[t];
        }
        r.imf.swap(next);
        r.iterations = it + 1;
        if (den == 0.0) break;
        if (num / den < cfg.sd_threshold && (!cfg.require_oscillation || oscillates(r.imf))) break;
    }
    return r;
}

inline const char* to_string(BoundaryMode m) {
    return m == BoundaryMode::ExtremumAxis ? "extremum" : "endpoint";
}

inline BoundaryMode parse_boundary_mode(const std::string& s) {
    if (s == "extremum") return BoundaryMode::ExtremumAxis;
    if (s == "endpoint") return BoundaryMode::EndpointAxis;
    throw ConfigError("unknown boundary mode '" + s + "'");
}

enum class StopReason { FewExtrema, NegligibleEnergy, MaxImfs };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::FewExtrema: return "few_extrema";
        case StopReason::NegligibleEnergy: return "negligible_energy";
        case StopReason::MaxImfs: return "max_imfs";
    }
    return "unknown";
}

struct ChannelDecomposition {
    std::vector<std::vector<double>> imfs;  // highest frequency first
    std::vector<double> residue;
    std::size_t source_length = 0;
    StopReason stop_reason = StopReason::FewExtrema;

    std::size_t imf_count() const noexcept { return imfs.size(); }

    std::vector<double> reconstruct() const {
        std::vector<double> out = residue;
        for (const auto& imf : imfs) {
            for (std::size_t t = 0; t < out.size(); ++t) out[t] += imf[t];
        }
        return out;
    }
};

inline double energy(std::span<const double> s) {
    double e = 0.0;
    for (double v : s) e += v * v;
    return e;
}

inline ChannelDecomposition decompose(std::span<const double> signal, const EmdConfig& cfg = {}) {
    cfg.validate();
    ChannelDecomposition dec;
    dec.source_length = signal.size();
    dec.residue.assign(signal.begin(), signal.end());
    const double input_energy = energy(signal);
    std::vector<double> imf_sum(signal.size(), 0.0);

    while (true) {
        const Extrema ex = find_extrema(dec.residue);
        if (ex.total() < 4 || !siftable(ex)) {
            dec.stop_reason = StopReason::FewExtrema;
            break;
        }
        if (energy(dec.residue) < cfg.residue_energy_ratio * input_energy) {
            dec.stop_reason = StopReason::NegligibleEnergy;
            break;
        }
        if (dec.imfs.size() >= cfg.max_imfs) {
            dec.stop_reason = StopReason::MaxImfs;
            break;
        }
        SiftResult sr = sift(dec.residue, cfg);
        for (std::size_t t = 0; t < imf_sum.size(); ++t) {
            imf_sum[t] += sr.imf[t];
            dec.residue[t] = signal[t] - imf_sum[t];
        }
        dec.imfs.push_back(std::move(sr.imf));
    }
    return dec;
}

enum class WindowPart { History, Future, Full };

struct Decomposition {
    std::vector<ChannelDecomposition> channels;
    WindowPart part = WindowPart::Full;
};

inline Decomposition decompose_window(const WindowPair& w, WindowPart part = WindowPart::Full,
                                      const EmdConfig& cfg = {}) {
    Decomposition dec;
    dec.part = part;
    dec.channels.reserve(w.channels());
    for (std::size_t c = 0; c < w.channels(); ++c) {
        switch (part) {
            case WindowPart::History: dec.channels.push_back(decompose(w.history.row(c), cfg)); break;
            case WindowPart::Future: dec.channels.push_back(decompose(w.future.row(c), cfg)); break;
            case WindowPart::Full: dec.channels.push_back(decompose(w.joined(c), cfg)); break;
        }
    }
    return dec;
}

} // namespace staug::emd
