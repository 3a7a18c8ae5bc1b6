#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "staug/errors.hpp"

namespace staug {

/// Dense channel-major matrix: each channel (row) is contiguous.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t channels, std::size_t steps, double fill = 0.0)
        : channels_(channels), steps_(steps), data_(channels * steps, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return {};
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t c = 0; c < rows.size(); ++c) {
            if (rows[c].size() != m.steps_) {
                throw ShapeError("Matrix::from_rows: ragged rows");
            }
            std::copy(rows[c].begin(), rows[c].end(), m.row(c).begin());
        }
        return m;
    }

    std::size_t channels() const noexcept { return channels_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t c, std::size_t t) { return data_[c * steps_ + t]; }
    double operator()(std::size_t c, std::size_t t) const { return data_[c * steps_ + t]; }

    std::span<double> row(std::size_t c) { return {data_.data() + c * steps_, steps_}; }
    std::span<const double> row(std::size_t c) const { return {data_.data() + c * steps_, steps_}; }

    /// Flat channel-major storage.
    std::span<const double> flat() const noexcept { return data_; }
    std::span<double> flat() noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t channels_ = 0;
    std::size_t steps_ = 0;
    std::vector<double> data_;
};

/// c-channel, length-T real series with optional timestamps and names.
class MultivariateSeries {
public:
    MultivariateSeries() = default;

    explicit MultivariateSeries(Matrix values,
                                std::optional<std::vector<std::int64_t>> timestamps = std::nullopt,
                                std::vector<std::string> channel_names = {})
        : values_(std::move(values)),
          timestamps_(std::move(timestamps)),
          channel_names_(std::move(channel_names)) {
        validate();
    }

    const Matrix& values() const noexcept { return values_; }
    std::size_t channels() const noexcept { return values_.channels(); }
    std::size_t length() const noexcept { return values_.steps(); }
    std::span<const double> channel(std::size_t c) const { return values_.row(c); }

    const std::optional<std::vector<std::int64_t>>& timestamps() const noexcept { return timestamps_; }
    const std::vector<std::string>& channel_names() const noexcept { return channel_names_; }

    /// Contiguous sub-range [begin, begin + count) of every channel.
    MultivariateSeries slice(std::size_t begin, std::size_t count) const {
        if (begin + count > length() || count == 0) {
            throw BoundsError("MultivariateSeries::slice: range [" + std::to_string(begin) + ", " +
                              std::to_string(begin + count) + ") exceeds length " +
                              std::to_string(length()));
        }
        Matrix m(channels(), count);
        for (std::size_t c = 0; c < channels(); ++c) {
            auto src = channel(c).subspan(begin, count);
            std::copy(src.begin(), src.end(), m.row(c).begin());
        }
        std::optional<std::vector<std::int64_t>> ts;
        if (timestamps_) {
            ts.emplace(timestamps_->begin() + static_cast<std::ptrdiff_t>(begin),
                       timestamps_->begin() + static_cast<std::ptrdiff_t>(begin + count));
        }
        return MultivariateSeries(std::move(m), std::move(ts), channel_names_);
    }

private:
    void validate() const {
        if (values_.channels() == 0 || values_.steps() == 0) {
            throw ShapeError("MultivariateSeries: need at least one channel and one step");
        }
        for (std::size_t c = 0; c < values_.channels(); ++c) {
            for (std::size_t t = 0; t < values_.steps(); ++t) {
                if (!std::isfinite(values_(c, t))) {
                    throw ConfigError("MultivariateSeries: non-finite value at channel " +
                                      std::to_string(c) + ", step " + std::to_string(t));
                }
            }
        }
        if (timestamps_) {
            if (timestamps_->size() != values_.steps()) {
                throw ShapeError("MultivariateSeries: timestamp count differs from length");
            }
            for (std::size_t t = 1; t < timestamps_->size(); ++t) {
                if ((*timestamps_)[t] <= (*timestamps_)[t - 1]) {
                    throw ConfigError("MultivariateSeries: timestamps not strictly increasing at step " +
                                      std::to_string(t));
                }
            }
        }
        if (!channel_names_.empty() && channel_names_.size() != values_.channels()) {
            throw ShapeError("MultivariateSeries: channel name count differs from channel count");
        }
    }

    Matrix values_;
    std::optional<std::vector<std::int64_t>> timestamps_;
    std::vector<std::string> channel_names_;
};

/// Aligned history/future pair cut from one series.
struct WindowPair {
    Matrix history;  // c x d
    Matrix future;   // c x h
    std::size_t source_offset = 0;
    std::uint32_t series_id = 0;

    std::size_t channels() const noexcept { return history.channels(); }
    std::size_t context() const noexcept { return history.steps(); }
    std::size_t horizon() const noexcept { return future.steps(); }
    std::size_t length() const noexcept { return context() + horizon(); }

    /// History followed by future for one channel.
    std::vector<double> joined(std::size_t c) const {
        std::vector<double> out;
        out.reserve(length());
        auto h = history.row(c);
        auto f = future.row(c);
        out.insert(out.end(), h.begin(), h.end());
        out.insert(out.end(), f.begin(), f.end());
        return out;
    }

    bool same_shape(const WindowPair& o) const noexcept {
        return channels() == o.channels() && context() == o.context() && horizon() == o.horizon();
    }
};

inline WindowPair slice_window(const MultivariateSeries& series, std::size_t offset, std::size_t d,
                               std::size_t h) {
    if (d == 0 || h == 0) {
        throw BoundsError("slice_window: d >= 1 and h >= 1 required");
    }
    if (offset + d + h > series.length()) {
        throw BoundsError("slice_window: offset + d + h <= T violated (" + std::to_string(offset) +
                          " + " + std::to_string(d) + " + " + std::to_string(h) + " > " +
                          std::to_string(series.length()) + ")");
    }
    const std::size_t c = series.channels();
    WindowPair w{Matrix(c, d), Matrix(c, h), offset, 0};
    for (std::size_t ch = 0; ch < c; ++ch) {
        auto src = series.channel(ch);
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(offset), d, w.history.row(ch).begin());
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(offset + d), h, w.future.row(ch).begin());
    }
    return w;
}

/// Number of stride-spaced windows of length d + h fitting in T steps.
inline std::size_t window_count(std::size_t T, std::size_t d, std::size_t h, std::size_t stride) {
    if (stride == 0 || d + h > T) return 0;
    return (T - d - h) / stride + 1;
}

inline std::vector<WindowPair> enumerate_windows(const MultivariateSeries& series, std::size_t d,
                                                 std::size_t h, std::size_t stride) {
    if (stride == 0) throw ConfigError("enumerate_windows: stride must be >= 1");
    std::vector<WindowPair> out;
    const std::size_t n = window_count(series.length(), d, h, stride);
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back(slice_window(series, k * stride, d, h));
    }
    return out;
}

} // namespace staug
