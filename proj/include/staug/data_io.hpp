#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "staug/errors.hpp"
#include "staug/random.hpp"
#include "staug/series.hpp"

namespace staug::io {

// ---------------------------------------------------------------------------
// Number and timestamp text
// ---------------------------------------------------------------------------

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
    s = trim(s);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

enum class TimeFormat { None, Index, Iso8601 };

/// Seconds since the Unix epoch for "YYYY-MM-DD[( |T)HH:MM[:SS]]".
inline std::optional<std::int64_t> parse_iso8601(std::string_view s) {
    s = trim(s);
    auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        if (pos + len > s.size()) return std::nullopt;
        int v = 0;
        auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
        if (ec != std::errc() || ptr != s.data() + pos + len) return std::nullopt;
        return v;
    };
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto y = num(0, 4), mo = num(5, 2), d = num(8, 2);
    if (!y || !mo || !d) return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (s.size() > 10) {
        if ((s[10] != ' ' && s[10] != 'T') || s.size() < 16 || s[13] != ':') return std::nullopt;
        auto h = num(11, 2), m = num(14, 2);
        if (!h || !m) return std::nullopt;
        hh = *h;
        mm = *m;
        if (s.size() > 16) {
            if (s.size() != 19 || s[16] != ':') return std::nullopt;
            auto sec = num(17, 2);
            if (!sec) return std::nullopt;
            ss = *sec;
        }
    }
    using namespace std::chrono;
    const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) return std::nullopt;
    const auto days_since = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days_since) * 86400 + hh * 3600 + mm * 60 + ss;
}

inline std::string format_iso8601(std::int64_t epoch_seconds) {
    using namespace std::chrono;
    std::int64_t days_since = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days_since;
    }
    const year_month_day ymd{sys_days{days{days_since}}};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
    return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

struct CsvSeries {
    MultivariateSeries series;
    TimeFormat time_format = TimeFormat::None;
    std::string time_column = "index";
};

/// Reads a header + rows CSV whose first column is a timestamp or index
/// and whose remaining columns are numeric channels.
inline CsvSeries read_csv(std::istream& in, const std::string& source = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_fields(line);
    if (header.size() < 2) throw ParseError(source + ": need a time column and at least one channel column");
    const std::size_t c = header.size() - 1;

    std::vector<std::string> names;
    for (std::size_t k = 1; k < header.size(); ++k) names.emplace_back(trim(header[k]));

    std::vector<std::vector<double>> cols(c);
    std::vector<std::string> first;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError(source + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                             " fields, header has " + std::to_string(header.size()));
        }
        first.emplace_back(trim(fields[0]));
        for (std::size_t k = 0; k < c; ++k) {
            auto v = parse_double(fields[k + 1]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(source + ": row " + std::to_string(row) + ", column " + std::to_string(k + 2) +
                                 " ('" + names[k] + "'): not a finite number: '" +
                                 std::string(trim(fields[k + 1])) + "'");
            }
            cols[k].push_back(*v);
        }
    }
    if (first.empty()) throw ParseError(source + ": no data rows");

    CsvSeries out;
    out.time_column = std::string(trim(header[0]));
    std::vector<std::int64_t> ts;
    ts.reserve(first.size());
    auto parse_all = [&](auto parser) {
        ts.clear();
        for (const auto& f : first) {
            auto v = parser(f);
            if (!v) return false;
            ts.push_back(*v);
        }
        for (std::size_t t = 1; t < ts.size(); ++t) {
            if (ts[t] <= ts[t - 1]) return false;
        }
        return true;
    };
    std::optional<std::vector<std::int64_t>> timestamps;
    if (parse_all([](const std::string& s) { return parse_int(s); })) {
        out.time_format = TimeFormat::Index;
        timestamps = ts;
    } else if (parse_all([](const std::string& s) { return parse_iso8601(s); })) {
        out.time_format = TimeFormat::Iso8601;
        timestamps = ts;
    }
    out.series = MultivariateSeries(Matrix::from_rows(cols), std::move(timestamps), std::move(names));
    return out;
}

inline CsvSeries read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_csv(in, path);
}

inline MultivariateSeries load_csv(const std::string& path) { return read_csv(path).series; }

inline void write_csv(std::ostream& out, const MultivariateSeries& s, TimeFormat fmt = TimeFormat::Index,
                      const std::string& time_column = "index") {
    out << time_column;
    for (std::size_t c = 0; c < s.channels(); ++c) {
        out << ',' << (s.channel_names().empty() ? "ch" + std::to_string(c) : s.channel_names()[c]);
    }
    out << '\n';
    for (std::size_t t = 0; t < s.length(); ++t) {
        const std::int64_t stamp = s.timestamps() ? (*s.timestamps())[t] : static_cast<std::int64_t>(t);
        if (fmt == TimeFormat::Iso8601 && s.timestamps()) out << format_iso8601(stamp);
        else out << stamp;
        for (std::size_t c = 0; c < s.channels(); ++c) out << ',' << format_double(s.values()(c, t));
        out << '\n';
    }
}

inline void write_csv(const std::string& path, const MultivariateSeries& s, TimeFormat fmt = TimeFormat::Index,
                      const std::string& time_column = "index") {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    write_csv(out, s, fmt, time_column);
}

/// Plain numeric table: one header row, one column per vector.
inline void write_columns(const std::string& path, const std::vector<std::string>& header,
                          const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << format_double(columns[k][r]);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Chronological split
// ---------------------------------------------------------------------------

struct SplitSpec {
    double train = 0.7;
    double val = 0.2;
    double test = 0.1;

    void validate() const {
        if (!(train > 0 && val > 0 && test > 0)) throw ConfigError("SplitSpec: ratios must be positive");
        if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("SplitSpec: ratios must sum to 1");
    }
};

struct SplitBounds {
    std::size_t train_end = 0;  // floor(train * T)
    std::size_t val_end = 0;    // floor((train + val) * T)
};

inline SplitBounds split_bounds(std::size_t T, const SplitSpec& spec) {
    spec.validate();
    const double t = static_cast<double>(T);
    // The small slack keeps e.g. 0.7 * 100 from flooring to 69.
    return {static_cast<std::size_t>(std::floor(spec.train * t + 1e-9)),
            static_cast<std::size_t>(std::floor((spec.train + spec.val) * t + 1e-9))};
}

struct Splits {
    MultivariateSeries train;
    MultivariateSeries val;
    MultivariateSeries test;
};

/// Chronological train/val/test split. Validation and test segments are
/// prefixed with the `context` steps preceding their boundary so that their
/// first window's forecast starts exactly at the boundary. With context and
/// horizon given, every segment must host at least one window.
inline Splits split(const MultivariateSeries& s, const SplitSpec& spec = {}, std::size_t context = 0,
                    std::size_t horizon = 0) {
    const std::size_t T = s.length();
    const auto b = split_bounds(T, spec);
    const std::size_t need = context + horizon;
    const std::size_t val_begin = b.train_end >= context ? b.train_end - context : 0;
    const std::size_t test_begin = b.val_end >= context ? b.val_end - context : 0;
    const std::size_t lens[3] = {b.train_end, b.val_end - val_begin, T - test_begin};
    const char* names[3] = {"train", "validation", "test"};
    for (int k = 0; k < 3; ++k) {
        if (lens[k] == 0 || (need > 0 && lens[k] < need)) {
            throw ConfigError(std::string(names[k]) + " split has " + std::to_string(lens[k]) +
                              " steps but a window needs " + std::to_string(std::max<std::size_t>(need, 1)) +
                              " (series length " + std::to_string(T) + ")");
        }
    }
    return {s.slice(0, lens[0]), s.slice(val_begin, lens[1]), s.slice(test_begin, lens[2])};
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Per-channel z-score using statistics of the series it was fitted on.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(std::vector<double> mean, std::vector<double> stddev)
        : mean_(std::move(mean)), std_(std::move(stddev)) {}

    static Normalizer fit(const MultivariateSeries& train) {
        std::vector<double> mean(train.channels()), sd(train.channels());
        const double n = static_cast<double>(train.length());
        for (std::size_t c = 0; c < train.channels(); ++c) {
            double m = 0.0;
            for (double v : train.channel(c)) m += v;
            m /= n;
            double var = 0.0;
            for (double v : train.channel(c)) var += (v - m) * (v - m);
            var /= n;
            if (!(var > 0.0)) {
                const std::string name = train.channel_names().empty() ? "" : " '" + train.channel_names()[c] + "'";
                throw ConfigError("fit_normalizer: channel " + std::to_string(c) + name + " has zero variance");
            }
            mean[c] = m;
            sd[c] = std::sqrt(var);
        }
        return Normalizer(std::move(mean), std::move(sd));
    }

    const std::vector<double>& mean() const noexcept { return mean_; }
    const std::vector<double>& stddev() const noexcept { return std_; }

    MultivariateSeries apply(const MultivariateSeries& s) const {
        return transform(s, [](double v, double m, double sd) { return (v - m) / sd; });
    }

    MultivariateSeries invert(const MultivariateSeries& s) const {
        return transform(s, [](double v, double m, double sd) { return v * sd + m; });
    }

private:
    template <class F>
    MultivariateSeries transform(const MultivariateSeries& s, F f) const {
        if (s.channels() != mean_.size()) throw ShapeError("Normalizer: channel count mismatch");
        Matrix m = s.values();
        for (std::size_t c = 0; c < m.channels(); ++c) {
            for (double& v : m.row(c)) v = f(v, mean_[c], std_[c]);
        }
        return MultivariateSeries(std::move(m), s.timestamps(), s.channel_names());
    }

    std::vector<double> mean_;
    std::vector<double> std_;
};

inline Normalizer fit_normalizer(const MultivariateSeries& train) { return Normalizer::fit(train); }

// ---------------------------------------------------------------------------
// Training-set subsampling
// ---------------------------------------------------------------------------

inline std::size_t subsample_size(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("subsample_train: fraction must lie in (0, 1]");
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, n == 0 ? 0 : 1, n);
}

/// Uniform subset without replacement of ceil(fraction * N) windows, in
/// their original order.
inline std::vector<WindowPair> subsample_train(std::span<const WindowPair> windows, double fraction,
                                               RandomSource& rng) {
    const std::size_t n = windows.size();
    const std::size_t k = subsample_size(n, fraction);
    if (k == n) return {windows.begin(), windows.end()};
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.uniform_index(n - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    std::vector<WindowPair> out;
    out.reserve(k);
    for (std::size_t i : idx) out.push_back(windows[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct Tone {
    double frequency = 0.05;  // cycles per step
    double amplitude = 1.0;
};

struct SynthSpec {
    std::size_t length = 512;
    std::size_t channels = 1;
    /// One tone list per channel; a single list is shared by all channels.
    std::vector<std::vector<Tone>> tones;
    double slope = 0.0;      // trend per step
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    bool random_phase = true;

    const std::vector<Tone>& tones_for(std::size_t c) const {
        static const std::vector<Tone> none;
        if (tones.empty()) return none;
        return tones.size() == 1 ? tones.front() : tones[c];
    }

    void validate() const {
        if (length < 64) throw ConfigError("SynthSpec: length must be >= 64");
        if (channels < 1) throw ConfigError("SynthSpec: channels must be >= 1");
        if (tones.size() > 1 && tones.size() != channels) {
            throw ConfigError("SynthSpec: tone lists must be given once or once per channel");
        }
        for (const auto& list : tones) {
            for (const auto& t : list) {
                if (!(t.frequency > 0.0 && t.frequency < 0.5)) {
                    throw ConfigError("SynthSpec: tone frequency must lie in (0, 0.5)");
                }
            }
        }
        if (!(noise_std >= 0.0)) throw ConfigError("SynthSpec: noise_std must be >= 0");
    }
};

/// sum of tones + slope * t + Gaussian noise, per channel.
inline MultivariateSeries synth_generate(const SynthSpec& spec) {
    spec.validate();
    Matrix m(spec.channels, spec.length);
    const RandomSource root(spec.seed);
    for (std::size_t c = 0; c < spec.channels; ++c) {
        RandomSource phase_rng = root.child(2 * c);
        RandomSource noise_rng = root.child(2 * c + 1);
        const auto& tones = spec.tones_for(c);
        std::vector<double> phase(tones.size(), 0.0);
        if (spec.random_phase) {
            for (double& p : phase) p = phase_rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        for (std::size_t t = 0; t < spec.length; ++t) {
            const double tt = static_cast<double>(t);
            double v = spec.slope * tt;
            for (std::size_t k = 0; k < tones.size(); ++k) {
                v += tones[k].amplitude * std::sin(2.0 * std::numbers::pi * tones[k].frequency * tt + phase[k]);
            }
            if (spec.noise_std > 0.0) v += spec.noise_std * noise_rng.normal();
            m(c, t) = v;
        }
    }
    return MultivariateSeries(std::move(m));
}

} // namespace staug::io
