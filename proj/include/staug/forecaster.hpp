#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "staug/errors.hpp"
#include "staug/random.hpp"
#include "staug/series.hpp"

namespace staug {

/// Direct multi-horizon affine forecaster: the flattened (channel-major)
/// history x of size c*d maps to the flattened future W x + b of size c*h.
class LinearForecastModel {
public:
    LinearForecastModel() = default;
    LinearForecastModel(std::size_t channels, std::size_t context, std::size_t horizon)
        : c_(channels), d_(context), h_(horizon),
          weights_(outputs() * inputs(), 0.0), bias_(outputs(), 0.0) {
        if (c_ == 0 || d_ == 0 || h_ == 0) throw ConfigError("LinearForecastModel: zero dimension");
    }

    std::size_t channels() const noexcept { return c_; }
    std::size_t context() const noexcept { return d_; }
    std::size_t horizon() const noexcept { return h_; }
    std::size_t inputs() const noexcept { return c_ * d_; }
    std::size_t outputs() const noexcept { return c_ * h_; }

    /// Row-major outputs() x inputs().
    std::span<double> weights() noexcept { return weights_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<double> bias() noexcept { return bias_; }
    std::span<const double> bias() const noexcept { return bias_; }

    double& weight(std::size_t out, std::size_t in) { return weights_[out * inputs() + in]; }
    double weight(std::size_t out, std::size_t in) const { return weights_[out * inputs() + in]; }

    bool operator==(const LinearForecastModel&) const = default;

private:
    std::size_t c_ = 0, d_ = 0, h_ = 0;
    std::vector<double> weights_;
    std::vector<double> bias_;
};

inline Matrix predict(const LinearForecastModel& model, const Matrix& history) {
    if (history.channels() != model.channels() || history.steps() != model.context()) {
        throw ShapeError("predict: history is " + std::to_string(history.channels()) + "x" +
                         std::to_string(history.steps()) + ", model expects " +
                         std::to_string(model.channels()) + "x" + std::to_string(model.context()));
    }
    Matrix out(model.channels(), model.horizon());
    const auto x = history.flat();
    auto y = out.flat();
    const auto w = model.weights();
    const auto b = model.bias();
    const std::size_t n_in = model.inputs();
    for (std::size_t o = 0; o < model.outputs(); ++o) {
        const double* row = w.data() + o * n_in;
        double acc = b[o];
        for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
    return out;
}

namespace detail {
inline void check_same(const Matrix& a, const Matrix& b, const char* what) {
    if (a.channels() != b.channels() || a.steps() != b.steps()) {
        throw ShapeError(std::string(what) + ": shape mismatch");
    }
}
} // namespace detail

/// Mean squared error over all c*h elements.
inline double mse(const Matrix& pred, const Matrix& target) {
    detail::check_same(pred, target, "mse");
    const auto p = pred.flat();
    const auto t = target.flat();
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) acc += (p[k] - t[k]) * (p[k] - t[k]);
    return acc / static_cast<double>(p.size());
}

inline double mae(const Matrix& pred, const Matrix& target) {
    detail::check_same(pred, target, "mae");
    const auto p = pred.flat();
    const auto t = target.flat();
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) acc += std::abs(p[k] - t[k]);
    return acc / static_cast<double>(p.size());
}

/// Gradient of the batch loss with the model's parameter layout.
struct Gradient {
    std::vector<double> weights;
    std::vector<double> bias;
};

namespace detail {
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}
} // namespace detail

/// Batch loss (1/N) sum_n mse(predict(H_n), F_n) and its exact gradient.
/// Works one output row at a time so each weight row is read once per batch.
inline double loss_and_gradient(const LinearForecastModel& model, std::span<const WindowPair> batch,
                                Gradient* grad) {
    if (batch.empty()) throw ConfigError("loss_and_gradient: empty batch");
    const std::size_t n_in = model.inputs();
    const std::size_t n_out = model.outputs();
    for (const auto& w : batch) {
        if (w.history.channels() != model.channels() || w.history.steps() != model.context() ||
            w.future.channels() != model.channels() || w.future.steps() != model.horizon()) {
            throw ShapeError("loss_and_gradient: window shape does not match model");
        }
    }
    if (grad) {
        grad->weights.assign(n_out * n_in, 0.0);
        grad->bias.assign(n_out, 0.0);
    }
    const std::size_t B = batch.size();
    const double scale = 1.0 / (static_cast<double>(B) * static_cast<double>(n_out));
    const auto W = model.weights();
    const auto bias = model.bias();
    std::vector<double> g(B);
    double loss = 0.0;
    for (std::size_t o = 0; o < n_out; ++o) {
        const double* row = W.data() + o * n_in;
        double gb = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double r = bias[o] + detail::dot(row, batch[b].history.flat().data(), n_in) -
                             batch[b].future.flat()[o];
            loss += r * r;
            g[b] = 2.0 * r * scale;
            gb += g[b];
        }
        if (!grad) continue;
        grad->bias[o] = gb;
        double* grow = grad->weights.data() + o * n_in;
        for (std::size_t b = 0; b < B; ++b) {
            const double* x = batch[b].history.flat().data();
            const double gbv = g[b];
            for (std::size_t i = 0; i < n_in; ++i) grow[i] += gbv * x[i];
        }
    }
    return loss * scale;
}

struct TrainConfig {
    double learning_rate = 1e-4;
    double decay = 0.5;  // multiplicative, applied after every epoch
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
        if (!(decay > 0.0)) throw ConfigError("TrainConfig: decay must be > 0");
        if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    }
};

/// Maps a training index to the sample actually fed to the model. The
/// RandomSource is a child dedicated to that (epoch, position) slot.
using Augmenter = std::function<WindowPair(std::size_t index, RandomSource& rng)>;

struct TrainResult {
    LinearForecastModel model;
    std::vector<double> loss_trace;  // mean batch loss per epoch
};

/// Mini-batch SGD on the per-element MSE. Each epoch reshuffles the
/// windows and passes every index through the augmenter (identity when
/// empty) before the gradient step.
inline TrainResult train(LinearForecastModel model, std::span<const WindowPair> windows,
                         const Augmenter& augmenter, const TrainConfig& cfg) {
    cfg.validate();
    if (windows.empty()) throw ConfigError("train: empty training set");
    const std::size_t n = windows.size();
    RandomSource order_rng(cfg.seed);
    const RandomSource aug_root = RandomSource(cfg.seed).child(0xA5A5A5A5ULL);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    TrainResult result;
    double lr = cfg.learning_rate;
    Gradient grad;
    std::vector<WindowPair> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t s = n; s > 1; --s) std::swap(order[s - 1], order[order_rng.uniform_index(s)]);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k) {
                if (augmenter) {
                    RandomSource slot = aug_root.child(static_cast<std::uint64_t>(epoch) * n + k);
                    batch.push_back(augmenter(order[k], slot));
                } else {
                    batch.push_back(windows[order[k]]);
                }
            }
            const double loss = loss_and_gradient(model, batch, &grad);
            if (!std::isfinite(loss)) {
                throw TrainingDivergedError(epoch, "training diverged at epoch " + std::to_string(epoch));
            }
            auto w = model.weights();
            auto b = model.bias();
            for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * grad.weights[k];
            for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * grad.bias[k];
            epoch_loss += loss;
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);
        if (!std::isfinite(epoch_loss)) {
            throw TrainingDivergedError(epoch, "training diverged at epoch " + std::to_string(epoch));
        }
        result.loss_trace.push_back(epoch_loss);
        lr *= cfg.decay;
    }
    result.model = std::move(model);
    return result;
}

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
};

/// Mean per-window MSE and MAE over real (never augmented) windows.
inline Metrics evaluate(const LinearForecastModel& model, std::span<const WindowPair> windows) {
    if (windows.empty()) throw ConfigError("evaluate: empty test set");
    Metrics m;
    for (const auto& w : windows) {
        const Matrix pred = predict(model, w.history);
        m.mse += mse(pred, w.future);
        m.mae += mae(pred, w.future);
    }
    m.mse /= static_cast<double>(windows.size());
    m.mae /= static_cast<double>(windows.size());
    return m;
}

// Checkpoint container: JSON with a shape header and row-major parameters.

inline constexpr const char* kCheckpointFormat = "staug-linear-forecaster";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json to_json(const LinearForecastModel& m) {
    return {{"format", kCheckpointFormat},
            {"version", kCheckpointVersion},
            {"channels", m.channels()},
            {"context", m.context()},
            {"horizon", m.horizon()},
            {"weights", std::vector<double>(m.weights().begin(), m.weights().end())},
            {"bias", std::vector<double>(m.bias().begin(), m.bias().end())}};
}

inline LinearForecastModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != kCheckpointFormat) throw ParseError("checkpoint: unknown format");
    if (j.value("version", 0) != kCheckpointVersion) throw ParseError("checkpoint: unsupported version");
    LinearForecastModel m(j.at("channels").get<std::size_t>(), j.at("context").get<std::size_t>(),
                          j.at("horizon").get<std::size_t>());
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto b = j.at("bias").get<std::vector<double>>();
    if (w.size() != m.weights().size() || b.size() != m.bias().size()) {
        throw ParseError("checkpoint: parameter count does not match shape header");
    }
    std::copy(w.begin(), w.end(), m.weights().begin());
    std::copy(b.begin(), b.end(), m.bias().begin());
    return m;
}

inline void save_checkpoint(const LinearForecastModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint " + path);
    out << to_json(m).dump() << '\n';
}

inline LinearForecastModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read checkpoint " + path);
    try {
        return model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path + ": " + e.what());
    }
}

} // namespace staug
