#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "staug/errors.hpp"

namespace staug {

/// Natural cubic spline (zero second derivative at both ends) through
/// strictly increasing knots.
class NaturalCubicSpline {
public:
    NaturalCubicSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) {
            throw ConfigError("NaturalCubicSpline: need >= 2 knots with matching values");
        }
        for (std::size_t i = 1; i < n; ++i) {
            if (!(x_[i] > x_[i - 1])) throw ConfigError("NaturalCubicSpline: knots must strictly increase");
        }
        m_.assign(n, 0.0);
        if (n == 2) return;

        // Tridiagonal system for interior second derivatives, solved by the Thomas algorithm.
        const std::size_t k = n - 2;
        std::vector<double> diag(k), upper(k), rhs(k);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        for (std::size_t i = 1; i < k; ++i) {
            const double lower = x_[i + 1] - x_[i];  // sub-diagonal of row i equals h_{i}
            const double f = lower / diag[i - 1];
            diag[i] -= f * upper[i - 1];
            rhs[i] -= f * rhs[i - 1];
        }
        m_[k] = rhs[k - 1] / diag[k - 1];
        for (std::size_t i = k - 1; i >= 1; --i) {
            m_[i] = (rhs[i - 1] - upper[i - 1] * m_[i + 1]) / diag[i - 1];
        }
    }

    double operator()(double t) const {
        std::size_t i = segment(t);
        const double h = x_[i + 1] - x_[i];
        // Weights of the left and right knot; exact at the knots themselves.
        const double A = (x_[i + 1] - t) / h;
        const double B = (t - x_[i]) / h;
        return A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * (h * h) / 6.0;
    }

    const std::vector<double>& second_derivatives() const noexcept { return m_; }

private:
    std::size_t segment(double t) const {
        // Clamp to the outer segments for extrapolation.
        if (t <= x_.front()) return 0;
        if (t >= x_[x_.size() - 2]) return x_.size() - 2;
        std::size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (x_[mid] <= t) lo = mid; else hi = mid;
        }
        return lo;
    }

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;
};

} // namespace staug
