#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace frontstab {

/// Natural cubic splines on a uniform grid for a bundle of channels sharing
/// the same nodes. Channel values are stored node-major so one evaluation
/// reads two contiguous rows.
template <typename Scalar>
class UniformSplineBundle {
public:
    UniformSplineBundle() = default;

    /// values[node * channels + ch]
    UniformSplineBundle(double x0, double h, int nodes, int channels, std::vector<Scalar> values)
        : x0_(x0), h_(h), nodes_(nodes), channels_(channels), y_(std::move(values)) {
        if (nodes < 2 || channels < 1 || !(h > 0.0) ||
            y_.size() != static_cast<std::size_t>(nodes) * channels) {
            throw std::invalid_argument("UniformSplineBundle: inconsistent sizes");
        }
        solve_second_derivatives();
    }

    [[nodiscard]] double x_min() const { return x0_; }
    [[nodiscard]] double step() const { return h_; }
    [[nodiscard]] double x_max() const { return x0_ + h_ * (nodes_ - 1); }
    [[nodiscard]] int channels() const { return channels_; }
    [[nodiscard]] int nodes() const { return nodes_; }
    [[nodiscard]] const std::vector<Scalar>& node_values() const { return y_; }

    /// Writes all channels at x into out[0..channels). x is clamped to the node range.
    void eval(double x, Scalar* out) const {
        double t = (x - x0_) / h_;
        t = std::clamp(t, 0.0, static_cast<double>(nodes_ - 1));
        int i = static_cast<int>(std::floor(t));
        if (i >= nodes_ - 1) i = nodes_ - 2;
        const double b = t - i;
        const double a = 1.0 - b;
        const double ca = (a * a * a - a) * h_ * h_ / 6.0;
        const double cb = (b * b * b - b) * h_ * h_ / 6.0;
        const Scalar* y0 = &y_[static_cast<std::size_t>(i) * channels_];
        const Scalar* y1 = y0 + channels_;
        const Scalar* m0 = &m_[static_cast<std::size_t>(i) * channels_];
        const Scalar* m1 = m0 + channels_;
        for (int c = 0; c < channels_; ++c) {
            out[c] = a * y0[c] + b * y1[c] + ca * m0[c] + cb * m1[c];
        }
    }

    [[nodiscard]] Scalar eval_channel(double x, int channel) const {
        std::vector<Scalar> tmp(static_cast<std::size_t>(channels_));
        eval(x, tmp.data());
        return tmp[static_cast<std::size_t>(channel)];
    }

private:
    void solve_second_derivatives() {
        // Natural end conditions: M_0 = M_{n-1} = 0; tridiagonal (1,4,1) system inside.
        m_.assign(y_.size(), Scalar{});
        const int n = nodes_;
        if (n < 3) return;
        std::vector<double> cprime(static_cast<std::size_t>(n), 0.0);
        std::vector<Scalar> d(y_.size(), Scalar{});
        const double s = 6.0 / (h_ * h_);
        for (int i = 1; i < n - 1; ++i) {
            const double denom = 4.0 - (i > 1 ? cprime[static_cast<std::size_t>(i - 1)] : 0.0);
            cprime[static_cast<std::size_t>(i)] = 1.0 / denom;
            for (int c = 0; c < channels_; ++c) {
                const Scalar rhs = s * (y_[idx(i + 1, c)] - 2.0 * y_[idx(i, c)] + y_[idx(i - 1, c)]);
                const Scalar prev = i > 1 ? d[idx(i - 1, c)] : Scalar{};
                d[idx(i, c)] = (rhs - prev) / denom;
            }
        }
        for (int i = n - 2; i >= 1; --i) {
            for (int c = 0; c < channels_; ++c) {
                const Scalar next = i < n - 2 ? m_[idx(i + 1, c)] : Scalar{};
                m_[idx(i, c)] = d[idx(i, c)] - cprime[static_cast<std::size_t>(i)] * next;
            }
        }
    }

    [[nodiscard]] std::size_t idx(int node, int c) const {
        return static_cast<std::size_t>(node) * channels_ + c;
    }

    double x0_ = 0.0;
    double h_ = 1.0;
    int nodes_ = 0;
    int channels_ = 0;
    std::vector<Scalar> y_;
    std::vector<Scalar> m_;
};

}  // namespace frontstab
