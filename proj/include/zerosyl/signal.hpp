#pragma once

// 1-D signal primitives for boundary detection. All take Eigen expressions of
// any scalar type; norm and cosine signals are accumulated in double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "zerosyl/error.hpp"

namespace zerosyl {

/// Per-frame Euclidean norm of a T x D matrix.
template <typename Derived>
Eigen::VectorXd norm_signal(const Eigen::MatrixBase<Derived>& frames) {
    return frames.template cast<double>().rowwise().norm();
}

/// 1 - cos(h_t, h_{t+1}) for t in [0, T-1). A frame with zero norm makes the
/// distance 1 (treated as orthogonal); such pairs are added to *zero_norm_pairs.
template <typename Derived>
Eigen::VectorXd cosine_distance_signal(const Eigen::MatrixBase<Derived>& frames,
                                       std::size_t* zero_norm_pairs = nullptr) {
    const Eigen::Index t = frames.rows();
    if (t < 2)
        throw ValidationError("cosine distance signal needs at least 2 frames");
    const Eigen::MatrixXd h = frames.template cast<double>();
    const Eigen::VectorXd norms = h.rowwise().norm();
    Eigen::VectorXd out(t - 1);
    for (Eigen::Index i = 0; i + 1 < t; ++i) {
        if (norms[i] == 0.0 || norms[i + 1] == 0.0) {
            out[i] = 1.0;
            if (zero_norm_pairs)
                ++*zero_norm_pairs;
            continue;
        }
        const double cosine = h.row(i).dot(h.row(i + 1)) / (norms[i] * norms[i + 1]);
        out[i] = std::clamp(1.0 - cosine, 0.0, 2.0);
    }
    return out;
}

/// Centered moving average; near the edges the window shrinks to the valid samples.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> smooth(const Eigen::MatrixBase<Derived>& signal,
                                                                  int window) {
    using Scalar = typename Derived::Scalar;
    if (window < 1 || window % 2 == 0)
        throw ValidationError("smoothing window must be odd and >= 1, got " + std::to_string(window));
    const Eigen::Index n = signal.size();
    const Eigen::Index half = window / 2;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
        Scalar sum = 0;
        for (Eigen::Index j = lo; j <= hi; ++j)
            sum += signal(j);
        out[i] = sum / static_cast<Scalar>(hi - lo + 1);
    }
    return out;
}

template <typename Scalar>
struct Peak {
    Eigen::Index index = 0;
    Scalar prominence = 0;

    friend bool operator==(const Peak&, const Peak&) = default;
};

/// Interior local maxima. A plateau counts once, at its leftmost sample, when
/// both outer neighbours are strictly lower. Edge samples are never peaks.
template <typename Derived>
std::vector<Eigen::Index> local_maxima(const Eigen::MatrixBase<Derived>& signal) {
    const Eigen::Index n = signal.size();
    std::vector<Eigen::Index> peaks;
    Eigen::Index i = 1;
    while (i + 1 < n) {
        if (signal(i - 1) < signal(i)) {
            Eigen::Index end = i;
            while (end + 1 < n && signal(end + 1) == signal(i))
                ++end;
            if (end + 1 < n && signal(end + 1) < signal(i))
                peaks.push_back(i);
            i = end + 1;
        } else {
            ++i;
        }
    }
    return peaks;
}

/// Topographic prominence of every local maximum: height minus the higher of
/// the two bases, where a base is the minimum between the peak and the nearest
/// strictly higher sample (or the edge) on that side.
///
/// Nearest-higher indices come from a monotonic stack and range minima from a
/// sparse table, so the cost is O(n log n) regardless of peak count.
template <typename Derived>
std::vector<Peak<typename Derived::Scalar>> peak_prominences(const Eigen::MatrixBase<Derived>& signal) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = signal.size();
    std::vector<Peak<Scalar>> result;
    if (n < 3)
        return result;

    const std::vector<Eigen::Index> peaks = local_maxima(signal);
    if (peaks.empty())
        return result;

    // prev_higher[i]: last k < i with x[k] > x[i], or -1. next_higher: first k > i, or n.
    std::vector<Eigen::Index> prev_higher(n), next_higher(n);
    std::vector<Eigen::Index> stack;
    stack.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        while (!stack.empty() && signal(stack.back()) <= signal(i))
            stack.pop_back();
        prev_higher[i] = stack.empty() ? -1 : stack.back();
        stack.push_back(i);
    }
    stack.clear();
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        while (!stack.empty() && signal(stack.back()) <= signal(i))
            stack.pop_back();
        next_higher[i] = stack.empty() ? n : stack.back();
        stack.push_back(i);
    }

    // Sparse table of range minima.
    std::vector<std::vector<Scalar>> table;
    table.emplace_back(n);
    for (Eigen::Index i = 0; i < n; ++i)
        table[0][i] = signal(i);
    for (std::size_t level = 1; (Eigen::Index{1} << level) <= n; ++level) {
        const Eigen::Index span = Eigen::Index{1} << level;
        const auto& prev = table[level - 1];
        std::vector<Scalar> cur(n - span + 1);
        for (Eigen::Index i = 0; i + span <= n; ++i)
            cur[i] = std::min(prev[i], prev[i + span / 2]);
        table.push_back(std::move(cur));
    }
    const auto range_min = [&](Eigen::Index lo, Eigen::Index hi) {
        std::size_t level = 0;
        while ((Eigen::Index{2} << level) <= hi - lo + 1)
            ++level;
        return std::min(table[level][lo], table[level][hi - (Eigen::Index{1} << level) + 1]);
    };

    result.reserve(peaks.size());
    for (const Eigen::Index p : peaks) {
        const Scalar left_base = range_min(prev_higher[p] + 1, p);
        const Scalar right_base = range_min(p, next_higher[p] - 1);
        result.push_back({p, signal(p) - std::max(left_base, right_base)});
    }
    return result;
}

/// Population standard deviation.
template <typename Derived>
double population_std(const Eigen::MatrixBase<Derived>& signal) {
    const Eigen::Index n = signal.size();
    if (n == 0)
        return 0.0;
    const Eigen::VectorXd x = signal.template cast<double>();
    const double mean = x.mean();
    return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n));
}

} // namespace zerosyl
