#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "edgelab/types.hpp"

namespace edgelab {

struct KsResult {
    Scalar statistic = 0;
    Index n1 = 0, n2 = 0;

    /// Asymptotic two-sample critical value c(alpha) sqrt((n+m)/(nm)) with
    /// c(alpha) = sqrt(-ln(alpha/2)/2).
    Scalar critical(Scalar alpha) const {
        Scalar c = std::sqrt(-0.5 * std::log(0.5 * alpha));
        return c * std::sqrt(static_cast<Scalar>(n1 + n2) /
                             (static_cast<Scalar>(n1) * static_cast<Scalar>(n2)));
    }
};

/// Classical two-sample Kolmogorov-Smirnov statistic sup |F_A - F_B|.
inline KsResult ks_two_sample(std::vector<Scalar> a, std::vector<Scalar> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const Index n1 = static_cast<Index>(a.size());
    const Index n2 = static_cast<Index>(b.size());
    Index i = 0, j = 0;
    Scalar d = 0;
    while (i < n1 && j < n2) {
        Scalar x = std::min(a[i], b[j]);
        while (i < n1 && a[i] <= x) ++i;
        while (j < n2 && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<Scalar>(i) / n1 - static_cast<Scalar>(j) / n2));
    }
    return {d, n1, n2};
}

inline Scalar mean(const std::vector<Scalar>& v) {
    Scalar s = 0;
    for (Scalar x : v) s += x;
    return s / static_cast<Scalar>(v.size());
}

inline Scalar variance(const std::vector<Scalar>& v) {
    Scalar m = mean(v);
    Scalar s = 0;
    for (Scalar x : v) s += (x - m) * (x - m);
    return s / static_cast<Scalar>(v.size() - 1);
}

struct LinearFit {
    Scalar slope = 0;
    Scalar intercept = 0;
};

inline LinearFit least_squares(const std::vector<Scalar>& xs, const std::vector<Scalar>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("least_squares: need matching samples of size >= 2");
    Scalar n = static_cast<Scalar>(xs.size());
    Scalar sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

/// Least-squares coefficient of y ~ c f(x) through the origin.
inline Scalar fit_through_origin(const std::vector<Scalar>& fx, const std::vector<Scalar>& ys) {
    if (fx.size() != ys.size() || fx.empty())
        throw std::invalid_argument("fit_through_origin: need matching nonempty samples");
    Scalar num = 0, den = 0;
    for (std::size_t i = 0; i < fx.size(); ++i) {
        num += fx[i] * ys[i];
        den += fx[i] * fx[i];
    }
    if (den == 0) throw std::invalid_argument("fit_through_origin: degenerate basis");
    return num / den;
}

} // namespace edgelab
