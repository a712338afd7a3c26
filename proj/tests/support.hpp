#pragma once

#include "ccme/null_model.hpp"
#include "ccme/wsbm.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace ccme::testing {

// Power-law degrees (density 1/x, mean sqrt(n), max 3 sqrt(n)) and s = d^1.5.
inline NullParams power_law_null(std::size_t n, double kappa, std::uint64_t seed) {
    const double k = std::sqrt(static_cast<double>(n));
    const double lo = power_law_lower_bound_for_mean(-1.0, k, 3.0 * k);
    NullParams p;
    p.degree = sample_truncated_power_law(-1.0, lo, 3.0 * k, n, seed);
    p.strength.resize(n);
    for (std::size_t u = 0; u < n; ++u)
        p.strength[u] = std::pow(p.degree[u], 1.5);
    p.kappa = kappa;
    return p;
}

inline double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x)
        s += v;
    return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x)
        s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

} // namespace ccme::testing
