#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace ter {

// Log-domain arithmetic for the generative scorer. Exact zeros are kept as
// -inf rather than being floored, so absorbing factors stay absorbing.

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// log(sum(exp(xs))) with max shift; empty input and all -inf give -inf.
inline double log_sum_exp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs)
        if (x > m) m = x;
    if (m == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

}  // namespace ter
