#include "stergm/numeric.hpp"

#include "stergm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace stergm {

double logit(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("logit: probability " + std::to_string(p) + " outside [0, 1]");
    }
    if (p < kProbabilityBoundary || p > 1.0 - kProbabilityBoundary) {
        throw BoundaryError("logit: probability " + std::to_string(p) +
                            " is on the boundary; log-odds would be infinite");
    }
    return std::log(p) - std::log1p(-p);
}

double ilogit(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log1p_exp(double x) noexcept {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

void ExactSum::add(double x) {
    std::size_t kept = 0;
    for (double y : partials_) {
        if (std::abs(x) < std::abs(y)) {
            std::swap(x, y);
        }
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) {
            partials_[kept++] = lo;
        }
        x = hi;
    }
    partials_.resize(kept);
    partials_.push_back(x);
}

double ExactSum::value() const {
    // Round the partials to nearest, as in Python's math.fsum.
    if (partials_.empty()) {
        return 0.0;
    }
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) {
            break;
        }
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        const double yr = x - hi;
        if (y == yr) {
            hi = x;
        }
    }
    return hi;
}

double mean(std::span<const double> xs) {
    if (xs.empty()) {
        return 0.0;
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) {
        return 0.0;
    }
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - m) * (x - m);
    }
    return ss / static_cast<double>(xs.size() - 1);
}

double effective_sample_size(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 4) {
        return static_cast<double>(n);
    }
    const double m = mean(xs);
    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) {
            s += (xs[i] - m) * (xs[i + lag] - m);
        }
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (c0 <= 0.0) {
        return static_cast<double>(n);
    }
    // Sum of adjacent-pair autocovariances, truncated at the first non-positive pair
    // and forced monotone non-increasing.
    double tau_sum = -c0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
        double pair = autocov(lag) + autocov(lag + 1);
        if (pair <= 0.0) {
            break;
        }
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau_sum += 2.0 * pair;
    }
    const double tau = std::max(tau_sum / c0, 1.0 / static_cast<double>(n));
    return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

} // namespace stergm
