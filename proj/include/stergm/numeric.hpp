#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stergm {

/// Distance from {0, 1} below which a probability is treated as a boundary value.
inline constexpr double kProbabilityBoundary = 1e-12;

/// log(p / (1 - p)). Throws BoundaryError for p within kProbabilityBoundary of 0 or 1,
/// DomainError outside [0, 1]. Values are never clamped.
double logit(double p);

/// 1 / (1 + exp(-x)), stable for large |x|; ilogit(-inf) == 0, ilogit(+inf) == 1.
double ilogit(double x) noexcept;

/// log(1 + exp(x)) without overflow.
double log1p_exp(double x) noexcept;

/// Correctly rounded floating-point summation (Shewchuk's non-overlapping partials).
/// The result does not depend on the order in which values are added, which lets two
/// different traversals of the same multiset of terms agree bit for bit.
class ExactSum {
public:
    void add(double x);
    double value() const;

private:
    std::vector<double> partials_;
};

double mean(std::span<const double> xs);

/// Unbiased sample variance; 0 for fewer than two values.
double sample_variance(std::span<const double> xs);

/// Effective sample size of an autocorrelated series using Geyer's initial monotone
/// positive sequence. Returns xs.size() for a constant series.
double effective_sample_size(std::span<const double> xs);

} // namespace stergm
