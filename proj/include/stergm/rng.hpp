#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace stergm {

/// Mixes a base seed with a path of integers (replicate, step, phase, ...) into an
/// independent stream seed. Stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept;

/// Thin wrapper over mt19937_64 with platform-independent uniform draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer on [0, n) without modulo bias; n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Number of failures before the first success of a Bernoulli(p) sequence.
    std::uint64_t geometric_skip(double p);

    double normal();

    std::mt19937_64 &engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace stergm
