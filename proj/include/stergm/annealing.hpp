#pragma once

#include "stergm/netcore.hpp"
#include "stergm/statistics.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace stergm {

struct AnnealConfig {
    std::size_t iterations = 200'000;
    double t_start = 1.0;
    double t_end = 1e-5;
    std::uint64_t seed = 1;
    /// Trace entry every this many iterations (0 disables the trace).
    std::size_t trace_every = 1000;
};

struct AnnealResult {
    NetworkState net;
    /// Sum over structural targets of ((value - target) / max(1, |target|))^2.
    double distance = 0.0;
    std::vector<double> achieved;
    std::size_t iterations = 0;
    std::vector<std::pair<std::size_t, double>> trace;
};

/// Simulated annealing over single-dyad toggles with geometric cooling; returns the best
/// network seen. `targets` holds one value per structural term of `spec`, in `spec`'s
/// normalization. With `mean_age`, tie ages are drawn from the geometric law of that mean.
AnnealResult anneal_network(const ActorTable &actors, const DyadSpace &space, const TargetSpec &spec,
                            const std::vector<double> &targets, const AnnealConfig &config,
                            std::optional<double> mean_age = std::nullopt);

} // namespace stergm
