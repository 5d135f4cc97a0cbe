#include "stergm/annealing.hpp"

#include "stergm/rng.hpp"

#include <algorithm>
#include <cmath>

namespace stergm {

namespace {

double scaled_distance(const std::vector<double> &value, const std::vector<double> &target) {
    double d = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) {
        const double r = (value[k] - target[k]) / std::max(1.0, std::abs(target[k]));
        d += r * r;
    }
    return d;
}

} // namespace

AnnealResult anneal_network(const ActorTable &actors, const DyadSpace &space, const TargetSpec &spec,
                            const std::vector<double> &targets, const AnnealConfig &config,
                            std::optional<double> mean_age) {
    if (targets.size() != spec.terms.size()) {
        throw ContractError("annealing needs one target per structural term");
    }
    if (!(config.t_start > 0.0 && config.t_end > 0.0)) {
        throw ConfigError("annealing temperatures must be positive");
    }
    const StatEvaluator eval(actors, spec.terms);
    const std::size_t k = eval.size();
    std::vector<double> scale(k, 1.0);
    if (spec.normalization == Normalization::per_capita_by_group) {
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t denom = spec.terms[j].group_specific() ? eval.group_size(j) : eval.n_active();
            scale[j] = denom == 0 ? 0.0 : 1.0 / static_cast<double>(denom);
        }
    }
    auto normalize = [&](const std::vector<double> &raw) {
        std::vector<double> out(k);
        for (std::size_t j = 0; j < k; ++j) {
            out[j] = raw[j] * scale[j];
        }
        return out;
    };

    Rng rng(derive_seed(config.seed, {0x616e6e}));
    NetworkState net;
    std::vector<double> raw = eval.evaluate(net);
    double current = scaled_distance(normalize(raw), targets);

    AnnealResult best;
    best.net = net;
    best.distance = current;
    best.achieved = normalize(raw);

    const std::size_t dyads = space.size(actors);
    std::vector<double> delta(k);
    std::vector<double> proposal(k);
    for (std::size_t it = 0; it < config.iterations && best.distance > 0.0 && dyads > 0; ++it) {
        best.iterations = it + 1;
        const double frac = static_cast<double>(it) / static_cast<double>(config.iterations);
        const double temperature = config.t_start * std::pow(config.t_end / config.t_start, frac);
        const Dyad d = space.sample(actors, rng);
        eval.change(net, d, delta);
        const double sign = net.has_tie(d) ? -1.0 : 1.0;
        for (std::size_t j = 0; j < k; ++j) {
            proposal[j] = raw[j] + sign * delta[j];
        }
        const double next = scaled_distance(normalize(proposal), targets);
        const double diff = next - current;
        if (diff <= 0.0 || rng.uniform() < std::exp(-diff / temperature)) {
            if (sign > 0.0) {
                net.add_tie(d);
            } else {
                net.remove_tie(d);
            }
            raw = proposal;
            current = next;
            if (current < best.distance) {
                best.distance = current;
                best.net = net;
            }
        }
        if (config.trace_every > 0 && it % config.trace_every == 0) {
            best.trace.emplace_back(it, current);
        }
    }

    // Recompute from scratch so the reported values carry no accumulated rounding.
    best.achieved = normalize(eval.evaluate(best.net));
    best.distance = scaled_distance(best.achieved, targets);

    if (mean_age) {
        if (!(*mean_age >= 1.0)) {
            throw ConfigError("mean tie age must be at least one step");
        }
        NetworkState aged(best.net.clock());
        Rng age_rng(derive_seed(config.seed, {0x616765}));
        const double p = 1.0 / *mean_age;
        for (const auto &[d, onset] : best.net.ties()) {
            const auto age = static_cast<int>(std::min<std::uint64_t>(age_rng.geometric_skip(p), 1'000'000)) + 1;
            aged.add_tie(d, aged.clock() - age + 1);
        }
        best.net = std::move(aged);
    }
    return best;
}

} // namespace stergm
