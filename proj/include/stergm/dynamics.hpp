#pragma once

#include "stergm/netcore.hpp"
#include "stergm/rng.hpp"
#include "stergm/statistics.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace stergm {

/// A generative term with its coefficient. Fixed coefficients are held out of fitting.
struct PhaseTerm {
    StatisticTerm term;
    double theta = 0.0;
    bool fixed = false;
};

/// Formation and dissolution term lists. With `size_offset`, formation log-odds gain
/// log(1/n) per tie, n being the active actor count at the start of the step.
struct ModelSpec {
    std::vector<PhaseTerm> formation;
    std::vector<PhaseTerm> dissolution;
    bool size_offset = false;
    DyadSpace dyad_space;

    std::vector<StatisticTerm> formation_terms() const;
    std::vector<StatisticTerm> dissolution_terms() const;
    std::vector<double> formation_theta() const;
    std::vector<double> dissolution_theta() const;

    /// Free coefficients, formation first.
    std::size_t free_dim() const;
    std::vector<double> free_theta() const;
    void set_free_theta(std::span<const double> theta);
    /// "formation.<term>" / "dissolution.<term>" for each free coefficient.
    std::vector<std::string> free_names() const;

    /// True when every generative term is dyad-level in both phases.
    bool dyad_independent() const;
};

enum class SamplerMode { automatic, exact, mcmc };

struct SamplerConfig {
    SamplerMode mode = SamplerMode::automatic;
    /// Metropolis-Hastings proposals per phase; 0 means 10 times the toggleable set size.
    std::size_t proposals_per_phase = 0;
};

/// Samples the two phases of one step for a fixed model and actor table.
class StepEngine {
public:
    StepEngine(const ModelSpec &model, const ActorTable &actors, SamplerConfig sampler = {});

    /// Re-reads actor features and n after the table changed.
    void refresh(const ActorTable &actors);
    /// Replaces the free coefficients.
    void set_free_theta(std::span<const double> theta);

    const ModelSpec &model() const noexcept { return model_; }
    const ActorTable &actors() const noexcept { return *actors_; }
    const StatEvaluator &formation_stats() const noexcept { return formation_; }
    const StatEvaluator &dissolution_stats() const noexcept { return dissolution_; }

    bool formation_exact() const noexcept { return formation_exact_; }
    bool dissolution_exact() const noexcept { return dissolution_exact_; }

    /// Ties added from the empty dyads of `prev`, in canonical order.
    std::vector<Dyad> formation_phase(const NetworkState &prev, Rng &rng) const;
    /// Ties removed from `prev`, in canonical order.
    std::vector<Dyad> dissolution_phase(const NetworkState &prev, Rng &rng) const;

    /// Both phases with independent substreams of `step_seed`.
    PhaseOutcome sample_step(const NetworkState &prev, std::uint64_t step_seed) const;

    /// Formation log-odds of an empty dyad (dyad-independent formation only).
    double formation_log_odds(Dyad d) const;
    /// Survival log-odds of a tie (dyad-independent dissolution only).
    double dissolution_log_odds(Dyad d) const;

private:
    std::vector<Dyad> formation_exact_path(const NetworkState &prev, Rng &rng) const;
    std::vector<Dyad> formation_by_class(const NetworkState &prev, Rng &rng) const;
    std::vector<Dyad> formation_mcmc(const NetworkState &prev, Rng &rng) const;
    std::vector<Dyad> dissolution_mcmc(const NetworkState &prev, Rng &rng) const;
    void configure();

    ModelSpec model_;
    const ActorTable *actors_;
    SamplerConfig sampler_;
    StatEvaluator formation_;
    StatEvaluator dissolution_;
    std::vector<double> theta_f_;
    std::vector<double> theta_d_;
    bool formation_exact_ = true;
    bool dissolution_exact_ = true;
};

/// theta . delta, skipping zero entries so infinite coefficients act as hard constraints.
/// ConfigError when opposite infinities meet.
double linear_predictor(std::span<const double> theta, std::span<const double> delta);

std::vector<Dyad> formation_phase(const NetworkState &prev, const ActorTable &actors,
                                  const ModelSpec &model, Rng &rng);
std::vector<Dyad> dissolution_phase(const NetworkState &prev, const ActorTable &actors,
                                    const ModelSpec &model, Rng &rng);
NetworkState step(const NetworkState &prev, const ActorTable &actors, const ModelSpec &model,
                  std::uint64_t step_seed);

/// Seed of step `step_index` of replicate `replicate`.
std::uint64_t step_seed(std::uint64_t chain_seed, std::size_t replicate, std::size_t step_index);

/// One replicate chain owning its network state.
class Chain {
public:
    Chain(const ModelSpec &model, const ActorTable &actors, NetworkState init, std::uint64_t seed,
          std::size_t replicate = 0, SamplerConfig sampler = {});

    PhaseOutcome step();
    void advance(std::size_t steps);

    const NetworkState &state() const noexcept { return state_; }
    std::size_t steps_taken() const noexcept { return steps_; }
    StepEngine &engine() noexcept { return engine_; }
    const StepEngine &engine() const noexcept { return engine_; }

private:
    StepEngine engine_;
    NetworkState state_;
    std::uint64_t seed_;
    std::size_t replicate_;
    std::size_t steps_ = 0;
};

struct ChainConfig {
    std::size_t burnin_steps = 0;
    std::size_t interval_steps = 1;
    /// Recorded samples per replicate.
    std::size_t samples = 1;
    std::size_t num_replicates = 1;
    std::uint64_t rng_seed = 1;
    SamplerConfig sampler;
    unsigned threads = 1;

    void validate() const;
};

struct ChainRun {
    std::vector<std::string> names;
    /// [replicate][sample] -> target vector.
    std::vector<std::vector<std::vector<double>>> replicates;
    std::vector<NetworkState> final_states;
};

/// Runs every replicate from `init`, recording the targets after burn-in at each interval.
/// Undefined duration targets are recorded as NaN.
ChainRun run_chain(const NetworkState &init, const ActorTable &actors, const ModelSpec &model,
                   const ChainConfig &config, const TargetSpec &spec);

/// Runs `count` independent jobs on up to `threads` workers; job i must only touch slot i.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)> &job);

} // namespace stergm
