#include "stergm/dynamics.hpp"

#include "stergm/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

namespace stergm {

namespace {

std::vector<StatisticTerm> terms_of(const std::vector<PhaseTerm> &phase) {
    std::vector<StatisticTerm> out;
    out.reserve(phase.size());
    for (const PhaseTerm &p : phase) {
        out.push_back(p.term);
    }
    return out;
}

std::vector<double> thetas_of(const std::vector<PhaseTerm> &phase) {
    std::vector<double> out;
    out.reserve(phase.size());
    for (const PhaseTerm &p : phase) {
        out.push_back(p.theta);
    }
    return out;
}

} // namespace

std::vector<StatisticTerm> ModelSpec::formation_terms() const { return terms_of(formation); }
std::vector<StatisticTerm> ModelSpec::dissolution_terms() const { return terms_of(dissolution); }
std::vector<double> ModelSpec::formation_theta() const { return thetas_of(formation); }
std::vector<double> ModelSpec::dissolution_theta() const { return thetas_of(dissolution); }

std::size_t ModelSpec::free_dim() const {
    auto free = [](const PhaseTerm &p) { return !p.fixed; };
    return static_cast<std::size_t>(std::count_if(formation.begin(), formation.end(), free) +
                                    std::count_if(dissolution.begin(), dissolution.end(), free));
}

std::vector<double> ModelSpec::free_theta() const {
    std::vector<double> out;
    for (const auto *phase : {&formation, &dissolution}) {
        for (const PhaseTerm &p : *phase) {
            if (!p.fixed) {
                out.push_back(p.theta);
            }
        }
    }
    return out;
}

void ModelSpec::set_free_theta(std::span<const double> theta) {
    if (theta.size() != free_dim()) {
        throw ContractError("expected " + std::to_string(free_dim()) + " free coefficients, got " +
                            std::to_string(theta.size()));
    }
    std::size_t k = 0;
    for (auto *phase : {&formation, &dissolution}) {
        for (PhaseTerm &p : *phase) {
            if (!p.fixed) {
                p.theta = theta[k++];
            }
        }
    }
}

std::vector<std::string> ModelSpec::free_names() const {
    std::vector<std::string> out;
    for (const PhaseTerm &p : formation) {
        if (!p.fixed) {
            out.push_back("formation." + p.term.name());
        }
    }
    for (const PhaseTerm &p : dissolution) {
        if (!p.fixed) {
            out.push_back("dissolution." + p.term.name());
        }
    }
    return out;
}

bool ModelSpec::dyad_independent() const {
    for (const auto *phase : {&formation, &dissolution}) {
        for (const PhaseTerm &p : *phase) {
            if (!p.term.dyad_level()) {
                return false;
            }
        }
    }
    return true;
}

double linear_predictor(std::span<const double> theta, std::span<const double> delta) {
    double eta = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        if (delta[k] != 0.0) {
            eta += theta[k] * delta[k];
        }
    }
    if (std::isnan(eta)) {
        throw ConfigError("coefficients of opposite infinite sign apply to the same dyad");
    }
    return eta;
}

// ---------------------------------------------------------------------------
// StepEngine

StepEngine::StepEngine(const ModelSpec &model, const ActorTable &actors, SamplerConfig sampler)
    : model_(model), actors_(&actors), sampler_(sampler),
      formation_(actors, model.formation_terms()), dissolution_(actors, model.dissolution_terms()),
      theta_f_(model.formation_theta()), theta_d_(model.dissolution_theta()) {
    configure();
}

void StepEngine::configure() {
    const bool f_indep = formation_.dyad_independent();
    const bool d_indep = dissolution_.dyad_independent();
    if (sampler_.mode == SamplerMode::exact && !(f_indep && d_indep)) {
        throw UnsupportedModelError("exact sampling requires dyad-independent phases");
    }
    formation_exact_ = sampler_.mode != SamplerMode::mcmc && f_indep;
    dissolution_exact_ = sampler_.mode != SamplerMode::mcmc && d_indep;
}

void StepEngine::refresh(const ActorTable &actors) {
    actors_ = &actors;
    formation_.refresh(actors);
    dissolution_.refresh(actors);
}

void StepEngine::set_free_theta(std::span<const double> theta) {
    model_.set_free_theta(theta);
    theta_f_ = model_.formation_theta();
    theta_d_ = model_.dissolution_theta();
}

double StepEngine::formation_log_odds(Dyad d) const {
    std::vector<double> delta(formation_.size());
    for (std::size_t k = 0; k < delta.size(); ++k) {
        delta[k] = formation_.dyad_value(k, d);
    }
    double eta = linear_predictor(theta_f_, delta);
    if (model_.size_offset) {
        eta += formation_.log_inv_n();
    }
    return eta;
}

double StepEngine::dissolution_log_odds(Dyad d) const {
    std::vector<double> delta(dissolution_.size());
    for (std::size_t k = 0; k < delta.size(); ++k) {
        delta[k] = dissolution_.dyad_value(k, d);
    }
    return linear_predictor(theta_d_, delta);
}

std::vector<Dyad> StepEngine::formation_phase(const NetworkState &prev, Rng &rng) const {
    if (!formation_exact_) {
        return formation_mcmc(prev, rng);
    }
    if (formation_.categorical_only() && model_.dyad_space.kind() != DyadSpaceKind::explicit_list) {
        return formation_by_class(prev, rng);
    }
    return formation_exact_path(prev, rng);
}

std::vector<Dyad> StepEngine::formation_exact_path(const NetworkState &prev, Rng &rng) const {
    std::vector<Dyad> formed;
    model_.dyad_space.for_each(*actors_, [&](Dyad d) {
        if (prev.has_tie(d)) {
            return;
        }
        if (rng.bernoulli(ilogit(formation_log_odds(d)))) {
            formed.push_back(d);
        }
    });
    return formed;
}

std::vector<Dyad> StepEngine::formation_by_class(const NetworkState &prev, Rng &rng) const {
    // Actors sharing (sex, race) have identical categorical dyad values, so every pair of
    // classes has one formation probability. Within a class pair, positions of Bernoulli
    // successes are reached by geometric skips; hits on existing ties are dropped, which
    // leaves each empty dyad forming with exactly its own probability.
    std::map<std::pair<int, int>, std::vector<ActorId>> classes;
    for (const Actor &a : actors_->records()) {
        if (a.active) {
            classes[{a.sex, a.race}].push_back(a.id);
        }
    }
    std::vector<const std::vector<ActorId> *> groups;
    for (const auto &[key, ids] : classes) {
        groups.push_back(&ids);
    }
    const bool bipartite = model_.dyad_space.kind() == DyadSpaceKind::bipartite_by_attribute;
    const Attribute battr = model_.dyad_space.attribute();

    std::vector<Dyad> formed;
    for (std::size_t ga = 0; ga < groups.size(); ++ga) {
        for (std::size_t gb = ga; gb < groups.size(); ++gb) {
            const std::vector<ActorId> &A = *groups[ga];
            const std::vector<ActorId> &B = *groups[gb];
            const bool same = ga == gb;
            if (same && A.size() < 2) {
                continue;
            }
            const Actor &ra = actors_->at(A.front());
            const Actor &rb = actors_->at(same ? A[1] : B.front());
            if (bipartite && ra.attribute(battr) == rb.attribute(battr)) {
                continue;
            }
            const double p = ilogit(formation_log_odds(Dyad::of(ra.id, rb.id)));
            if (p <= 0.0) {
                continue;
            }
            // Row r lists partners A[r+1..] (same class) or all of B.
            std::size_t row = 0;
            std::size_t col = 0; // offset within the row
            auto row_len = [&](std::size_t r) { return same ? A.size() - r - 1 : B.size(); };
            const std::size_t rows = same ? A.size() - 1 : A.size();
            std::uint64_t skip = rng.geometric_skip(p);
            for (;;) {
                while (row < rows && skip >= row_len(row) - col) {
                    skip -= row_len(row) - col;
                    ++row;
                    col = 0;
                }
                if (row >= rows) {
                    break;
                }
                col += static_cast<std::size_t>(skip);
                const ActorId u = A[row];
                const ActorId v = same ? A[row + 1 + col] : B[col];
                const Dyad d = Dyad::of(u, v);
                if (!prev.has_tie(d)) {
                    formed.push_back(d);
                }
                ++col;
                skip = rng.geometric_skip(p);
            }
        }
    }
    std::sort(formed.begin(), formed.end());
    return formed;
}

std::vector<Dyad> StepEngine::dissolution_phase(const NetworkState &prev, Rng &rng) const {
    if (!dissolution_exact_) {
        return dissolution_mcmc(prev, rng);
    }
    std::vector<Dyad> dissolved;
    for (const auto &[d, onset] : prev.ties()) {
        if (!rng.bernoulli(ilogit(dissolution_log_odds(d)))) {
            dissolved.push_back(d);
        }
    }
    return dissolved;
}

namespace {

bool mh_accept(double log_ratio, Rng &rng) {
    if (log_ratio >= 0.0) {
        return true;
    }
    return rng.uniform() < std::exp(log_ratio);
}

} // namespace

std::vector<Dyad> StepEngine::formation_mcmc(const NetworkState &prev, Rng &rng) const {
    const std::size_t space = model_.dyad_space.size(*actors_);
    const std::size_t toggleable = space - std::min(space, prev.edge_count());
    if (toggleable == 0) {
        return {};
    }
    const std::size_t proposals =
        sampler_.proposals_per_phase > 0 ? sampler_.proposals_per_phase : 10 * toggleable;
    NetworkState work = prev;
    std::vector<double> delta(formation_.size());
    const double offset = model_.size_offset ? formation_.log_inv_n() : 0.0;
    for (std::size_t s = 0; s < proposals; ++s) {
        Dyad d;
        do {
            d = model_.dyad_space.sample(*actors_, rng);
        } while (prev.has_tie(d));
        formation_.change(work, d, delta);
        const double eta = linear_predictor(theta_f_, delta) + offset;
        const bool on = work.has_tie(d);
        if (mh_accept(on ? -eta : eta, rng)) {
            if (on) {
                work.remove_tie(d);
            } else {
                work.add_tie(d);
            }
        }
    }
    std::vector<Dyad> formed;
    for (const auto &[d, onset] : work.ties()) {
        if (!prev.has_tie(d)) {
            formed.push_back(d);
        }
    }
    return formed;
}

std::vector<Dyad> StepEngine::dissolution_mcmc(const NetworkState &prev, Rng &rng) const {
    if (prev.empty()) {
        return {};
    }
    std::vector<Dyad> extant;
    extant.reserve(prev.edge_count());
    for (const auto &[d, onset] : prev.ties()) {
        extant.push_back(d);
    }
    const std::size_t proposals =
        sampler_.proposals_per_phase > 0 ? sampler_.proposals_per_phase : 10 * extant.size();
    NetworkState work = prev;
    std::vector<double> delta(dissolution_.size());
    for (std::size_t s = 0; s < proposals; ++s) {
        const Dyad d = extant[rng.below(extant.size())];
        dissolution_.change(work, d, delta);
        const double eta = linear_predictor(theta_d_, delta);
        const bool on = work.has_tie(d);
        if (mh_accept(on ? -eta : eta, rng)) {
            if (on) {
                work.remove_tie(d);
            } else {
                work.add_tie(d, prev.onset(d));
            }
        }
    }
    std::vector<Dyad> dissolved;
    for (const Dyad &d : extant) {
        if (!work.has_tie(d)) {
            dissolved.push_back(d);
        }
    }
    return dissolved;
}

PhaseOutcome StepEngine::sample_step(const NetworkState &prev, std::uint64_t seed) const {
    Rng form_rng(derive_seed(seed, {0}));
    Rng diss_rng(derive_seed(seed, {1}));
    PhaseOutcome out;
    out.formed = formation_phase(prev, form_rng);
    out.dissolved = dissolution_phase(prev, diss_rng);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<Dyad> formation_phase(const NetworkState &prev, const ActorTable &actors,
                                  const ModelSpec &model, Rng &rng) {
    return StepEngine(model, actors).formation_phase(prev, rng);
}

std::vector<Dyad> dissolution_phase(const NetworkState &prev, const ActorTable &actors,
                                    const ModelSpec &model, Rng &rng) {
    return StepEngine(model, actors).dissolution_phase(prev, rng);
}

NetworkState step(const NetworkState &prev, const ActorTable &actors, const ModelSpec &model,
                  std::uint64_t seed) {
    return compose_step(prev, StepEngine(model, actors).sample_step(prev, seed));
}

std::uint64_t step_seed(std::uint64_t chain_seed, std::size_t replicate, std::size_t step_index) {
    return derive_seed(chain_seed, {replicate, step_index});
}

// ---------------------------------------------------------------------------
// Chain

Chain::Chain(const ModelSpec &model, const ActorTable &actors, NetworkState init, std::uint64_t seed,
             std::size_t replicate, SamplerConfig sampler)
    : engine_(model, actors, sampler), state_(std::move(init)), seed_(seed), replicate_(replicate) {}

PhaseOutcome Chain::step() {
    PhaseOutcome out = engine_.sample_step(state_, step_seed(seed_, replicate_, steps_));
    apply_step(state_, out);
    ++steps_;
    return out;
}

void Chain::advance(std::size_t steps) {
    for (std::size_t s = 0; s < steps; ++s) {
        step();
    }
}

void ChainConfig::validate() const {
    if (interval_steps == 0 || samples == 0 || num_replicates == 0) {
        throw ConfigError("chain interval, samples and replicates must be positive");
    }
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)> &job) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            job(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) {
                try {
                    job(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

ChainRun run_chain(const NetworkState &init, const ActorTable &actors, const ModelSpec &model,
                   const ChainConfig &config, const TargetSpec &spec) {
    config.validate();
    validate_network(init, actors, model.dyad_space);
    ChainRun run;
    run.names = spec.names();
    run.replicates.resize(config.num_replicates);
    run.final_states.resize(config.num_replicates);
    const StatEvaluator structural(actors, spec.terms);
    parallel_for(config.num_replicates, config.threads, [&](std::size_t r) {
        Chain chain(model, actors, init, config.rng_seed, r, config.sampler);
        chain.advance(config.burnin_steps);
        auto &rows = run.replicates[r];
        rows.reserve(config.samples);
        for (std::size_t s = 0; s < config.samples; ++s) {
            chain.advance(config.interval_steps);
            rows.push_back(eval_targets_lenient(chain.state(), actors, spec, structural));
        }
        run.final_states[r] = chain.state();
    });
    return run;
}

} // namespace stergm
