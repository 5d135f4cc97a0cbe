#include "stergm/popsim.hpp"

#include "stergm/numeric.hpp"
#include "stergm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace stergm {

void VitalConfig::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(birth_prob) || !prob(death_prob)) {
        throw ConfigError("vital probabilities must lie in [0, 1]");
    }
    if (entry_age_months < 0 || entry_age_months >= exit_age_months) {
        throw ConfigError("entry age must be non-negative and below the exit age");
    }
}

VitalConfig VitalConfig::frozen(std::size_t steps, std::uint64_t seed) {
    VitalConfig v;
    v.birth_prob = 0.0;
    v.death_prob = 0.0;
    v.steps = steps;
    v.seed = seed;
    v.aging = false;
    v.exit_age_months = std::numeric_limits<int>::max();
    return v;
}

std::string censor_cause_name(CensorCause c) {
    switch (c) {
    case CensorCause::none:
        return "none";
    case CensorCause::actor_removed:
        return "actor_removed";
    case CensorCause::simulation_end:
        return "simulation_end";
    }
    return "?";
}

int TieRecord::duration() const {
    if (!end) {
        throw ContractError("tie is still open");
    }
    return censored() ? *end - onset + 1 : *end - onset;
}

void TieHistoryLog::open_existing(const NetworkState &net) {
    for (const auto &[d, onset] : net.ties()) {
        formed(d, onset);
    }
}

void TieHistoryLog::formed(Dyad d, int onset) {
    if (open_.contains(d)) {
        throw ContractError("tie already open in the history log");
    }
    open_[d] = records_.size();
    records_.push_back(TieRecord{d, onset, std::nullopt, CensorCause::none});
}

void TieHistoryLog::finish(Dyad d, int clock, CensorCause cause) {
    const auto it = open_.find(d);
    if (it == open_.end()) {
        throw ContractError("tie not open in the history log");
    }
    TieRecord &r = records_[it->second];
    r.end = clock;
    r.cause = cause;
    open_.erase(it);
}

void TieHistoryLog::dissolved(Dyad d, int clock) { finish(d, clock, CensorCause::none); }

void TieHistoryLog::removed(Dyad d, int clock) { finish(d, clock, CensorCause::actor_removed); }

void TieHistoryLog::close(int clock) {
    std::vector<Dyad> still_open;
    for (const auto &[d, idx] : open_) {
        still_open.push_back(d);
    }
    for (const Dyad &d : still_open) {
        finish(d, clock, CensorCause::simulation_end);
    }
}

void write_tie_history_csv(std::ostream &out, const TieHistoryLog &log) {
    out << "i,j,onset,end,duration,cause\n";
    for (const TieRecord &r : log.records()) {
        out << r.dyad.lo << ',' << r.dyad.hi << ',' << r.onset << ',';
        if (r.end) {
            out << *r.end << ',' << r.duration();
        } else {
            out << ',';
        }
        out << ',' << censor_cause_name(r.cause) << '\n';
    }
}

KmResult kaplan_meier(const std::vector<std::pair<int, bool>> &observations) {
    KmResult res;
    if (observations.empty()) {
        throw UndefinedTargetError("no durations recorded");
    }
    std::vector<std::pair<int, bool>> obs = observations;
    std::sort(obs.begin(), obs.end());
    ExactSum raw;
    int max_duration = 0;
    for (const auto &[x, cens] : obs) {
        if (x < 1) {
            throw ContractError("durations must be at least one step");
        }
        raw.add(x);
        max_duration = std::max(max_duration, x);
        (cens ? res.censored : res.completed) += 1;
    }
    if (res.completed == 0) {
        throw UndefinedTargetError("every duration is censored: the survival curve is undefined");
    }
    res.raw_mean = raw.value() / static_cast<double>(obs.size());

    // Records censored at x remain in the risk set at x.
    double s = 1.0;
    std::size_t at_risk = obs.size();
    std::size_t i = 0;
    while (i < obs.size()) {
        const int x = obs[i].first;
        std::size_t events = 0;
        std::size_t leaving = 0;
        while (i < obs.size() && obs[i].first == x) {
            events += obs[i].second ? 0 : 1;
            ++leaving;
            ++i;
        }
        if (events > 0) {
            s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
            res.survival.emplace_back(x, s);
        }
        at_risk -= leaving;
    }
    // km_mean = sum over x in [0, max) of S(x), S being a right-continuous step function.
    ExactSum km;
    double current = 1.0;
    int last = 0;
    for (const auto &[x, sx] : res.survival) {
        km.add(current * static_cast<double>(x - last));
        current = sx;
        last = x;
    }
    km.add(current * static_cast<double>(max_duration - last));
    res.km_mean = km.value();
    return res;
}

KmResult km_adjusted_mean_duration(const TieHistoryLog &log) {
    std::vector<std::pair<int, bool>> obs;
    for (const TieRecord &r : log.records()) {
        if (r.end) {
            obs.emplace_back(r.duration(), r.censored());
        }
    }
    return kaplan_meier(obs);
}

CompositionRow composition_row(std::size_t step, const NetworkState &net, const ActorTable &actors,
                               const TargetSpec &spec) {
    CompositionRow row;
    row.step = step;
    row.n = actors.active_count();
    row.edges = net.edge_count();
    const auto &sexes = actors.levels(Attribute::sex);
    const auto &races = actors.levels(Attribute::race);
    for (std::size_t s = 0; s < sexes.size(); ++s) {
        for (std::size_t r = 0; r < races.size(); ++r) {
            std::size_t count = 0;
            std::size_t endpoints = 0;
            for (const Actor &a : actors.records()) {
                if (a.active && a.sex == static_cast<int>(s) && a.race == static_cast<int>(r)) {
                    ++count;
                    endpoints += net.degree(a.id);
                }
            }
            row.groups.push_back(sexes[s] + "/" + races[r]);
            row.group_counts.push_back(count);
            row.group_mean_degree.push_back(count == 0 ? std::numeric_limits<double>::quiet_NaN()
                                                       : static_cast<double>(endpoints) /
                                                             static_cast<double>(count));
        }
    }
    TargetSpec pc = spec;
    pc.normalization = Normalization::per_capita_by_group;
    row.targets = eval_targets_lenient(net, actors, pc, StatEvaluator(actors, pc.terms));
    return row;
}

void write_composition_csv(std::ostream &out, const std::vector<std::string> &target_names,
                           const std::vector<CompositionRow> &rows) {
    out << "step,n,ties";
    if (!rows.empty()) {
        for (const std::string &g : rows.front().groups) {
            out << ",count:" << g << ",proportion:" << g << ",mean_degree:" << g;
        }
    }
    for (const std::string &t : target_names) {
        out << ',' << t;
    }
    out << '\n';
    out.precision(10);
    for (const CompositionRow &r : rows) {
        out << r.step << ',' << r.n << ',' << r.edges;
        for (std::size_t g = 0; g < r.groups.size(); ++g) {
            const double prop = r.n == 0 ? 0.0 : static_cast<double>(r.group_counts[g]) / static_cast<double>(r.n);
            out << ',' << r.group_counts[g] << ',' << prop << ',' << r.group_mean_degree[g];
        }
        for (double v : r.targets) {
            out << ',' << v;
        }
        out << '\n';
    }
}

std::vector<ActorId> popsim_step(PopState &state, StepEngine &engine, const VitalConfig &vital) {
    const std::uint64_t seed = derive_seed(vital.seed, {state.step});
    ActorTable &actors = state.actors;

    // (1) Network step at the population of the previous month.
    engine.refresh(actors);
    const PhaseOutcome outcome = engine.sample_step(state.net, derive_seed(seed, {1}));
    apply_step(state.net, outcome);
    const int t = state.net.clock();
    for (const Dyad &d : outcome.dissolved) {
        state.log.dissolved(d, t);
    }
    for (const Dyad &d : outcome.formed) {
        state.log.formed(d, t);
    }

    // (2) Births: each actor present now may produce one newborn.
    Rng birth_rng(derive_seed(seed, {2}));
    const std::vector<ActorId> parents = actors.active_ids();
    const std::size_t sex_levels = actors.levels(Attribute::sex).size();
    for (ActorId p : parents) {
        if (birth_rng.bernoulli(vital.birth_prob)) {
            const int sex = static_cast<int>(birth_rng.below(sex_levels));
            actors.add_coded(sex, actors.at(p).race, vital.entry_age_months);
        }
    }

    // (3) Deaths, newborns included.
    Rng death_rng(derive_seed(seed, {3}));
    std::vector<ActorId> removed;
    std::vector<char> dead(actors.size(), 0);
    for (ActorId i : actors.active_ids()) {
        if (death_rng.bernoulli(vital.death_prob)) {
            removed.push_back(i);
            dead[static_cast<std::size_t>(i)] = 1;
        }
    }

    // (4) Aging and (5) age-out of the survivors.
    for (ActorId i : actors.active_ids()) {
        if (dead[static_cast<std::size_t>(i)]) {
            continue;
        }
        Actor &a = actors.at(i);
        if (vital.aging) {
            ++a.age_months;
        }
        if (a.age_months >= vital.exit_age_months) {
            removed.push_back(i);
        }
    }

    // (6) Removal with the ties incident on removed actors.
    std::sort(removed.begin(), removed.end());
    for (ActorId i : removed) {
        for (const Dyad &d : state.net.remove_incident(i)) {
            state.log.removed(d, t);
        }
        actors.deactivate(i);
    }
    ++state.step;
    return removed;
}

PopsimResult run_popsim(const NetworkState &init, const ActorTable &actors, const ModelSpec &model,
                        const VitalConfig &vital, const TargetSpec &spec, SamplerConfig sampler) {
    vital.validate();
    validate_network(init, actors, model.dyad_space);
    PopsimResult res;
    PopState &st = res.final_state;
    st.actors = actors;
    st.net = init;
    st.log.open_existing(init);
    StepEngine engine(model, st.actors, sampler);
    res.composition.reserve(vital.steps + 1);
    res.composition.push_back(composition_row(0, st.net, st.actors, spec));
    for (std::size_t s = 0; s < vital.steps; ++s) {
        popsim_step(st, engine, vital);
        // (7) Record.
        res.composition.push_back(composition_row(st.step, st.net, st.actors, spec));
    }
    st.log.close(st.net.clock());
    try {
        res.durations = km_adjusted_mean_duration(st.log);
        res.durations_available = true;
    } catch (const UndefinedTargetError &) {
        res.durations_available = false;
    }
    return res;
}

} // namespace stergm
