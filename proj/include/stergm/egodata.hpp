#pragma once

#include "stergm/netcore.hpp"
#include "stergm/statistics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stergm {

/// One reported partner. Times are whole months before the interview; a missing end marks
/// a relationship ongoing at the interview.
struct Nomination {
    std::string sex;
    std::string race;
    int age_months = 0;
    int start_months_before = 0;
    std::optional<int> end_months_before;
    /// Identifies the same alter across waves of one ego; empty when unlinked.
    std::string link;

    bool ongoing() const noexcept { return !end_months_before.has_value(); }
    /// Whether the relationship was in progress `k` months before the interview.
    bool present_at(int k) const noexcept {
        return start_months_before >= k && (ongoing() || *end_months_before < k);
    }
    /// Age in time steps `k` months before the interview: a relationship begun that month has age 1.
    int age_at(int k) const noexcept { return start_months_before - k + 1; }
};

struct Ego {
    std::string id;
    std::string sex;
    std::string race;
    int age_months = 0;
    std::vector<Nomination> alters;
};

struct EgoSample {
    std::vector<Ego> egos;
    int window_months = 12;

    std::size_t nomination_count() const;
};

/// Parses the survey CSV; ParseError names the offending line.
EgoSample read_survey_csv(std::istream &in, const std::string &source = "survey");
EgoSample read_survey_file(const std::string &path);
void write_survey_csv(std::ostream &out, const EgoSample &sample);

/// Every active actor interviewed with perfect reporting of its current ties. Link keys are
/// alter ids, so two censuses of one population are linkable.
EgoSample ego_census(const NetworkState &net, const ActorTable &actors);

/// Egos drawn with replacement; ids are suffixed with the draw index.
EgoSample resample_egos(const EgoSample &sample, std::size_t size, std::uint64_t seed);

/// The egos as an actor table (ids in ego order); alter-only levels are registered too.
ActorTable pseudo_population(const EgoSample &sample);

struct EgoTargetReport {
    std::vector<std::string> names;
    /// Targets for a network of |E| actors, normalized as the spec requests.
    std::vector<double> values;
    /// Per-capita values of the structural terms regardless of the spec's normalization.
    std::vector<double> per_capita;
    std::optional<double> mean_ongoing_age;
    std::size_t egos = 0;
    std::size_t ongoing_nominations = 0;
};

/// Dyad-level terms become half the sum over ongoing nominations of f(ego, alter);
/// actor-level terms sum over egos. UndefinedTargetError for a duration target without
/// ongoing nominations.
EgoTargetReport recover_cross_targets(const EgoSample &sample, const TargetSpec &spec);

/// Sums of each term over the ties formed, dissolved and kept between two waves, and over
/// their union and intersection. Actor-level terms only have union and intersection values
/// (NaN elsewhere). Unavailable parts are nullopt.
struct TransitionStats {
    std::vector<std::string> names;
    std::vector<double> formed;
    std::optional<std::vector<double>> dissolved;
    std::vector<double> persisted;
    std::optional<std::vector<double>> union_values;
    std::vector<double> intersection;
};

/// Two linked waves: egos matched by id, alters by link key. ContractError when an ego or a
/// nomination cannot be linked.
TransitionStats recover_transition_stats(const EgoSample &previous, const EgoSample &current,
                                         const std::vector<StatisticTerm> &terms);

/// One wave with ages: ties aged 1 count as formed, older ones as persisted; dissolution and
/// union sums are unavailable.
TransitionStats recover_transition_stats(const EgoSample &single_wave,
                                         const std::vector<StatisticTerm> &terms);

/// The same quantities computed from the two full networks.
TransitionStats transition_stats(const NetworkState &previous, const NetworkState &current,
                                 const ActorTable &actors, const std::vector<StatisticTerm> &terms);

/// Network on a small actor set with its one-toggle-reachable (hamming distance, degree-1
/// count) pairs.
struct ConditioningNetwork {
    std::vector<Dyad> ties;
    std::vector<std::pair<int, int>> reachable;
    bool reaches(int hamming, int degree1) const;
};

struct ConditioningReport {
    int n_actors = 0;
    int edges = 4;
    int degree1 = 4;
    std::size_t networks_with_summary = 0;
    /// A: summary (4, 4) and (1, 6) unreachable. B: summary (4, 4) and (1, 6) reachable.
    std::optional<ConditioningNetwork> a;
    std::optional<ConditioningNetwork> b;
    bool found() const noexcept { return a.has_value() && b.has_value(); }
};

/// Exhaustive search over all networks on `n_actors` actors with 4 ties and 4 degree-1
/// actors for a pair that differ in whether one toggle reaches degree-1 count 6.
ConditioningReport conditioning_demo(int n_actors = 7);

ConditioningNetwork conditioning_network(int n_actors, std::vector<Dyad> ties);

} // namespace stergm
