#pragma once

#include "stergm/netcore.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stergm {

enum class TermKind {
    edges,
    activity,            // tie endpoints in a category; within-category ties count twice
    homophily,           // ties with both endpoints in one named category
    same_category,       // ties whose endpoints share any category of an attribute
    degree1,             // actors with exactly one tie
    degree1_by_category, // actors in a category with exactly one tie
    age_effect,          // per tie: f(age_i) + f(age_j)
    age_difference,      // per tie: distance between endpoint ages
    older_male_younger_female,
    size_offset,         // per tie: log(1 / n_active)
};

enum class AgeForm { sqrt_age, linear };
enum class AgeDifferenceForm { abs_sqrt_diff, abs_diff, sq_sqrt_diff, sq_diff };

/// One statistic. Ages enter in years. Terms that do not use a field leave it at its default.
struct StatisticTerm {
    TermKind kind = TermKind::edges;
    Attribute attr = Attribute::sex;
    std::string level;
    AgeForm age_form = AgeForm::sqrt_age;
    AgeDifferenceForm diff_form = AgeDifferenceForm::abs_sqrt_diff;
    std::string male_level = "M";
    std::string female_level = "F";
    /// Whether this is a cross-sectional statistic evaluated on the phase network.
    bool implicit_dynamic = true;

    static StatisticTerm edges() { return {}; }
    static StatisticTerm activity(Attribute a, std::string lvl);
    static StatisticTerm homophily(Attribute a, std::string lvl);
    static StatisticTerm same_category(Attribute a);
    static StatisticTerm degree1();
    static StatisticTerm degree1_by_category(Attribute a, std::string lvl);
    static StatisticTerm age_effect(AgeForm f);
    static StatisticTerm age_difference(AgeDifferenceForm f);
    static StatisticTerm older_male_younger_female(std::string male = "M", std::string female = "F");
    static StatisticTerm size_offset();

    /// Canonical name, e.g. "edges", "activity.sex.F", "degree1.race.B".
    std::string name() const;

    /// True when the value is a sum over ties of a function of the two endpoints' attributes.
    bool dyad_level() const noexcept {
        return kind != TermKind::degree1 && kind != TermKind::degree1_by_category;
    }
    /// True when the term refers to one category's members (normalized by that group's size).
    bool group_specific() const noexcept {
        return kind == TermKind::activity || kind == TermKind::homophily ||
               kind == TermKind::degree1_by_category;
    }
    /// True when the dyad value depends on categorical attributes only.
    bool categorical_only() const noexcept {
        return kind == TermKind::edges || kind == TermKind::activity || kind == TermKind::homophily ||
               kind == TermKind::same_category || kind == TermKind::size_offset;
    }

    friend bool operator==(const StatisticTerm &, const StatisticTerm &) = default;
};

/// Attributes an evaluator needs from one actor (or one alter nomination).
struct ActorFeatures {
    int sex = 0;
    int race = 0;
    double age_years = 0.0;
    double sqrt_age = 0.0;

    static ActorFeatures of(const Actor &a);
    static ActorFeatures coded(int sex, int race, int age_months);
};

/// A term with its category labels resolved against an attribute table.
struct ResolvedTerm {
    StatisticTerm term;
    int code = -1;
    int male_code = -1;
    int female_code = -1;
};

/// Resolves category labels to codes; ConfigError for a level the table does not know.
ResolvedTerm resolve_term(const StatisticTerm &term, const ActorTable &actors);

/// Contribution of one tie between actors with features a and b to a dyad-level term.
/// Bitwise symmetric in (a, b). `log_inv_n` is log(1/n) for the size offset.
double dyad_term_value(const ResolvedTerm &t, const ActorFeatures &a, const ActorFeatures &b,
                       double log_inv_n);

/// Contribution of one actor with the given degree to an actor-level term.
double actor_term_value(const ResolvedTerm &t, const ActorFeatures &a, std::size_t degree);

/// Evaluates a term list over networks drawn on one actor table. Holds a snapshot of the
/// actor features; call refresh() after the table changes.
class StatEvaluator {
public:
    StatEvaluator() = default;
    StatEvaluator(const ActorTable &actors, std::vector<StatisticTerm> terms);

    void refresh(const ActorTable &actors);

    std::size_t size() const noexcept { return resolved_.size(); }
    const std::vector<ResolvedTerm> &resolved() const noexcept { return resolved_; }
    std::vector<StatisticTerm> terms() const;
    std::vector<std::string> names() const;

    /// True when no term depends on ties other than the toggled dyad.
    bool dyad_independent() const noexcept;
    /// True when every term's dyad value depends on categorical attributes only.
    bool categorical_only() const noexcept;

    std::vector<double> evaluate(const NetworkState &net) const;

    /// g(y with ij) - g(y without ij), written to `out` (size() entries).
    void change(const NetworkState &net, Dyad d, std::span<double> out) const;
    std::vector<double> change(const NetworkState &net, Dyad d) const;

    /// Change statistic of a dyad-level term k, which does not depend on the network.
    double dyad_value(std::size_t k, Dyad d) const;

    const ActorFeatures &features(ActorId i) const { return features_.at(static_cast<std::size_t>(i)); }
    double log_inv_n() const noexcept { return log_inv_n_; }
    std::size_t n_active() const noexcept { return n_active_; }
    /// Active actors carrying the group of term k; 0 for terms without a group.
    std::size_t group_size(std::size_t k) const;

private:
    std::vector<ResolvedTerm> resolved_;
    std::vector<ActorFeatures> features_;
    std::vector<char> active_;
    std::size_t n_active_ = 0;
    double log_inv_n_ = 0.0;
};

/// g for the term list on `net`; ConfigError for unknown levels.
std::vector<double> eval_stats(const NetworkState &net, const ActorTable &actors,
                               const std::vector<StatisticTerm> &terms);

/// Change statistic for one dyad; ContractError when the dyad is outside `space`.
std::vector<double> change_stat(const NetworkState &net, const ActorTable &actors,
                                const DyadSpace &space, Dyad d,
                                const std::vector<StatisticTerm> &terms);

enum class DurationTarget { mean_tie_age, mean_monogamous_tie_age };

std::string duration_target_name(DurationTarget d);

enum class Normalization { raw, per_capita_by_group };

/// Target statistics: structural terms then duration targets, in declaration order.
struct TargetSpec {
    std::vector<StatisticTerm> terms;
    std::vector<DurationTarget> durations;
    Normalization normalization = Normalization::raw;

    std::size_t size() const noexcept { return terms.size() + durations.size(); }
    std::vector<std::string> names() const;
};

struct TargetVector {
    std::vector<std::string> names;
    std::vector<double> values;
};

/// Mean age over all ties; UndefinedTargetError when there are none.
double mean_tie_age(const NetworkState &net);

/// (1/n) times the summed age of the ties of degree-one actors.
double mean_monogamous_tie_age(const NetworkState &net, const ActorTable &actors);

/// Applies the per-capita rule to a raw statistic: group terms divide by the group size
/// (NaN for an empty group), everything else by n.
double per_capita(double raw, const StatisticTerm &term, std::size_t group_size, std::size_t n);

/// Evaluates targets using a prepared evaluator for the spec's structural terms.
TargetVector eval_targets(const NetworkState &net, const ActorTable &actors, const TargetSpec &spec,
                          const StatEvaluator &structural);
TargetVector eval_targets(const NetworkState &net, const ActorTable &actors, const TargetSpec &spec);

/// Target values with undefined duration targets reported as NaN instead of thrown.
std::vector<double> eval_targets_lenient(const NetworkState &net, const ActorTable &actors,
                                         const TargetSpec &spec, const StatEvaluator &structural);

} // namespace stergm
