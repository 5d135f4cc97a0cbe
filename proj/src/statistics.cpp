#include "stergm/statistics.hpp"

#include "stergm/numeric.hpp"

#include <cmath>
#include <limits>

namespace stergm {

StatisticTerm StatisticTerm::activity(Attribute a, std::string lvl) {
    StatisticTerm t;
    t.kind = TermKind::activity;
    t.attr = a;
    t.level = std::move(lvl);
    return t;
}

StatisticTerm StatisticTerm::homophily(Attribute a, std::string lvl) {
    StatisticTerm t;
    t.kind = TermKind::homophily;
    t.attr = a;
    t.level = std::move(lvl);
    return t;
}

StatisticTerm StatisticTerm::same_category(Attribute a) {
    StatisticTerm t;
    t.kind = TermKind::same_category;
    t.attr = a;
    return t;
}

StatisticTerm StatisticTerm::degree1() {
    StatisticTerm t;
    t.kind = TermKind::degree1;
    return t;
}

StatisticTerm StatisticTerm::degree1_by_category(Attribute a, std::string lvl) {
    StatisticTerm t;
    t.kind = TermKind::degree1_by_category;
    t.attr = a;
    t.level = std::move(lvl);
    return t;
}

StatisticTerm StatisticTerm::age_effect(AgeForm f) {
    StatisticTerm t;
    t.kind = TermKind::age_effect;
    t.age_form = f;
    return t;
}

StatisticTerm StatisticTerm::age_difference(AgeDifferenceForm f) {
    StatisticTerm t;
    t.kind = TermKind::age_difference;
    t.diff_form = f;
    return t;
}

StatisticTerm StatisticTerm::older_male_younger_female(std::string male, std::string female) {
    StatisticTerm t;
    t.kind = TermKind::older_male_younger_female;
    t.male_level = std::move(male);
    t.female_level = std::move(female);
    return t;
}

StatisticTerm StatisticTerm::size_offset() {
    StatisticTerm t;
    t.kind = TermKind::size_offset;
    return t;
}

namespace {

std::string diff_form_name(AgeDifferenceForm f) {
    switch (f) {
    case AgeDifferenceForm::abs_sqrt_diff:
        return "abs-sqrt-diff";
    case AgeDifferenceForm::abs_diff:
        return "abs-diff";
    case AgeDifferenceForm::sq_sqrt_diff:
        return "sq-sqrt-diff";
    case AgeDifferenceForm::sq_diff:
        return "sq-diff";
    }
    return "?";
}

} // namespace

std::string StatisticTerm::name() const {
    const std::string a(attribute_name(attr));
    switch (kind) {
    case TermKind::edges:
        return "edges";
    case TermKind::activity:
        return "activity." + a + "." + level;
    case TermKind::homophily:
        return "homophily." + a + "." + level;
    case TermKind::same_category:
        return "same-category." + a;
    case TermKind::degree1:
        return "degree1";
    case TermKind::degree1_by_category:
        return "degree1." + a + "." + level;
    case TermKind::age_effect:
        return age_form == AgeForm::sqrt_age ? "age-effect.sqrt" : "age-effect.linear";
    case TermKind::age_difference:
        return "age-difference." + diff_form_name(diff_form);
    case TermKind::older_male_younger_female:
        return "older-male-younger-female";
    case TermKind::size_offset:
        return "offset-log-inverse-n";
    }
    return "?";
}

ActorFeatures ActorFeatures::of(const Actor &a) {
    return coded(a.sex, a.race, a.age_months);
}

ActorFeatures ActorFeatures::coded(int sex, int race, int age_months) {
    ActorFeatures f;
    f.sex = sex;
    f.race = race;
    f.age_years = age_months / 12.0;
    f.sqrt_age = std::sqrt(f.age_years);
    return f;
}

ResolvedTerm resolve_term(const StatisticTerm &term, const ActorTable &actors) {
    ResolvedTerm r;
    r.term = term;
    switch (term.kind) {
    case TermKind::activity:
    case TermKind::homophily:
    case TermKind::degree1_by_category:
        r.code = actors.code(term.attr, term.level);
        break;
    case TermKind::older_male_younger_female:
        r.male_code = actors.code(Attribute::sex, term.male_level);
        r.female_code = actors.code(Attribute::sex, term.female_level);
        break;
    default:
        break;
    }
    return r;
}

namespace {

int attr_of(const ActorFeatures &f, Attribute a) noexcept {
    return a == Attribute::sex ? f.sex : f.race;
}

bool older_male_of(const ResolvedTerm &t, const ActorFeatures &m, const ActorFeatures &f) noexcept {
    return m.sex == t.male_code && f.sex == t.female_code && m.age_years > f.age_years;
}

} // namespace

double dyad_term_value(const ResolvedTerm &t, const ActorFeatures &a, const ActorFeatures &b,
                       double log_inv_n) {
    const StatisticTerm &term = t.term;
    switch (term.kind) {
    case TermKind::edges:
        return 1.0;
    case TermKind::activity:
        return static_cast<double>((attr_of(a, term.attr) == t.code) + (attr_of(b, term.attr) == t.code));
    case TermKind::homophily:
        return attr_of(a, term.attr) == t.code && attr_of(b, term.attr) == t.code ? 1.0 : 0.0;
    case TermKind::same_category:
        return attr_of(a, term.attr) == attr_of(b, term.attr) ? 1.0 : 0.0;
    case TermKind::age_effect:
        return term.age_form == AgeForm::sqrt_age ? a.sqrt_age + b.sqrt_age : a.age_years + b.age_years;
    case TermKind::age_difference: {
        switch (term.diff_form) {
        case AgeDifferenceForm::abs_sqrt_diff:
            return std::abs(a.sqrt_age - b.sqrt_age);
        case AgeDifferenceForm::abs_diff:
            return std::abs(a.age_years - b.age_years);
        case AgeDifferenceForm::sq_sqrt_diff: {
            const double d = a.sqrt_age - b.sqrt_age;
            return d * d;
        }
        case AgeDifferenceForm::sq_diff: {
            const double d = a.age_years - b.age_years;
            return d * d;
        }
        }
        return 0.0;
    }
    case TermKind::older_male_younger_female:
        return older_male_of(t, a, b) || older_male_of(t, b, a) ? 1.0 : 0.0;
    case TermKind::size_offset:
        return log_inv_n;
    case TermKind::degree1:
    case TermKind::degree1_by_category:
        break;
    }
    throw ContractError("term '" + term.name() + "' is not dyad-level");
}

double actor_term_value(const ResolvedTerm &t, const ActorFeatures &a, std::size_t degree) {
    switch (t.term.kind) {
    case TermKind::degree1:
        return degree == 1 ? 1.0 : 0.0;
    case TermKind::degree1_by_category:
        return degree == 1 && attr_of(a, t.term.attr) == t.code ? 1.0 : 0.0;
    default:
        break;
    }
    throw ContractError("term '" + t.term.name() + "' is not actor-level");
}

// ---------------------------------------------------------------------------
// StatEvaluator

StatEvaluator::StatEvaluator(const ActorTable &actors, std::vector<StatisticTerm> terms) {
    resolved_.reserve(terms.size());
    for (const StatisticTerm &t : terms) {
        resolved_.push_back(resolve_term(t, actors));
    }
    refresh(actors);
}

void StatEvaluator::refresh(const ActorTable &actors) {
    features_.resize(actors.size());
    active_.resize(actors.size());
    for (const Actor &a : actors.records()) {
        features_[static_cast<std::size_t>(a.id)] = ActorFeatures::of(a);
        active_[static_cast<std::size_t>(a.id)] = a.active ? 1 : 0;
    }
    n_active_ = actors.active_count();
    log_inv_n_ = n_active_ == 0 ? 0.0 : -std::log(static_cast<double>(n_active_));
}

std::vector<StatisticTerm> StatEvaluator::terms() const {
    std::vector<StatisticTerm> out;
    out.reserve(resolved_.size());
    for (const auto &r : resolved_) {
        out.push_back(r.term);
    }
    return out;
}

std::vector<std::string> StatEvaluator::names() const {
    std::vector<std::string> out;
    out.reserve(resolved_.size());
    for (const auto &r : resolved_) {
        out.push_back(r.term.name());
    }
    return out;
}

bool StatEvaluator::dyad_independent() const noexcept {
    for (const auto &r : resolved_) {
        if (!r.term.dyad_level()) {
            return false;
        }
    }
    return true;
}

bool StatEvaluator::categorical_only() const noexcept {
    for (const auto &r : resolved_) {
        if (!r.term.categorical_only()) {
            return false;
        }
    }
    return true;
}

std::vector<double> StatEvaluator::evaluate(const NetworkState &net) const {
    std::vector<double> out(resolved_.size(), 0.0);
    for (std::size_t k = 0; k < resolved_.size(); ++k) {
        const ResolvedTerm &r = resolved_[k];
        if (r.term.dyad_level()) {
            ExactSum sum;
            for (const auto &[d, onset] : net.ties()) {
                sum.add(dyad_term_value(r, features(d.lo), features(d.hi), log_inv_n_));
            }
            out[k] = sum.value();
        } else {
            double count = 0.0;
            for (std::size_t i = 0; i < active_.size(); ++i) {
                if (active_[i]) {
                    count += actor_term_value(r, features_[i], net.degree(static_cast<ActorId>(i)));
                }
            }
            out[k] = count;
        }
    }
    return out;
}

void StatEvaluator::change(const NetworkState &net, Dyad d, std::span<double> out) const {
    if (out.size() != resolved_.size()) {
        throw ContractError("change statistic buffer has the wrong size");
    }
    const bool on = net.has_tie(d);
    const std::size_t di = net.degree(d.lo) - (on ? 1 : 0);
    const std::size_t dj = net.degree(d.hi) - (on ? 1 : 0);
    auto flip = [](std::size_t without) {
        return (without == 0 ? 1.0 : 0.0) - (without == 1 ? 1.0 : 0.0);
    };
    for (std::size_t k = 0; k < resolved_.size(); ++k) {
        const ResolvedTerm &r = resolved_[k];
        if (r.term.dyad_level()) {
            out[k] = dyad_term_value(r, features(d.lo), features(d.hi), log_inv_n_);
        } else if (r.term.kind == TermKind::degree1) {
            out[k] = flip(di) + flip(dj);
        } else {
            const Attribute a = r.term.attr;
            const double fi = attr_of(features(d.lo), a) == r.code ? flip(di) : 0.0;
            const double fj = attr_of(features(d.hi), a) == r.code ? flip(dj) : 0.0;
            out[k] = fi + fj;
        }
    }
}

std::vector<double> StatEvaluator::change(const NetworkState &net, Dyad d) const {
    std::vector<double> out(resolved_.size());
    change(net, d, out);
    return out;
}

double StatEvaluator::dyad_value(std::size_t k, Dyad d) const {
    return dyad_term_value(resolved_.at(k), features(d.lo), features(d.hi), log_inv_n_);
}

std::size_t StatEvaluator::group_size(std::size_t k) const {
    const ResolvedTerm &r = resolved_.at(k);
    if (!r.term.group_specific()) {
        return 0;
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < active_.size(); ++i) {
        if (active_[i] && attr_of(features_[i], r.term.attr) == r.code) {
            ++count;
        }
    }
    return count;
}

// ---------------------------------------------------------------------------

std::vector<double> eval_stats(const NetworkState &net, const ActorTable &actors,
                               const std::vector<StatisticTerm> &terms) {
    return StatEvaluator(actors, terms).evaluate(net);
}

std::vector<double> change_stat(const NetworkState &net, const ActorTable &actors,
                                const DyadSpace &space, Dyad d,
                                const std::vector<StatisticTerm> &terms) {
    if (!space.contains(actors, d)) {
        throw ContractError("dyad (" + std::to_string(d.lo) + "," + std::to_string(d.hi) +
                            ") is outside the dyad space");
    }
    return StatEvaluator(actors, terms).change(net, d);
}

std::string duration_target_name(DurationTarget d) {
    return d == DurationTarget::mean_tie_age ? "mean-tie-age" : "mean-monogamous-tie-age";
}

std::vector<std::string> TargetSpec::names() const {
    std::vector<std::string> out;
    out.reserve(size());
    for (const StatisticTerm &t : terms) {
        out.push_back(t.name());
    }
    for (DurationTarget d : durations) {
        out.push_back(duration_target_name(d));
    }
    return out;
}

double mean_tie_age(const NetworkState &net) {
    if (net.empty()) {
        throw UndefinedTargetError("mean tie age is undefined on a network without ties");
    }
    long long total = 0;
    for (const auto &[d, onset] : net.ties()) {
        total += net.clock() - onset + 1;
    }
    return static_cast<double>(total) / static_cast<double>(net.edge_count());
}

double mean_monogamous_tie_age(const NetworkState &net, const ActorTable &actors) {
    const std::size_t n = actors.active_count();
    if (n == 0) {
        throw UndefinedTargetError("mean monogamous tie age is undefined without actors");
    }
    long long total = 0;
    for (const Actor &a : actors.records()) {
        if (a.active && net.degree(a.id) == 1) {
            total += net.age(Dyad::of(a.id, net.neighbors(a.id).front()));
        }
    }
    return static_cast<double>(total) / static_cast<double>(n);
}

double per_capita(double raw, const StatisticTerm &term, std::size_t group_size, std::size_t n) {
    const std::size_t denom = term.group_specific() ? group_size : n;
    if (denom == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return raw / static_cast<double>(denom);
}

TargetVector eval_targets(const NetworkState &net, const ActorTable &actors, const TargetSpec &spec,
                          const StatEvaluator &structural) {
    if (structural.size() != spec.terms.size()) {
        throw ContractError("evaluator does not match the target spec");
    }
    TargetVector tv;
    tv.names = spec.names();
    tv.values = structural.evaluate(net);
    if (spec.normalization == Normalization::per_capita_by_group) {
        for (std::size_t k = 0; k < spec.terms.size(); ++k) {
            tv.values[k] = per_capita(tv.values[k], spec.terms[k], structural.group_size(k),
                                      structural.n_active());
        }
    }
    for (DurationTarget d : spec.durations) {
        tv.values.push_back(d == DurationTarget::mean_tie_age ? mean_tie_age(net)
                                                              : mean_monogamous_tie_age(net, actors));
    }
    return tv;
}

TargetVector eval_targets(const NetworkState &net, const ActorTable &actors, const TargetSpec &spec) {
    return eval_targets(net, actors, spec, StatEvaluator(actors, spec.terms));
}

std::vector<double> eval_targets_lenient(const NetworkState &net, const ActorTable &actors,
                                         const TargetSpec &spec, const StatEvaluator &structural) {
    TargetSpec structural_only = spec;
    structural_only.durations.clear();
    std::vector<double> values = eval_targets(net, actors, structural_only, structural).values;
    for (DurationTarget d : spec.durations) {
        try {
            values.push_back(d == DurationTarget::mean_tie_age ? mean_tie_age(net)
                                                               : mean_monogamous_tie_age(net, actors));
        } catch (const UndefinedTargetError &) {
            values.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return values;
}

} // namespace stergm
