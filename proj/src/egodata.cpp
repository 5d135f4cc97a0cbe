#include "stergm/egodata.hpp"

#include "stergm/numeric.hpp"
#include "stergm/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace stergm {

std::size_t EgoSample::nomination_count() const {
    std::size_t n = 0;
    for (const Ego &e : egos) {
        n += e.alters.size();
    }
    return n;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char *kSurveyHeader =
    "record,ego_id,sex,race,age_months,start_months_before,end_months_before,alter_key";

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

int parse_months(const std::string &field, const std::string &what, const std::string &source,
                 std::size_t line) {
    int value = 0;
    const char *first = field.data();
    const char *last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc() || ptr != last) {
        if (field.find('.') != std::string::npos) {
            throw ParseError(source, line, what + " '" + field + "' is not a whole number of months");
        }
        throw ParseError(source, line, what + " '" + field + "' is not an integer");
    }
    if (value < 0) {
        throw ParseError(source, line, what + " is negative");
    }
    return value;
}

} // namespace

EgoSample read_survey_csv(std::istream &in, const std::string &source) {
    EgoSample sample;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            const std::string key = "#window_months=";
            if (line.rfind(key, 0) == 0) {
                sample.window_months = parse_months(line.substr(key.size()), "window", source, lineno);
            }
            continue;
        }
        if (!header_seen) {
            const std::string full = kSurveyHeader;
            if (line != full && line != full.substr(0, full.rfind(','))) {
                throw ParseError(source, lineno, "expected header '" + std::string(kSurveyHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string> f = split_csv(line);
        if (f.size() == 7) {
            f.emplace_back();
        }
        if (f.size() != 8) {
            throw ParseError(source, lineno, "expected 8 fields, found " + std::to_string(f.size()));
        }
        const std::string &record = f[0];
        const std::string &ego_id = f[1];
        if (ego_id.empty()) {
            throw ParseError(source, lineno, "missing ego_id");
        }
        if (f[2].empty() || f[3].empty()) {
            throw ParseError(source, lineno, "missing sex or race");
        }
        const int age = parse_months(f[4], "age_months", source, lineno);
        if (record == "ego") {
            if (index.contains(ego_id)) {
                throw ParseError(source, lineno, "duplicate ego '" + ego_id + "'");
            }
            index[ego_id] = sample.egos.size();
            sample.egos.push_back(Ego{ego_id, f[2], f[3], age, {}});
        } else if (record == "alter") {
            const auto it = index.find(ego_id);
            if (it == index.end()) {
                throw ParseError(source, lineno, "alter row for unknown ego '" + ego_id + "'");
            }
            Nomination nom;
            nom.sex = f[2];
            nom.race = f[3];
            nom.age_months = age;
            nom.start_months_before = parse_months(f[5], "start_months_before", source, lineno);
            if (f[6] != "ONGOING") {
                nom.end_months_before = parse_months(f[6], "end_months_before", source, lineno);
                if (*nom.end_months_before > nom.start_months_before) {
                    throw ParseError(source, lineno, "relationship ends before it starts");
                }
            }
            nom.link = f[7];
            sample.egos[it->second].alters.push_back(std::move(nom));
        } else {
            throw ParseError(source, lineno, "record type must be 'ego' or 'alter', got '" + record + "'");
        }
    }
    if (!header_seen) {
        throw ParseError(source, lineno == 0 ? 1 : lineno, "empty survey file");
    }
    return sample;
}

EgoSample read_survey_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open survey file '" + path + "'");
    }
    return read_survey_csv(in, path);
}

void write_survey_csv(std::ostream &out, const EgoSample &sample) {
    out << "#window_months=" << sample.window_months << '\n' << kSurveyHeader << '\n';
    for (const Ego &e : sample.egos) {
        out << "ego," << e.id << ',' << e.sex << ',' << e.race << ',' << e.age_months << ",,,\n";
        for (const Nomination &a : e.alters) {
            out << "alter," << e.id << ',' << a.sex << ',' << a.race << ',' << a.age_months << ','
                << a.start_months_before << ',';
            if (a.ongoing()) {
                out << "ONGOING";
            } else {
                out << *a.end_months_before;
            }
            out << ',' << a.link << '\n';
        }
    }
}

// ---------------------------------------------------------------------------

EgoSample ego_census(const NetworkState &net, const ActorTable &actors) {
    EgoSample sample;
    for (const Actor &a : actors.records()) {
        if (!a.active) {
            continue;
        }
        Ego e;
        e.id = std::to_string(a.id);
        e.sex = actors.label(Attribute::sex, a.sex);
        e.race = actors.label(Attribute::race, a.race);
        e.age_months = a.age_months;
        for (ActorId j : net.neighbors(a.id)) {
            const Actor &b = actors.at(j);
            Nomination nom;
            nom.sex = actors.label(Attribute::sex, b.sex);
            nom.race = actors.label(Attribute::race, b.race);
            nom.age_months = b.age_months;
            nom.start_months_before = net.age(Dyad::of(a.id, j)) - 1;
            nom.link = std::to_string(j);
            e.alters.push_back(std::move(nom));
        }
        sample.egos.push_back(std::move(e));
    }
    return sample;
}

EgoSample resample_egos(const EgoSample &sample, std::size_t size, std::uint64_t seed) {
    if (sample.egos.empty()) {
        throw ConfigError("cannot resample an empty ego sample");
    }
    Rng rng(derive_seed(seed, {0x65676f}));
    EgoSample out;
    out.window_months = sample.window_months;
    out.egos.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        Ego e = sample.egos[rng.below(sample.egos.size())];
        e.id += "#" + std::to_string(i);
        out.egos.push_back(std::move(e));
    }
    return out;
}

ActorTable pseudo_population(const EgoSample &sample) {
    ActorTable table;
    for (const Ego &e : sample.egos) {
        table.add(e.sex, e.race, e.age_months);
    }
    for (const Ego &e : sample.egos) {
        for (const Nomination &a : e.alters) {
            table.intern(Attribute::sex, a.sex);
            table.intern(Attribute::race, a.race);
        }
    }
    return table;
}

namespace {

ActorFeatures alter_features(const ActorTable &table, const Nomination &a) {
    return ActorFeatures::coded(table.code(Attribute::sex, a.sex), table.code(Attribute::race, a.race),
                                a.age_months);
}

double log_inverse(std::size_t n) {
    return n == 0 ? 0.0 : -std::log(static_cast<double>(n));
}

} // namespace

EgoTargetReport recover_cross_targets(const EgoSample &sample, const TargetSpec &spec) {
    const ActorTable table = pseudo_population(sample);
    const std::size_t n = sample.egos.size();
    const double lin = log_inverse(n);
    std::vector<ResolvedTerm> resolved;
    for (const StatisticTerm &t : spec.terms) {
        resolved.push_back(resolve_term(t, table));
    }

    EgoTargetReport rep;
    rep.names = spec.names();
    rep.egos = n;
    std::vector<ExactSum> dyad_sums(resolved.size());
    std::vector<double> actor_sums(resolved.size(), 0.0);
    std::vector<std::size_t> group(resolved.size(), 0);
    long long age_total = 0;
    long long monogamous_total = 0;
    std::size_t ongoing_total = 0;

    for (std::size_t e = 0; e < n; ++e) {
        const Ego &ego = sample.egos[e];
        const ActorFeatures fe = ActorFeatures::of(table.at(static_cast<ActorId>(e)));
        std::size_t degree = 0;
        long long last_age = 0;
        for (const Nomination &a : ego.alters) {
            if (!a.ongoing()) {
                continue;
            }
            ++degree;
            last_age = a.age_at(0);
            age_total += last_age;
            const ActorFeatures fa = alter_features(table, a);
            for (std::size_t k = 0; k < resolved.size(); ++k) {
                if (resolved[k].term.dyad_level()) {
                    dyad_sums[k].add(dyad_term_value(resolved[k], fe, fa, lin));
                }
            }
        }
        ongoing_total += degree;
        if (degree == 1) {
            monogamous_total += last_age;
        }
        for (std::size_t k = 0; k < resolved.size(); ++k) {
            const ResolvedTerm &r = resolved[k];
            if (!r.term.dyad_level()) {
                actor_sums[k] += actor_term_value(r, fe, degree);
            }
            if (r.term.group_specific() &&
                (r.term.attr == Attribute::sex ? fe.sex : fe.race) == r.code) {
                ++group[k];
            }
        }
    }
    rep.ongoing_nominations = ongoing_total;

    for (std::size_t k = 0; k < resolved.size(); ++k) {
        const double raw = resolved[k].term.dyad_level() ? 0.5 * dyad_sums[k].value() : actor_sums[k];
        const double pc = per_capita(raw, spec.terms[k], group[k], n);
        rep.per_capita.push_back(pc);
        rep.values.push_back(spec.normalization == Normalization::per_capita_by_group ? pc : raw);
    }
    if (ongoing_total > 0) {
        rep.mean_ongoing_age = static_cast<double>(age_total) / static_cast<double>(ongoing_total);
    }
    for (DurationTarget d : spec.durations) {
        if (d == DurationTarget::mean_tie_age) {
            if (!rep.mean_ongoing_age) {
                throw UndefinedTargetError("no ongoing nominations: mean tie age is undefined");
            }
            rep.values.push_back(*rep.mean_ongoing_age);
        } else {
            if (n == 0) {
                throw UndefinedTargetError("no egos: mean monogamous tie age is undefined");
            }
            rep.values.push_back(static_cast<double>(monogamous_total) / static_cast<double>(n));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Transitions

namespace {

struct TransitionAccumulator {
    explicit TransitionAccumulator(std::vector<ResolvedTerm> r)
        : resolved(std::move(r)), formed(resolved.size()), dissolved(resolved.size()),
          persisted(resolved.size()), union_actor(resolved.size(), 0.0),
          inter_actor(resolved.size(), 0.0) {}

    std::vector<ResolvedTerm> resolved;
    std::vector<ExactSum> formed;
    std::vector<ExactSum> dissolved;
    std::vector<ExactSum> persisted;
    std::vector<double> union_actor;
    std::vector<double> inter_actor;

    void add_tie(std::vector<ExactSum> &into, const ActorFeatures &a, const ActorFeatures &b, double lin) {
        for (std::size_t k = 0; k < resolved.size(); ++k) {
            if (resolved[k].term.dyad_level()) {
                into[k].add(dyad_term_value(resolved[k], a, b, lin));
            }
        }
    }

    void add_actor(const ActorFeatures &a, std::size_t union_degree, std::size_t inter_degree) {
        for (std::size_t k = 0; k < resolved.size(); ++k) {
            if (!resolved[k].term.dyad_level()) {
                union_actor[k] += actor_term_value(resolved[k], a, union_degree);
                inter_actor[k] += actor_term_value(resolved[k], a, inter_degree);
            }
        }
    }

    // scale is 0.5 for ego reports (each tie seen from both ends) and 1 for networks.
    TransitionStats finish(double scale, bool with_dissolution) const {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        TransitionStats ts;
        std::vector<double> dis;
        std::vector<double> uni;
        for (std::size_t k = 0; k < resolved.size(); ++k) {
            ts.names.push_back(resolved[k].term.name());
            if (resolved[k].term.dyad_level()) {
                const double f = scale * formed[k].value();
                const double p = scale * persisted[k].value();
                const double d = scale * dissolved[k].value();
                ExactSum u;
                for (const auto *s : {&formed[k], &persisted[k], &dissolved[k]}) {
                    u.add(s->value());
                }
                ts.formed.push_back(f);
                ts.persisted.push_back(p);
                ts.intersection.push_back(p);
                dis.push_back(d);
                uni.push_back(scale * u.value());
            } else {
                ts.formed.push_back(nan);
                ts.persisted.push_back(nan);
                dis.push_back(nan);
                ts.intersection.push_back(inter_actor[k]);
                uni.push_back(union_actor[k]);
            }
        }
        if (with_dissolution) {
            ts.dissolved = std::move(dis);
            ts.union_values = std::move(uni);
        }
        return ts;
    }
};

std::vector<ResolvedTerm> resolve_all(const std::vector<StatisticTerm> &terms, const ActorTable &table) {
    std::vector<ResolvedTerm> out;
    for (const StatisticTerm &t : terms) {
        out.push_back(resolve_term(t, table));
    }
    return out;
}

std::map<std::string, const Nomination *> ongoing_by_link(const Ego &e, const char *wave) {
    std::map<std::string, const Nomination *> out;
    for (const Nomination &a : e.alters) {
        if (!a.ongoing()) {
            continue;
        }
        if (a.link.empty()) {
            throw ContractError("nomination of ego '" + e.id + "' in the " + wave +
                                " wave has no link key");
        }
        if (!out.emplace(a.link, &a).second) {
            throw ContractError("ego '" + e.id + "' nominates link '" + a.link + "' twice");
        }
    }
    return out;
}

} // namespace

TransitionStats recover_transition_stats(const EgoSample &previous, const EgoSample &current,
                                         const std::vector<StatisticTerm> &terms) {
    std::map<std::string, const Ego *> prev_by_id;
    for (const Ego &e : previous.egos) {
        prev_by_id[e.id] = &e;
    }
    if (prev_by_id.size() != current.egos.size()) {
        throw ContractError("waves interview different respondents");
    }
    const ActorTable table = pseudo_population(current);
    ActorTable levels = table;
    for (const Ego &e : previous.egos) {
        for (const Nomination &a : e.alters) {
            levels.intern(Attribute::sex, a.sex);
            levels.intern(Attribute::race, a.race);
        }
    }
    TransitionAccumulator acc(resolve_all(terms, levels));
    const double lin = log_inverse(current.egos.size());
    for (std::size_t e = 0; e < current.egos.size(); ++e) {
        const Ego &cur = current.egos[e];
        const auto it = prev_by_id.find(cur.id);
        if (it == prev_by_id.end()) {
            throw ContractError("ego '" + cur.id + "' is missing from the previous wave");
        }
        const ActorFeatures fe = ActorFeatures::of(table.at(static_cast<ActorId>(e)));
        const auto now = ongoing_by_link(cur, "current");
        const auto before = ongoing_by_link(*it->second, "previous");
        std::size_t inter = 0;
        for (const auto &[key, nom] : now) {
            if (before.contains(key)) {
                ++inter;
                acc.add_tie(acc.persisted, fe, alter_features(levels, *nom), lin);
            } else {
                acc.add_tie(acc.formed, fe, alter_features(levels, *nom), lin);
            }
        }
        for (const auto &[key, nom] : before) {
            if (!now.contains(key)) {
                acc.add_tie(acc.dissolved, fe, alter_features(levels, *nom), lin);
            }
        }
        acc.add_actor(fe, now.size() + before.size() - inter, inter);
    }
    return acc.finish(0.5, true);
}

TransitionStats recover_transition_stats(const EgoSample &single_wave,
                                         const std::vector<StatisticTerm> &terms) {
    const ActorTable table = pseudo_population(single_wave);
    TransitionAccumulator acc(resolve_all(terms, table));
    const double lin = log_inverse(single_wave.egos.size());
    for (std::size_t e = 0; e < single_wave.egos.size(); ++e) {
        const ActorFeatures fe = ActorFeatures::of(table.at(static_cast<ActorId>(e)));
        std::size_t kept = 0;
        for (const Nomination &a : single_wave.egos[e].alters) {
            if (!a.ongoing()) {
                continue;
            }
            if (a.age_at(0) <= 1) {
                acc.add_tie(acc.formed, fe, alter_features(table, a), lin);
            } else {
                ++kept;
                acc.add_tie(acc.persisted, fe, alter_features(table, a), lin);
            }
        }
        acc.add_actor(fe, 0, kept);
    }
    return acc.finish(0.5, false);
}

TransitionStats transition_stats(const NetworkState &previous, const NetworkState &current,
                                 const ActorTable &actors, const std::vector<StatisticTerm> &terms) {
    TransitionAccumulator acc(resolve_all(terms, actors));
    const double lin = log_inverse(actors.active_count());
    auto feat = [&](ActorId i) { return ActorFeatures::of(actors.at(i)); };
    for (const auto &[d, onset] : current.ties()) {
        acc.add_tie(previous.has_tie(d) ? acc.persisted : acc.formed, feat(d.lo), feat(d.hi), lin);
    }
    for (const auto &[d, onset] : previous.ties()) {
        if (!current.has_tie(d)) {
            acc.add_tie(acc.dissolved, feat(d.lo), feat(d.hi), lin);
        }
    }
    for (const Actor &a : actors.records()) {
        if (!a.active) {
            continue;
        }
        std::size_t inter = 0;
        for (ActorId j : current.neighbors(a.id)) {
            inter += previous.has_tie(Dyad::of(a.id, j)) ? 1 : 0;
        }
        const std::size_t uni = current.degree(a.id) + previous.degree(a.id) - inter;
        acc.add_actor(feat(a.id), uni, inter);
    }
    return acc.finish(1.0, true);
}

// ---------------------------------------------------------------------------
// Conditioning search

bool ConditioningNetwork::reaches(int hamming, int degree1) const {
    return std::find(reachable.begin(), reachable.end(), std::pair{hamming, degree1}) != reachable.end();
}

namespace {

int degree1_count(const std::vector<int> &deg) {
    return static_cast<int>(std::count(deg.begin(), deg.end(), 1));
}

} // namespace

ConditioningNetwork conditioning_network(int n_actors, std::vector<Dyad> ties) {
    std::sort(ties.begin(), ties.end());
    std::vector<int> deg(static_cast<std::size_t>(n_actors), 0);
    for (const Dyad &d : ties) {
        ++deg[static_cast<std::size_t>(d.lo)];
        ++deg[static_cast<std::size_t>(d.hi)];
    }
    ConditioningNetwork net;
    net.ties = ties;
    for (ActorId i = 0; i < n_actors; ++i) {
        for (ActorId j = i + 1; j < n_actors; ++j) {
            const bool on = std::binary_search(ties.begin(), ties.end(), Dyad{i, j});
            const int step = on ? -1 : 1;
            deg[static_cast<std::size_t>(i)] += step;
            deg[static_cast<std::size_t>(j)] += step;
            const std::pair<int, int> stat{1, degree1_count(deg)};
            if (!net.reaches(stat.first, stat.second)) {
                net.reachable.push_back(stat);
            }
            deg[static_cast<std::size_t>(i)] -= step;
            deg[static_cast<std::size_t>(j)] -= step;
        }
    }
    std::sort(net.reachable.begin(), net.reachable.end());
    return net;
}

ConditioningReport conditioning_demo(int n_actors) {
    if (n_actors < 2 || n_actors > 12) {
        throw ConfigError("conditioning search supports 2 to 12 actors");
    }
    ConditioningReport rep;
    rep.n_actors = n_actors;
    std::vector<Dyad> all;
    for (ActorId i = 0; i < n_actors; ++i) {
        for (ActorId j = i + 1; j < n_actors; ++j) {
            all.push_back(Dyad{i, j});
        }
    }
    const std::size_t m = all.size();
    if (m < 4) {
        return rep;
    }
    std::vector<std::size_t> pick{0, 1, 2, 3};
    for (;;) {
        std::vector<int> deg(static_cast<std::size_t>(n_actors), 0);
        for (std::size_t idx : pick) {
            ++deg[static_cast<std::size_t>(all[idx].lo)];
            ++deg[static_cast<std::size_t>(all[idx].hi)];
        }
        if (degree1_count(deg) == rep.degree1) {
            ++rep.networks_with_summary;
            if (!rep.a || !rep.b) {
                std::vector<Dyad> ties;
                for (std::size_t idx : pick) {
                    ties.push_back(all[idx]);
                }
                ConditioningNetwork net = conditioning_network(n_actors, std::move(ties));
                if (net.reaches(1, 6)) {
                    if (!rep.b) {
                        rep.b = std::move(net);
                    }
                } else if (!rep.a) {
                    rep.a = std::move(net);
                }
            }
        }
        // Next 4-combination in lexicographic order.
        int pos = 3;
        while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == m - 4 + static_cast<std::size_t>(pos)) {
            --pos;
        }
        if (pos < 0) {
            break;
        }
        ++pick[static_cast<std::size_t>(pos)];
        for (auto q = static_cast<std::size_t>(pos) + 1; q < 4; ++q) {
            pick[q] = pick[q - 1] + 1;
        }
    }
    return rep;
}

} // namespace stergm
