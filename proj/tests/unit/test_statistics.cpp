#include "stergm/statistics.hpp"
#include "stergm/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace stergm;

namespace {

ActorTable mixed_actors(int n, std::uint64_t seed) {
    Rng rng(seed);
    ActorTable t;
    for (int i = 0; i < n; ++i) {
        t.add(i % 2 == 0 ? "M" : "F", i == 1 || rng.below(3) == 0 ? "B" : "W", 216 + static_cast<int>(rng.below(500)));
    }
    return t;
}

std::vector<StatisticTerm> every_term() {
    return {
        StatisticTerm::edges(),
        StatisticTerm::activity(Attribute::sex, "F"),
        StatisticTerm::activity(Attribute::race, "B"),
        StatisticTerm::homophily(Attribute::race, "B"),
        StatisticTerm::same_category(Attribute::race),
        StatisticTerm::degree1(),
        StatisticTerm::degree1_by_category(Attribute::sex, "M"),
        StatisticTerm::age_effect(AgeForm::sqrt_age),
        StatisticTerm::age_effect(AgeForm::linear),
        StatisticTerm::age_difference(AgeDifferenceForm::abs_sqrt_diff),
        StatisticTerm::age_difference(AgeDifferenceForm::abs_diff),
        StatisticTerm::age_difference(AgeDifferenceForm::sq_sqrt_diff),
        StatisticTerm::age_difference(AgeDifferenceForm::sq_diff),
        StatisticTerm::older_male_younger_female(),
        StatisticTerm::size_offset(),
    };
}

// Naive evaluator working from labels and the plain adjacency matrix.
double naive(const StatisticTerm &t, const NetworkState &net, const ActorTable &actors) {
    const auto &recs = actors.records();
    const std::size_t n = recs.size();
    std::vector<std::vector<int>> adj(n, std::vector<int>(n, 0));
    for (const auto &[d, onset] : net.ties()) {
        adj[d.lo][d.hi] = adj[d.hi][d.lo] = 1;
    }
    auto level = [&](std::size_t i, Attribute a) { return actors.label(a, recs[i].attribute(a)); };
    auto years = [&](std::size_t i) { return recs[i].age_months / 12.0; };
    double total = 0.0;
    if (t.kind == TermKind::degree1 || t.kind == TermKind::degree1_by_category) {
        for (std::size_t i = 0; i < n; ++i) {
            int deg = 0;
            for (std::size_t j = 0; j < n; ++j) {
                deg += adj[i][j];
            }
            const bool in_group = t.kind == TermKind::degree1 || level(i, t.attr) == t.level;
            total += (deg == 1 && in_group) ? 1.0 : 0.0;
        }
        return total;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!adj[i][j]) {
                continue;
            }
            const double si = std::sqrt(years(i));
            const double sj = std::sqrt(years(j));
            switch (t.kind) {
            case TermKind::edges:
                total += 1;
                break;
            case TermKind::activity:
                total += (level(i, t.attr) == t.level) + (level(j, t.attr) == t.level);
                break;
            case TermKind::homophily:
                total += level(i, t.attr) == t.level && level(j, t.attr) == t.level;
                break;
            case TermKind::same_category:
                total += level(i, t.attr) == level(j, t.attr);
                break;
            case TermKind::age_effect:
                total += t.age_form == AgeForm::sqrt_age ? si + sj : years(i) + years(j);
                break;
            case TermKind::age_difference:
                switch (t.diff_form) {
                case AgeDifferenceForm::abs_sqrt_diff:
                    total += std::abs(si - sj);
                    break;
                case AgeDifferenceForm::abs_diff:
                    total += std::abs(years(i) - years(j));
                    break;
                case AgeDifferenceForm::sq_sqrt_diff:
                    total += (si - sj) * (si - sj);
                    break;
                case AgeDifferenceForm::sq_diff:
                    total += (years(i) - years(j)) * (years(i) - years(j));
                    break;
                }
                break;
            case TermKind::older_male_younger_female: {
                const bool ij = level(i, Attribute::sex) == "M" && level(j, Attribute::sex) == "F" && years(i) > years(j);
                const bool ji = level(j, Attribute::sex) == "M" && level(i, Attribute::sex) == "F" && years(j) > years(i);
                total += ij || ji;
                break;
            }
            case TermKind::size_offset:
                total += std::log(1.0 / static_cast<double>(n));
                break;
            default:
                break;
            }
        }
    }
    return total;
}

NetworkState random_network(int n, double p, Rng &rng) {
    NetworkState net(20);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.uniform() < p) {
                net.add_tie(Dyad{i, j}, 1 + static_cast<int>(rng.below(20)));
            }
        }
    }
    return net;
}

NetworkState from_mask(int n, unsigned mask) {
    NetworkState net;
    int k = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++k) {
            if (mask & (1u << k)) {
                net.add_tie(Dyad{i, j});
            }
        }
    }
    return net;
}

} // namespace

TEST_CASE("worked values") {
    ActorTable t;
    for (int i = 0; i < 4; ++i) {
        t.add("M", "W", 240);
    }
    const std::vector<StatisticTerm> terms{StatisticTerm::edges(), StatisticTerm::degree1()};
    CHECK(eval_stats(NetworkState{}, t, terms) == std::vector<double>{0.0, 0.0});
    NetworkState cycle;
    cycle.add_tie(Dyad{0, 1});
    cycle.add_tie(Dyad{1, 2});
    cycle.add_tie(Dyad{2, 3});
    cycle.add_tie(Dyad{0, 3});
    CHECK(eval_stats(cycle, t, terms) == std::vector<double>{4.0, 0.0});
}

TEST_CASE("unknown levels are configuration errors") {
    const ActorTable t = mixed_actors(4, 1);
    CHECK_THROWS_AS(eval_stats(NetworkState{}, t, {StatisticTerm::activity(Attribute::sex, "X")}), ConfigError);
    CHECK_THROWS_AS(eval_stats(NetworkState{}, t, {StatisticTerm::older_male_younger_female("A", "F")}),
                    ConfigError);
}

TEST_CASE("every term matches a naive evaluator on random 7-actor networks") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const ActorTable t = mixed_actors(7, 100 + trial);
        const NetworkState net = random_network(7, 0.35, rng);
        const auto terms = every_term();
        const std::vector<double> got = eval_stats(net, t, terms);
        for (std::size_t k = 0; k < terms.size(); ++k) {
            INFO(terms[k].name());
            CHECK(got[k] == doctest::Approx(naive(terms[k], net, t)).epsilon(1e-12));
        }
    }
}

TEST_CASE("change statistics equal the defining difference on every 6-actor network") {
    const ActorTable t = mixed_actors(6, 3);
    const auto terms = every_term();
    const StatEvaluator ev(t, terms);
    const DyadSpace space = DyadSpace::all();
    std::vector<double> delta(terms.size());
    for (unsigned mask = 0; mask < (1u << 15); ++mask) {
        NetworkState net = from_mask(6, mask);
        const std::vector<double> base = ev.evaluate(net);
        for (int i = 0; i < 6; ++i) {
            for (int j = i + 1; j < 6; ++j) {
                const Dyad d{i, j};
                ev.change(net, d, delta);
                const bool on = net.has_tie(d);
                if (on) {
                    net.remove_tie(d);
                } else {
                    net.add_tie(d);
                }
                const std::vector<double> other = ev.evaluate(net);
                if (on) {
                    net.add_tie(d);
                } else {
                    net.remove_tie(d);
                }
                for (std::size_t k = 0; k < terms.size(); ++k) {
                    const double expected = on ? base[k] - other[k] : other[k] - base[k];
                    REQUIRE(delta[k] == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
                }
            }
        }
    }
    CHECK(change_stat(NetworkState{}, t, space, Dyad{0, 1}, terms)[0] == 1.0);
}

TEST_CASE("degree1 change statistic examples") {
    const ActorTable t = mixed_actors(6, 4);
    const std::vector<StatisticTerm> terms{StatisticTerm::degree1()};
    CHECK(change_stat(NetworkState{}, t, DyadSpace::all(), Dyad{0, 1}, terms)[0] == 2.0);
    NetworkState net;
    net.add_tie(Dyad{0, 2});
    net.add_tie(Dyad{1, 3});
    net.add_tie(Dyad{1, 4});
    // Endpoint degrees (1, 2): actor 0 leaves degree one, actor 1 stays above it.
    CHECK(change_stat(net, t, DyadSpace::all(), Dyad{0, 1}, terms)[0] == -1.0);
    CHECK_THROWS_AS(change_stat(net, t, DyadSpace::bipartite(Attribute::sex), Dyad{0, 2}, terms), ContractError);
}

TEST_CASE("change statistics are local to the toggled dyad") {
    const ActorTable t = mixed_actors(9, 8);
    const auto terms = every_term();
    const StatEvaluator ev(t, terms);
    Rng rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        NetworkState net = random_network(9, 0.3, rng);
        const Dyad d{static_cast<int>(rng.below(4)), 4 + static_cast<int>(rng.below(5))};
        const std::vector<double> before = ev.change(net, d);
        // Edit ties away from both endpoints.
        for (int e = 0; e < 5; ++e) {
            int a = static_cast<int>(rng.below(9));
            int b = static_cast<int>(rng.below(9));
            if (a == b || a == d.lo || a == d.hi || b == d.lo || b == d.hi) {
                continue;
            }
            const Dyad x = Dyad::of(a, b);
            if (net.has_tie(x)) {
                net.remove_tie(x);
            } else {
                net.add_tie(x);
            }
        }
        CHECK(ev.change(net, d) == before);
    }
}

TEST_CASE("evaluating a union of term lists concatenates the parts") {
    const ActorTable t = mixed_actors(8, 9);
    Rng rng(2);
    const NetworkState net = random_network(8, 0.4, rng);
    const auto all = every_term();
    const std::vector<StatisticTerm> left(all.begin(), all.begin() + 6);
    const std::vector<StatisticTerm> right(all.begin() + 6, all.end());
    std::vector<double> joined = eval_stats(net, t, left);
    const std::vector<double> tail = eval_stats(net, t, right);
    joined.insert(joined.end(), tail.begin(), tail.end());
    CHECK(eval_stats(net, t, all) == joined);
}

TEST_CASE("dyad values are symmetric in their endpoints") {
    const ActorTable t = mixed_actors(10, 5);
    const auto terms = every_term();
    for (const StatisticTerm &term : terms) {
        if (!term.dyad_level()) {
            continue;
        }
        const ResolvedTerm r = resolve_term(term, t);
        for (const Actor &a : t.records()) {
            for (const Actor &b : t.records()) {
                const ActorFeatures fa = ActorFeatures::of(a);
                const ActorFeatures fb = ActorFeatures::of(b);
                CHECK(dyad_term_value(r, fa, fb, -2.0) == dyad_term_value(r, fb, fa, -2.0));
            }
        }
    }
}

TEST_CASE("targets: mean tie age and the per-capita rules") {
    SUBCASE("mean tie age") {
        ActorTable t;
        for (int i = 0; i < 4; ++i) {
            t.add("M", "W", 240);
        }
        NetworkState net(10);
        net.add_tie(Dyad{0, 1}, 9);  // age 2
        net.add_tie(Dyad{2, 3}, 7);  // age 4
        CHECK(mean_tie_age(net) == 3.0);
        CHECK_THROWS_AS(mean_tie_age(NetworkState{}), UndefinedTargetError);
        // Both ties are monogamous; their ages are counted once per endpoint.
        CHECK(mean_monogamous_tie_age(net, t) == doctest::Approx((2.0 * 2 + 4.0 * 2) / 4.0));
        TargetSpec spec;
        spec.durations = {DurationTarget::mean_tie_age};
        CHECK_THROWS_AS(eval_targets(NetworkState{}, t, spec), UndefinedTargetError);
        CHECK(std::isnan(eval_targets_lenient(NetworkState{}, t, spec, StatEvaluator(t, {}))[0]));
    }
    SUBCASE("male activity without male-male ties") {
        ActorTable t;
        for (int i = 0; i < 4; ++i) {
            t.add("M", "W", 240);
        }
        for (int i = 0; i < 4; ++i) {
            t.add("F", "W", 240);
        }
        NetworkState net;
        net.add_tie(Dyad{0, 4});
        net.add_tie(Dyad{1, 5});
        net.add_tie(Dyad{1, 6});
        TargetSpec spec;
        spec.terms = {StatisticTerm::activity(Attribute::sex, "M"), StatisticTerm::edges()};
        spec.normalization = Normalization::per_capita_by_group;
        const TargetVector tv = eval_targets(net, t, spec);
        CHECK(tv.values[0] == 0.75);
        CHECK(tv.values[1] == 3.0 / 8.0);
    }
    SUBCASE("a male-male tie counts twice") {
        ActorTable t;
        t.add("M", "W", 240);
        t.add("M", "W", 240);
        t.add("F", "W", 240);
        NetworkState net;
        net.add_tie(Dyad{0, 1});
        TargetSpec spec;
        spec.terms = {StatisticTerm::activity(Attribute::sex, "M")};
        spec.normalization = Normalization::per_capita_by_group;
        CHECK(eval_targets(net, t, spec).values[0] == 1.0);
    }
    CHECK(std::isnan(per_capita(3.0, StatisticTerm::homophily(Attribute::race, "B"), 0, 10)));
}

TEST_CASE("term names") {
    CHECK(StatisticTerm::activity(Attribute::sex, "F").name() == "activity.sex.F");
    CHECK(StatisticTerm::degree1_by_category(Attribute::race, "B").name() == "degree1.race.B");
    CHECK(StatisticTerm::edges().name() == "edges");
}
