#include "stergm/dynamics.hpp"
#include "stergm/egodata.hpp"
#include "stergm/equilibrium.hpp"
#include "stergm/numeric.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace stergm;

namespace {

std::vector<StatisticTerm> census_terms() {
    return {
        StatisticTerm::edges(),
        StatisticTerm::activity(Attribute::sex, "F"),
        StatisticTerm::homophily(Attribute::race, "B"),
        StatisticTerm::same_category(Attribute::race),
        StatisticTerm::degree1(),
        StatisticTerm::degree1_by_category(Attribute::race, "W"),
        StatisticTerm::age_effect(AgeForm::sqrt_age),
        StatisticTerm::age_difference(AgeDifferenceForm::abs_sqrt_diff),
        StatisticTerm::age_difference(AgeDifferenceForm::sq_diff),
        StatisticTerm::older_male_younger_female(),
        StatisticTerm::size_offset(),
    };
}

ActorTable random_actors(int n, Rng &rng) {
    ActorTable t;
    for (int i = 0; i < n; ++i) {
        // First two actors pin every level so all terms resolve.
        const std::string race = i == 0 ? "B" : i == 1 ? "W" : (rng.below(2) ? "B" : "W");
        t.add(i % 2 == 0 ? "M" : "F", race, 200 + static_cast<int>(rng.below(600)));
    }
    return t;
}

NetworkState random_network(int n, double p, int clock, Rng &rng) {
    NetworkState net(clock);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.uniform() < p) {
                net.add_tie(Dyad{i, j}, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(clock))));
            }
        }
    }
    return net;
}

void check_same(const std::vector<double> &a, const std::vector<double> &b) {
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        INFO("entry " << k);
        CHECK((a[k] == b[k] || (std::isnan(a[k]) && std::isnan(b[k]))));
    }
}

Ego ego(std::string id, std::string sex, std::string race, int age) {
    return Ego{std::move(id), std::move(sex), std::move(race), age, {}};
}

Nomination ongoing(std::string sex, std::string race, int age, int start, std::string link = "") {
    Nomination n;
    n.sex = std::move(sex);
    n.race = std::move(race);
    n.age_months = age;
    n.start_months_before = start;
    n.link = std::move(link);
    return n;
}

} // namespace

TEST_CASE("ego census recovers the full-network targets exactly") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(12));
        ActorTable actors = random_actors(n, rng);
        NetworkState net = random_network(n, 0.1 + 0.4 * rng.uniform(), 30, rng);
        if (trial % 4 == 3 && n > 5) {
            net.remove_incident(n - 1);
            actors.deactivate(n - 1);
        }
        TargetSpec spec;
        spec.terms = census_terms();
        spec.durations = {DurationTarget::mean_monogamous_tie_age};
        if (!net.empty()) {
            spec.durations.push_back(DurationTarget::mean_tie_age);
        }
        spec.normalization = trial % 2 == 0 ? Normalization::raw : Normalization::per_capita_by_group;
        const EgoTargetReport rep = recover_cross_targets(ego_census(net, actors), spec);
        const TargetVector full = eval_targets(net, actors, spec);
        CHECK(rep.names == full.names);
        check_same(rep.values, full.values);
    }
}

TEST_CASE("cross-sectional recovery worked cases") {
    TargetSpec spec;
    spec.terms = {StatisticTerm::edges(), StatisticTerm::homophily(Attribute::sex, "M")};
    spec.durations = {DurationTarget::mean_tie_age};
    SUBCASE("mean ongoing age") {
        EgoSample s;
        Ego e = ego("a", "M", "W", 300);
        e.alters.push_back(ongoing("F", "W", 280, 2));  // age 3
        e.alters.push_back(ongoing("F", "B", 320, 4));  // age 5
        Nomination ended = ongoing("F", "W", 300, 9);
        ended.end_months_before = 6;
        e.alters.push_back(ended);
        s.egos.push_back(e);
        const EgoTargetReport r = recover_cross_targets(s, spec);
        CHECK(r.values[2] == 4.0);
        CHECK(r.ongoing_nominations == 2);
        CHECK(r.values[0] == 1.0);  // two reports, each weighted one half
    }
    SUBCASE("a tie reported by both partners counts once") {
        EgoSample s;
        Ego a = ego("a", "M", "W", 300);
        Ego b = ego("b", "M", "W", 310);
        a.alters.push_back(ongoing("M", "W", 310, 0));
        b.alters.push_back(ongoing("M", "W", 300, 0));
        s.egos = {a, b};
        const EgoTargetReport r = recover_cross_targets(s, spec);
        CHECK(r.values[0] == 1.0);
        CHECK(r.values[1] == 1.0);
        // The raw report total is twice the tie count.
        CHECK(r.ongoing_nominations == 2);
    }
    SUBCASE("a one-sided report contributes one half") {
        EgoSample s;
        Ego a = ego("a", "M", "W", 300);
        a.alters.push_back(ongoing("F", "W", 310, 5));
        s.egos = {a, ego("b", "F", "W", 290)};
        CHECK(recover_cross_targets(s, spec).values[0] == 0.5);
    }
    SUBCASE("no ongoing nominations") {
        EgoSample s;
        s.egos = {ego("a", "M", "W", 300)};
        CHECK_THROWS_AS(recover_cross_targets(s, spec), UndefinedTargetError);
    }
}

TEST_CASE("two-wave recovery equals the full-network transition sums") {
    Rng rng(7);
    const ActorTable actors = random_actors(20, rng);
    ModelSpec m;
    m.formation = {{StatisticTerm::edges(), -2.5}, {StatisticTerm::same_category(Attribute::race), 0.5}};
    m.dissolution = {{StatisticTerm::edges(), 1.0}};
    const std::vector<StatisticTerm> terms = census_terms();
    for (int trial = 0; trial < 20; ++trial) {
        Chain chain(m, actors, NetworkState{}, 100 + static_cast<std::uint64_t>(trial));
        chain.advance(15);
        const NetworkState previous = chain.state();
        chain.step();
        const NetworkState &current = chain.state();
        const TransitionStats got =
            recover_transition_stats(ego_census(previous, actors), ego_census(current, actors), terms);
        const TransitionStats want = transition_stats(previous, current, actors, terms);
        CHECK(got.names == want.names);
        check_same(got.formed, want.formed);
        check_same(got.persisted, want.persisted);
        check_same(got.intersection, want.intersection);
        REQUIRE(got.dissolved.has_value());
        REQUIRE(got.union_values.has_value());
        check_same(*got.dissolved, *want.dissolved);
        check_same(*got.union_values, *want.union_values);
    }
}

TEST_CASE("no change between waves gives zero formation and dissolution") {
    Rng rng(3);
    const ActorTable actors = random_actors(10, rng);
    const NetworkState net = random_network(10, 0.3, 5, rng);
    NetworkState later = net;
    later.set_clock(net.clock() + 1);
    const std::vector<StatisticTerm> terms{StatisticTerm::edges(), StatisticTerm::same_category(Attribute::race)};
    const TransitionStats ts = recover_transition_stats(ego_census(net, actors), ego_census(later, actors), terms);
    CHECK(ts.formed == std::vector<double>{0.0, 0.0});
    CHECK(*ts.dissolved == std::vector<double>{0.0, 0.0});
    CHECK(ts.persisted[0] == static_cast<double>(net.edge_count()));
}

TEST_CASE("single-wave recovery identifies new and continuing ties only") {
    Rng rng(5);
    const ActorTable actors = random_actors(14, rng);
    ModelSpec m;
    m.formation = {{StatisticTerm::edges(), -2.0}};
    m.dissolution = {{StatisticTerm::edges(), 0.5}};
    Chain chain(m, actors, NetworkState{}, 9);
    chain.advance(20);
    const NetworkState previous = chain.state();
    chain.step();
    const std::vector<StatisticTerm> terms = census_terms();
    const TransitionStats single = recover_transition_stats(ego_census(chain.state(), actors), terms);
    const TransitionStats full = transition_stats(previous, chain.state(), actors, terms);
    CHECK_FALSE(single.dissolved.has_value());
    CHECK_FALSE(single.union_values.has_value());
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (terms[k].dyad_level()) {
            CHECK(single.formed[k] == doctest::Approx(full.formed[k]));
            CHECK(single.persisted[k] == doctest::Approx(full.persisted[k]));
        }
    }
}

TEST_CASE("linking failures are contract errors") {
    EgoSample a, b;
    a.egos = {ego("1", "M", "W", 300)};
    b.egos = {ego("2", "M", "W", 300)};
    const std::vector<StatisticTerm> terms{StatisticTerm::edges()};
    CHECK_THROWS_AS(recover_transition_stats(a, b, terms), ContractError);
    b.egos = {ego("1", "M", "W", 301)};
    b.egos[0].alters.push_back(ongoing("F", "W", 300, 0));  // no link key
    CHECK_THROWS_AS(recover_transition_stats(a, b, terms), ContractError);
}

TEST_CASE("equilibrium census ages need no truncation correction") {
    ActorTable actors;
    for (int i = 0; i < 100; ++i) {
        actors.add(i % 2 == 0 ? "M" : "F", "W", 300);
    }
    const double p = 0.1;
    ModelSpec m;
    m.formation = {{StatisticTerm::edges(), -6.0}};
    m.dissolution = {{StatisticTerm::edges(), logit(1.0 - p)}};
    TargetSpec spec;
    spec.durations = {DurationTarget::mean_tie_age};
    std::vector<double> means;
    Chain chain(m, actors, NetworkState{}, 13);
    chain.advance(300);
    double ties = 0.0;
    for (int wave = 0; wave < 20; ++wave) {
        chain.advance(60);
        const EgoTargetReport r = recover_cross_targets(ego_census(chain.state(), actors), spec);
        means.push_back(r.values[0]);
        ties += chain.state().edge_count();
    }
    // Ages of extant ties are geometric with mean 1/p, variance (1-p)/p^2.
    const double se = std::sqrt((1 - p) / (p * p) / ties);
    CHECK(std::abs(mean(means) - 1.0 / p) < 3.0 * se * 1.2);
}

TEST_CASE("survey CSV round trip and parse errors") {
    EgoSample s;
    s.window_months = 6;
    Ego e = ego("x1", "F", "B", 400);
    e.alters.push_back(ongoing("M", "W", 420, 10, "k"));
    Nomination ended = ongoing("M", "B", 500, 30);
    ended.end_months_before = 3;
    e.alters.push_back(ended);
    s.egos = {e, ego("x2", "M", "W", 250)};
    std::stringstream buf;
    write_survey_csv(buf, s);
    const EgoSample back = read_survey_csv(buf);
    CHECK(back.window_months == 6);
    REQUIRE(back.egos.size() == 2);
    REQUIRE(back.egos[0].alters.size() == 2);
    CHECK(back.egos[0].alters[0].link == "k");
    CHECK(back.egos[0].alters[0].ongoing());
    CHECK(*back.egos[0].alters[1].end_months_before == 3);
    CHECK(back.nomination_count() == 2);

    const std::string header = "record,ego_id,sex,race,age_months,start_months_before,end_months_before,alter_key\n";
    auto line_of = [](const std::string &text) -> std::size_t {
        std::istringstream in(text);
        try {
            read_survey_csv(in);
        } catch (const ParseError &e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of(header + "ego,1,M,W,300,,,\nalter,1,F,W,300.5,2,ONGOING,\n") == 3);
    CHECK(line_of(header + "ego,1,M,W,300,,,\nalter,1,F,W,300,2,5,\n") == 3);
    CHECK(line_of(header + "ego,1,M,W,300,,,\nalter,2,F,W,300,2,ONGOING,\n") == 3);
    CHECK(line_of(header + "ego,1,M,W,300,,,\nego,1,M,W,300,,,\n") == 3);
    CHECK(line_of("#comment\nrecord,ego\n") == 2);
    CHECK(line_of(header + "ego,1,M,W\n") == 2);
    CHECK(line_of("") == 1);
}

TEST_CASE("resampling egos") {
    EgoSample s;
    for (int i = 0; i < 5; ++i) {
        s.egos.push_back(ego(std::to_string(i), i % 2 ? "F" : "M", "W", 300 + i));
    }
    const EgoSample a = resample_egos(s, 40, 3);
    const EgoSample b = resample_egos(s, 40, 3);
    CHECK(a.egos.size() == 40);
    std::set<std::string> ids;
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(a.egos[i].id == b.egos[i].id);
        ids.insert(a.egos[i].id);
    }
    CHECK(ids.size() == 40);
    CHECK_THROWS_AS(resample_egos(EgoSample{}, 10, 1), ConfigError);
    const ActorTable pop = pseudo_population(a);
    CHECK(pop.size() == 40);
}

TEST_CASE("conditioning on summary statistics hides one-toggle reachability") {
    for (int n : {7}) {
        const ConditioningReport rep = conditioning_demo(n);
        REQUIRE(rep.found());
        CHECK(rep.n_actors == n);
        CHECK(rep.networks_with_summary > 0);
        for (const ConditioningNetwork *net : {&*rep.a, &*rep.b}) {
            CHECK(net->ties.size() == 4);
            const ConditioningNetwork again = conditioning_network(n, net->ties);
            CHECK(again.reachable == net->reachable);
        }
        CHECK(rep.b->reaches(1, 6));
        CHECK_FALSE(rep.a->reaches(1, 6));
        int best_a = 0;
        for (const auto &[h, d1] : rep.a->reachable) {
            if (h == 1) best_a = std::max(best_a, d1);
        }
        CHECK(best_a < 6);
    }
}

TEST_CASE("with eight actors every (4, 4) network has two isolates, so no A instance exists") {
    const ConditioningReport rep = conditioning_demo(8);
    CHECK(rep.networks_with_summary > 0);
    CHECK(rep.b.has_value());
    CHECK_FALSE(rep.a.has_value());
}
