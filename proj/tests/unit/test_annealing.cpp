#include "stergm/annealing.hpp"

#include <doctest.h>

#include <cmath>

using namespace stergm;

namespace {

ActorTable actors_of(int n) {
    ActorTable t;
    for (int i = 0; i < n; ++i) {
        t.add(i % 2 == 0 ? "M" : "F", i % 4 == 0 ? "B" : "W", 300);
    }
    return t;
}

} // namespace

TEST_CASE("annealing reaches attainable targets") {
    const ActorTable t = actors_of(60);
    TargetSpec spec;
    spec.terms = {StatisticTerm::edges(), StatisticTerm::same_category(Attribute::race), StatisticTerm::degree1()};
    const std::vector<double> targets{40.0, 25.0, 30.0};
    AnnealConfig cfg;
    cfg.iterations = 50000;
    cfg.seed = 4;
    const AnnealResult r = anneal_network(t, DyadSpace::bipartite(Attribute::sex), spec, targets, cfg, 8.0);
    CHECK(r.distance < 1e-3);
    CHECK(std::abs(r.achieved[0] - 40.0) <= 1.0);
    CHECK_NOTHROW(validate_network(r.net, t, DyadSpace::bipartite(Attribute::sex)));
    CHECK(eval_stats(r.net, t, spec.terms) == r.achieved);
    for (const auto &[d, onset] : r.net.ties()) {
        CHECK(r.net.age(d) >= 1);
    }
    CHECK_FALSE(r.trace.empty());

    const AnnealResult again = anneal_network(t, DyadSpace::bipartite(Attribute::sex), spec, targets, cfg, 8.0);
    CHECK(again.net == r.net);
}

TEST_CASE("annealing uses the per-capita scale when asked") {
    const ActorTable t = actors_of(40);
    TargetSpec spec;
    spec.terms = {StatisticTerm::edges()};
    spec.normalization = Normalization::per_capita_by_group;
    AnnealConfig cfg;
    cfg.iterations = 20000;
    const AnnealResult r = anneal_network(t, DyadSpace::all(), spec, {0.5}, cfg);
    CHECK(r.net.edge_count() == 20);
    CHECK(r.achieved[0] == 0.5);
}

TEST_CASE("onsets follow the requested mean age") {
    const ActorTable t = actors_of(200);
    TargetSpec spec;
    spec.terms = {StatisticTerm::edges()};
    AnnealConfig cfg;
    cfg.iterations = 20000;
    const AnnealResult r = anneal_network(t, DyadSpace::all(), spec, {400.0}, cfg, 12.0);
    double total = 0.0;
    for (const auto &[d, onset] : r.net.ties()) {
        total += r.net.age(d);
    }
    const double m = total / static_cast<double>(r.net.edge_count());
    // Geometric ages: sd of the mean is sqrt((1-p)/p^2 / 400) with p = 1/12.
    CHECK(std::abs(m - 12.0) < 3.0 * std::sqrt((11.0 / 12.0) * 144.0 / 400.0));
}

TEST_CASE("empty-network targets anneal to the empty network") {
    const ActorTable t = actors_of(20);
    TargetSpec spec;
    spec.terms = {StatisticTerm::edges(), StatisticTerm::degree1()};
    AnnealConfig cfg;
    cfg.iterations = 5000;
    const AnnealResult r = anneal_network(t, DyadSpace::all(), spec, {0.0, 0.0}, cfg);
    CHECK(r.net.empty());
    CHECK(r.distance == 0.0);
}

TEST_CASE("an edges-only target is met exactly") {
    const ActorTable t = actors_of(12);
    TargetSpec spec;
    spec.terms = {StatisticTerm::edges()};
    AnnealConfig cfg;
    cfg.iterations = 5000;
    for (double k : {1.0, 7.0, 30.0, 66.0}) {
        const AnnealResult r = anneal_network(t, DyadSpace::all(), spec, {k}, cfg);
        CHECK(static_cast<double>(r.net.edge_count()) == k);
        CHECK(r.distance == 0.0);
    }
}

TEST_CASE("multi-term per-capita targets on 200 actors") {
    ActorTable t;
    for (int i = 0; i < 200; ++i) {
        t.add(i % 2 == 0 ? "M" : "F", i % 5 == 0 ? "B" : "W", 216 + 3 * i);
    }
    TargetSpec spec;
    spec.terms = {StatisticTerm::edges(), StatisticTerm::activity(Attribute::race, "B"),
                  StatisticTerm::same_category(Attribute::race), StatisticTerm::degree1(),
                  StatisticTerm::age_difference(AgeDifferenceForm::abs_sqrt_diff)};
    spec.normalization = Normalization::per_capita_by_group;
    AnnealConfig cfg;
    cfg.iterations = 200000;
    cfg.seed = 9;
    const AnnealResult r = anneal_network(t, DyadSpace::bipartite(Attribute::sex), spec,
                                          {0.6, 0.9, 0.42, 0.55, 0.25}, cfg, 20.0);
    CHECK(r.distance < 1e-3);
    REQUIRE(r.trace.size() >= 2);
    CHECK(r.trace.back().second <= r.trace.front().second);
}
