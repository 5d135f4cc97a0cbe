#include "stergm/equilibrium.hpp"
#include "stergm/numeric.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <map>
#include <vector>

using namespace stergm;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

ModelSpec edges_model(double theta_f, double theta_d) {
    ModelSpec m;
    m.formation = {{StatisticTerm::edges(), theta_f}};
    m.dissolution = {{StatisticTerm::edges(), theta_d}};
    return m;
}

ActorTable actors_of(int n) {
    ActorTable t;
    for (int i = 0; i < n; ++i) {
        t.add(i % 2 == 0 ? "M" : "F", i % 3 == 0 ? "B" : "W", 240 + 24 * i);
    }
    return t;
}

// Stationary on-probability of a two-state chain from the leading left eigenvector.
double two_state_stationary(double form, double dissolve) {
    Eigen::Matrix2d p;
    p << 1.0 - form, form, dissolve, 1.0 - dissolve;
    Eigen::EigenSolver<Eigen::Matrix2d> es(p.transpose());
    int lead = std::abs(es.eigenvalues()[0].real() - 1.0) < std::abs(es.eigenvalues()[1].real() - 1.0) ? 0 : 1;
    const Eigen::Vector2d v = es.eigenvectors().col(lead).real();
    return v[1] / (v[0] + v[1]);
}

double chi_square_p(const std::vector<double> &observed, const std::vector<double> &expected, int df) {
    double stat = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        stat += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
    }
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), stat));
}

} // namespace

TEST_CASE("edges/edges stationary probability") {
    CHECK(edges_stationary_density(0.0, 0.0) == doctest::Approx(0.5));
    CHECK(edges_stationary_density(-3.0, 2.0) ==
          doctest::Approx((1 + std::exp(2.0)) / (2 + std::exp(3.0) + std::exp(2.0))).epsilon(1e-14));
    CHECK(edges_stationary_density(-3.0, 2.0) == doctest::Approx(0.2846).epsilon(1e-4));
    CHECK(edges_stationary_density(-inf, 2.0) == 0.0);
    const DyadRates rates{{1.0}, {1.0}};
    const std::vector<double> tf{-3.0}, td{2.0};
    CHECK(stationary_tie_probability(rates, tf, td) == doctest::Approx(edges_stationary_density(-3.0, 2.0)));
    CHECK(stationary_tie_odds(-3.0, 2.0) == doctest::Approx((1 + std::exp(2.0)) / (1 + std::exp(3.0))));
}

TEST_CASE("two-actor chain visits the tie at the stationary rate") {
    const ActorTable t = actors_of(2);
    Chain chain(edges_model(-3.0, 2.0), t, NetworkState{}, 31);
    std::vector<double> on;
    const int steps = 200000;
    on.reserve(steps);
    for (int s = 0; s < steps; ++s) {
        chain.step();
        on.push_back(static_cast<double>(chain.state().edge_count()));
    }
    const double se = std::sqrt(sample_variance(on) / effective_sample_size(on));
    CHECK(std::abs(mean(on) - edges_stationary_density(-3.0, 2.0)) < 3.0 * se);
}

TEST_CASE("stationary network pmf") {
    const ActorTable t = actors_of(4);
    CHECK(stationary_network_logpmf(NetworkState{}, t, edges_model(0.0, 0.0)) ==
          doctest::Approx(6.0 * std::log(0.5)));

    ModelSpec m;
    m.formation = {{StatisticTerm::edges(), -0.7}, {StatisticTerm::same_category(Attribute::race), 1.3},
                   {StatisticTerm::age_difference(AgeDifferenceForm::abs_diff), -0.2}};
    m.dissolution = {{StatisticTerm::edges(), 1.5}, {StatisticTerm::activity(Attribute::sex, "F"), -0.4}};
    ExactSum total;
    for (unsigned mask = 0; mask < 64; ++mask) {
        NetworkState net;
        int k = 0;
        for (int i = 0; i < 4; ++i) {
            for (int j = i + 1; j < 4; ++j, ++k) {
                if (mask & (1u << k)) {
                    net.add_tie(Dyad{i, j});
                }
            }
        }
        total.add(std::exp(stationary_network_logpmf(net, t, m)));
    }
    CHECK(total.value() == doctest::Approx(1.0).epsilon(1e-13));

    const StepEngine engine(m, t);
    for (const auto &[d, p] : stationary_dyad_probabilities(t, m)) {
        const double form = ilogit(engine.formation_log_odds(d));
        const double dissolve = 1.0 - ilogit(engine.dissolution_log_odds(d));
        CHECK(p == doctest::Approx(two_state_stationary(form, dissolve)).epsilon(1e-12));
    }

    ModelSpec dependent = m;
    dependent.formation.push_back({StatisticTerm::degree1(), 0.5});
    CHECK_THROWS_AS(stationary_network_logpmf(NetworkState{}, t, dependent), UnsupportedModelError);
}

TEST_CASE("duration pmfs") {
    for (double p : {0.02, 0.1, 0.5, 0.9}) {
        for (long x = 1; x < 200; ++x) {
            CHECK(observed_age_pmf(x, p) == doctest::Approx(duration_pmf(x, p)).epsilon(1e-12));
            CHECK(duration_pmf(x, p) == doctest::Approx(std::pow(1 - p, x - 1) * p).epsilon(1e-12));
            CHECK(observed_duration_pmf(x, p) == doctest::Approx(x * p * p * std::pow(1 - p, x - 1)).epsilon(1e-12));
        }
    }
    ExactSum s;
    for (long x = 1; x <= 10000; ++x) {
        s.add(observed_duration_pmf(x, 0.1));
    }
    CHECK(s.value() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(duration_pmf(1, 1.0) == 1.0);
    CHECK(observed_duration_pmf(1, 1.0) == 1.0);
    CHECK(observed_age_pmf(1, 1.0) == 1.0);
    CHECK(duration_pmf(2, 1.0) == 0.0);
    CHECK(observed_duration_pmf(3, 1.0) == 0.0);
    CHECK(duration_cdf(3, 0.5) == doctest::Approx(0.875));
    CHECK(dissolution_probability(logit(0.9)) == doctest::Approx(0.1).epsilon(1e-12));

    SUBCASE("generic transforms reproduce the geometric case") {
        const DurationPmf geom = [](long x) { return duration_pmf(x, 0.2); };
        CHECK(duration_mean(geom) == doctest::Approx(5.0).epsilon(1e-10));
        for (long x = 1; x < 40; ++x) {
            CHECK(observed_age_pmf(x, geom) == doctest::Approx(duration_pmf(x, 0.2)).epsilon(1e-9));
            CHECK(observed_duration_pmf(x, geom) == doctest::Approx(observed_duration_pmf(x, 0.2)).epsilon(1e-9));
        }
    }
    SUBCASE("a non-geometric duration has distinct age and duration laws") {
        // Uniform on {1..4}: ages are (1 - F(x-1)) / 2.5.
        const DurationPmf unif = [](long x) { return x >= 1 && x <= 4 ? 0.25 : 0.0; };
        CHECK(duration_mean(unif) == doctest::Approx(2.5));
        CHECK(observed_age_pmf(1, unif) == doctest::Approx(0.4));
        CHECK(observed_age_pmf(4, unif) == doctest::Approx(0.1));
        CHECK(observed_duration_pmf(4, unif) == doctest::Approx(0.4));
    }
}

TEST_CASE("size offset") {
    CHECK(offset_mean_degree_limit(0.0, 0.0) == doctest::Approx(2.0));
    CHECK(offset_mean_degree_limit(0.0, logit(0.9)) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(size_offset_coefficient(1000.0) == doctest::Approx(-6.907755).epsilon(1e-6));
    // n = 2: a single dyad with log-odds shifted by log(1/2).
    CHECK(offset_mean_degree(2.0, 0.4, 1.1) ==
          doctest::Approx(edges_stationary_density(0.4 - std::log(2.0), 1.1)).epsilon(1e-14));
    double previous_gap = inf;
    for (double n : {10.0, 100.0, 1000.0, 1e5}) {
        const double gap = std::abs(offset_mean_degree(n, -1.0, std::log(9.0)) - offset_mean_degree_limit(-1.0, std::log(9.0)));
        CHECK(gap < previous_gap);
        previous_gap = gap;
    }
    CHECK(previous_gap < 1e-3);
}

TEST_CASE("isolate moment estimator") {
    const double theta = isolate_gmme(10, 5.0);
    CHECK(theta == doctest::Approx(logit(1.0 - std::pow(0.5, 1.0 / 9.0))).epsilon(1e-14));
    CHECK(theta == doctest::Approx(-2.5249).epsilon(1e-4));
    CHECK(isolate_expected_count(10, theta) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK_THROWS_AS(isolate_gmme(10, 10.0), BoundaryError);
    CHECK_THROWS_AS(isolate_gmme(10, 0.0), BoundaryError);
    Rng rng(3);
    for (int k = 0; k < 100; ++k) {
        const int n = 3 + static_cast<int>(rng.below(200));
        const double t = 1 + static_cast<double>(rng.below(static_cast<std::uint64_t>(n - 1)));
        CHECK(isolate_expected_count(n, isolate_gmme(n, t)) == doctest::Approx(t).epsilon(1e-9));
    }
}

TEST_CASE("long-run tie frequency agrees with the stationary closed form") {
    const ActorTable t = actors_of(10);
    ModelSpec m;
    m.formation = {{StatisticTerm::edges(), -1.2}, {StatisticTerm::same_category(Attribute::race), 0.9}};
    m.dissolution = {{StatisticTerm::edges(), 1.4}};
    TargetSpec spec;
    spec.terms = {StatisticTerm::edges(), StatisticTerm::same_category(Attribute::race)};
    ChainConfig cfg;
    cfg.burnin_steps = 100;
    cfg.samples = 20000;
    cfg.rng_seed = 8;
    const ChainRun run = run_chain(NetworkState{}, t, m, cfg, spec);
    double expected_edges = 0.0, expected_same = 0.0;
    for (const auto &[d, p] : stationary_dyad_probabilities(t, m)) {
        expected_edges += p;
        if (t.at(d.lo).race == t.at(d.hi).race) {
            expected_same += p;
        }
    }
    for (std::size_t k = 0; k < 2; ++k) {
        std::vector<double> xs;
        for (const auto &row : run.replicates[0]) {
            xs.push_back(row[k]);
        }
        const double se = std::sqrt(sample_variance(xs) / effective_sample_size(xs));
        CHECK(std::abs(mean(xs) - (k == 0 ? expected_edges : expected_same)) < 3.0 * se);
    }
}

TEST_CASE("density drifts toward the stationary value") {
    const ActorTable t = actors_of(30);
    const ModelSpec m = edges_model(-2.0, 1.0);
    const double target = edges_stationary_density(-2.0, 1.0);
    const StepEngine engine(m, t);
    NetworkState full;
    for (int i = 0; i < 30; ++i) {
        for (int j = i + 1; j < 30; ++j) {
            full.add_tie(Dyad{i, j});
        }
    }
    const double dyads = 435.0;
    for (const NetworkState &init : {full, NetworkState{}}) {
        const double d0 = init.edge_count() / dyads;
        double d1 = 0.0;
        for (std::uint64_t r = 0; r < 200; ++r) {
            d1 += compose_step(init, engine.sample_step(init, r)).edge_count() / dyads;
        }
        d1 /= 200.0;
        CHECK(std::abs(d1 - target) < std::abs(d0 - target));
        CHECK((d1 - d0) * (target - d0) > 0.0);
    }
}

TEST_CASE("simulated durations are memoryless and extant ages follow the observed-age law") {
    const ActorTable t = actors_of(30);
    const double p = 0.1;
    Chain chain(edges_model(-3.0, logit(1.0 - p)), t, NetworkState{}, 77);
    chain.advance(200);
    constexpr int bins = 15;
    std::vector<double> at_risk(bins, 0.0), ended(bins, 0.0), ages(bins + 1, 0.0);
    double age_samples = 0.0;
    for (int s = 0; s < 20000; ++s) {
        const NetworkState before = chain.state();
        const PhaseOutcome out = chain.step();
        std::map<Dyad, bool> dissolved;
        for (const Dyad &d : out.dissolved) {
            dissolved[d] = true;
        }
        for (const auto &[d, onset] : before.ties()) {
            const int age = before.age(d);
            if (age <= bins) {
                at_risk[age - 1] += 1;
                ended[age - 1] += dissolved.contains(d) ? 1 : 0;
            }
        }
        if (s % 50 == 0) {
            for (const auto &[d, onset] : chain.state().ties()) {
                const int age = chain.state().age(d);
                ages[std::min(age, bins + 1) - 1] += 1;
                age_samples += 1;
            }
        }
    }
    SUBCASE("constant hazard") {
        double total_risk = 0.0, total_end = 0.0;
        for (int k = 0; k < bins; ++k) {
            total_risk += at_risk[k];
            total_end += ended[k];
        }
        const double h = total_end / total_risk;
        CHECK(std::abs(h - p) < 0.01);
        // Two-row contingency table, ended vs survived per age.
        std::vector<double> obs, exp;
        for (int k = 0; k < bins; ++k) {
            obs.push_back(ended[k]);
            exp.push_back(at_risk[k] * h);
            obs.push_back(at_risk[k] - ended[k]);
            exp.push_back(at_risk[k] * (1 - h));
        }
        CHECK(chi_square_p(obs, exp, bins - 1) > 0.001);
    }
    SUBCASE("extant ages") {
        std::vector<double> exp;
        double mass = 0.0;
        for (int k = 1; k <= bins; ++k) {
            exp.push_back(age_samples * observed_age_pmf(k, p));
            mass += observed_age_pmf(k, p);
        }
        exp.push_back(age_samples * (1.0 - mass));
        CHECK(age_samples > 2000.0);
        CHECK(chi_square_p(ages, exp, bins) > 0.001);
    }
}
