#include "stergm/equilibrium.hpp"

#include "stergm/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stergm {

namespace {

// log of the stationary odds, log(1 + e^{s}) - log(1 + e^{-f}).
double log_odds(double formation_eta, double survival_eta) {
    const double lo = log1p_exp(survival_eta) - log1p_exp(-formation_eta);
    if (std::isnan(lo)) {
        throw DomainError("stationary tie probability is undefined for a frozen dyad");
    }
    return lo;
}

} // namespace

double stationary_tie_odds(double formation_eta, double survival_eta) {
    return std::exp(log_odds(formation_eta, survival_eta));
}

double stationary_tie_probability(double formation_eta, double survival_eta) {
    return ilogit(log_odds(formation_eta, survival_eta));
}

double stationary_tie_odds(const DyadRates &rates, std::span<const double> theta_f,
                           std::span<const double> theta_d) {
    if (rates.g0.size() != theta_f.size() || rates.g1.size() != theta_d.size()) {
        throw ContractError("dyad rate dimensions do not match the coefficients");
    }
    return stationary_tie_odds(linear_predictor(theta_f, rates.g0), linear_predictor(theta_d, rates.g1));
}

double stationary_tie_probability(const DyadRates &rates, std::span<const double> theta_f,
                                  std::span<const double> theta_d) {
    if (rates.g0.size() != theta_f.size() || rates.g1.size() != theta_d.size()) {
        throw ContractError("dyad rate dimensions do not match the coefficients");
    }
    return stationary_tie_probability(linear_predictor(theta_f, rates.g0),
                                      linear_predictor(theta_d, rates.g1));
}

double edges_stationary_density(double theta_f, double theta_d) {
    return stationary_tie_probability(theta_f, theta_d);
}

std::vector<std::pair<Dyad, double>> stationary_dyad_probabilities(const ActorTable &actors,
                                                                   const ModelSpec &model) {
    if (!model.dyad_independent()) {
        throw UnsupportedModelError(
            "closed-form stationary distribution requires temporally dyad-independent terms");
    }
    const StepEngine engine(model, actors);
    std::vector<std::pair<Dyad, double>> out;
    model.dyad_space.for_each(actors, [&](Dyad d) {
        out.emplace_back(d, stationary_tie_probability(engine.formation_log_odds(d),
                                                       engine.dissolution_log_odds(d)));
    });
    return out;
}

double stationary_network_logpmf(const NetworkState &net, const ActorTable &actors,
                                 const ModelSpec &model) {
    if (!model.dyad_independent()) {
        throw UnsupportedModelError(
            "closed-form stationary distribution requires temporally dyad-independent terms");
    }
    validate_network(net, actors, model.dyad_space);
    const StepEngine engine(model, actors);
    ExactSum total;
    model.dyad_space.for_each(actors, [&](Dyad d) {
        const double lo = log_odds(engine.formation_log_odds(d), engine.dissolution_log_odds(d));
        total.add(net.has_tie(d) ? -log1p_exp(-lo) : -log1p_exp(lo));
    });
    return total.value();
}

namespace {

void check_p(double p) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw DomainError("dissolution probability " + std::to_string(p) + " outside (0, 1]");
    }
}

double survival(long x, double p) {
    // P(X > x) = (1 - p)^x
    return std::pow(1.0 - p, static_cast<double>(x));
}

} // namespace

double duration_pmf(long x, double p) {
    check_p(p);
    if (x < 1) {
        return 0.0;
    }
    return p * survival(x - 1, p);
}

double duration_cdf(long x, double p) {
    check_p(p);
    if (x < 1) {
        return 0.0;
    }
    return 1.0 - survival(x, p);
}

double observed_duration_pmf(long x, double p) {
    check_p(p);
    if (x < 1) {
        return 0.0;
    }
    return static_cast<double>(x) * p * p * survival(x - 1, p);
}

double observed_age_pmf(long x, double p) {
    check_p(p);
    if (x < 1) {
        return 0.0;
    }
    // (1 - F(x - 1)) / E(X) with E(X) = 1/p.
    return p * survival(x - 1, p);
}

double dissolution_probability(double theta_d) {
    return ilogit(-theta_d);
}

double duration_mean(const DurationPmf &pmf) {
    constexpr long kMaxTerms = 100'000'000;
    double mass = 0.0;
    ExactSum mean;
    for (long x = 1; x <= kMaxTerms; ++x) {
        const double f = pmf(x);
        if (f < 0.0) {
            throw DomainError("negative duration probability at " + std::to_string(x));
        }
        mass += f;
        mean.add(static_cast<double>(x) * f);
        if (1.0 - mass < 1e-12) {
            return mean.value();
        }
    }
    throw NumericalError("duration pmf tail did not vanish within the series limit");
}

double observed_duration_pmf(long x, const DurationPmf &pmf) {
    if (x < 1) {
        return 0.0;
    }
    return static_cast<double>(x) * pmf(x) / duration_mean(pmf);
}

double observed_age_pmf(long x, const DurationPmf &pmf) {
    if (x < 1) {
        return 0.0;
    }
    double cdf = 0.0;
    for (long k = 1; k < x; ++k) {
        cdf += pmf(k);
    }
    return std::max(0.0, 1.0 - cdf) / duration_mean(pmf);
}

double offset_mean_degree(double n, double theta_f, double theta_d) {
    if (!(n >= 2.0)) {
        throw DomainError("offset mean degree needs n >= 2");
    }
    return (n - 1.0) * stationary_tie_probability(theta_f + size_offset_coefficient(n), theta_d);
}

double offset_mean_degree_limit(double theta_f, double theta_d) {
    return std::exp(theta_f) + std::exp(theta_f + theta_d);
}

double size_offset_coefficient(double n) {
    if (!(n >= 1.0)) {
        throw DomainError("size offset needs at least one actor");
    }
    return -std::log(n);
}

double isolate_expected_count(int n, double theta) {
    return n * std::pow(1.0 - ilogit(theta), n - 1);
}

double isolate_gmme(int n, double observed_isolates) {
    if (n < 2) {
        throw DomainError("isolate estimate needs n >= 2");
    }
    if (!(observed_isolates >= 0.0 && observed_isolates <= n)) {
        throw DomainError("observed isolates outside [0, n]");
    }
    if (observed_isolates == 0.0 || observed_isolates == n) {
        throw BoundaryError("isolate count " + std::to_string(observed_isolates) +
                            " puts the estimate at infinity");
    }
    const double q = std::pow(observed_isolates / n, 1.0 / (n - 1));
    return logit(1.0 - q);
}

} // namespace stergm
