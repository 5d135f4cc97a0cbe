#pragma once

#include "stergm/dynamics.hpp"

#include <functional>
#include <span>
#include <vector>

namespace stergm {

/// Change statistics of one dyad: g0 applies to the formation phase (dyad empty at t-1),
/// g1 to the dissolution phase (dyad tied at t-1). The formation vector includes the size
/// offset as a last entry with coefficient 1 when present.
struct DyadRates {
    std::vector<double> g0;
    std::vector<double> g1;
};

/// Stationary odds of a tie: (1 + exp(theta_d . g1)) / (1 + exp(-theta_f . g0)).
double stationary_tie_odds(const DyadRates &rates, std::span<const double> theta_f,
                           std::span<const double> theta_d);
double stationary_tie_probability(const DyadRates &rates, std::span<const double> theta_f,
                                  std::span<const double> theta_d);

/// Same quantities from already-formed linear predictors.
double stationary_tie_odds(double formation_eta, double survival_eta);
double stationary_tie_probability(double formation_eta, double survival_eta);

/// Edges/edges stationary density (1 + e^{theta_d}) / (2 + e^{-theta_f} + e^{theta_d}).
double edges_stationary_density(double theta_f, double theta_d);

/// Log-probability of `net` under the stationary distribution of a dyad-independent model;
/// UnsupportedModelError otherwise.
double stationary_network_logpmf(const NetworkState &net, const ActorTable &actors,
                                 const ModelSpec &model);

/// Per-dyad stationary tie probabilities in dyad-space order.
std::vector<std::pair<Dyad, double>> stationary_dyad_probabilities(const ActorTable &actors,
                                                                   const ModelSpec &model);

/// Geometric duration on {1, 2, ...} with per-step dissolution probability p in (0, 1].
double duration_pmf(long x, double p);
double duration_cdf(long x, double p);
/// Length-biased duration of a tie observed in cross-section: x p^2 (1-p)^{x-1}.
double observed_duration_pmf(long x, double p);
/// Age of a tie observed in cross-section: (1 - F(x-1)) / E(X), equal to duration_pmf.
double observed_age_pmf(long x, double p);

/// Per-step dissolution probability of an edges-only dissolution coefficient.
double dissolution_probability(double theta_d);

/// Generic duration pmf on {1, 2, ...} for the observed-duration and observed-age transforms.
using DurationPmf = std::function<double(long)>;
/// E(X) by series, truncated once the remaining tail mass falls below 1e-12.
double duration_mean(const DurationPmf &pmf);
double observed_duration_pmf(long x, const DurationPmf &pmf);
double observed_age_pmf(long x, const DurationPmf &pmf);

/// Offset edges/edges mean degree (n-1) P at population size n >= 2.
double offset_mean_degree(double n, double theta_f, double theta_d);
/// Large-n limit e^{theta_f} + e^{theta_f + theta_d}.
double offset_mean_degree_limit(double theta_f, double theta_d);

/// log(1/n), the fixed size-offset coefficient.
double size_offset_coefficient(double n);

/// Expected isolates in an Erdos-Renyi graph: n (1 - ilogit(theta))^{n-1}.
double isolate_expected_count(int n, double theta);
/// Edges coefficient matching an observed isolate count; BoundaryError for t in {0, n}.
double isolate_gmme(int n, double observed_isolates);

} // namespace stergm
