#pragma once

#include "stergm/dynamics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace stergm {

/// (mu - t)' V^{-1} (mu - t). NumericalError when V is not symmetric positive-definite.
double objective(const Eigen::VectorXd &mu, const Eigen::MatrixXd &V, const Eigen::VectorXd &t);

/// V + lambda I with lambda = 1e-6 trace(V) / dim (or 1e-12 for a zero matrix).
Eigen::MatrixXd ridge_regularize(const Eigen::MatrixXd &V);

struct MomentEstimate {
    std::vector<std::string> names;
    Eigen::VectorXd mu;
    Eigen::MatrixXd covariance;
    /// Effective sample size per target, summed over replicates.
    std::vector<double> ess;
    /// Monte Carlo standard error of each mean.
    std::vector<double> se;
    /// Target took a single value across all samples.
    std::vector<bool> degenerate;
    std::size_t sample_count = 0;

    bool any_degenerate() const;
};

/// Summarizes [replicate][sample][target] draws. NaN entries are dropped per target (and
/// per row for the covariance).
MomentEstimate summarize_samples(const std::vector<std::string> &names,
                                 const std::vector<std::vector<std::vector<double>>> &replicates);

MomentEstimate estimate_moments(const NetworkState &init, const ActorTable &actors,
                                const ModelSpec &model, const TargetSpec &spec,
                                const ChainConfig &config);

struct GradientEstimate {
    /// d target / d theta, targets by coefficients.
    Eigen::MatrixXd G;
    /// Fitted targets at the regression centre.
    Eigen::VectorXd intercept;
    /// Residual covariance of the targets given theta.
    Eigen::MatrixXd residual_covariance;
    std::size_t rows = 0;
};

/// Least-squares regression of targets on (theta - centre) with an intercept. Rows holding
/// NaN are skipped. RankDeficientError when fewer than dim + 2 rows remain or a coordinate
/// has no spread.
GradientEstimate estimate_gradient(const std::vector<Eigen::VectorXd> &thetas,
                                   const std::vector<Eigen::VectorXd> &targets,
                                   const Eigen::VectorXd &centre);

/// Edges dissolution coefficient whose geometric mean duration equals `mean_age_steps`:
/// -logit(1 / mean_age). DomainError for mean_age <= 1.
double dissolution_shortcut(double mean_age_steps);

struct FitConfig {
    double gain_a = 0.1;
    double gain_b = 20.0;
    /// Jitter standard deviation at the first iteration; decays with the gain, floored.
    double jitter = 0.1;
    double jitter_floor = 0.25;
    /// Iterations in the regression window; 0 means 20 times the free dimension.
    std::size_t window = 0;
    /// Iterations averaged into the estimate once the convergence rule first holds; 0 means
    /// five times the window length.
    std::size_t averaging = 0;
    std::size_t max_iterations = 1000;
    std::size_t min_iterations = 0;
    double tol_J = 0.5;
    std::size_t tol_J_patience = 5;
    double tol_theta = 1e-3;
    /// Largest per-coordinate update.
    double max_step = 1.0;
    /// Consecutive iterations a target may stay degenerate before the fit fails.
    std::size_t degeneracy_patience = 50;
    std::size_t replicates = 4;
    std::size_t steps_per_iteration = 10;
    std::size_t burnin = 200;
    std::size_t final_burnin = 200;
    std::size_t final_samples = 200;
    std::size_t final_interval = 10;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    SamplerConfig sampler;
    /// Derive starting values from the targets instead of the model's coefficients.
    bool initialize = true;

    void validate() const;
};

enum class FitStatus { converged, max_iterations, degenerate };

std::string fit_status_name(FitStatus s);

struct TraceRow {
    std::size_t iteration = 0;
    std::vector<double> theta;
    double J = 0.0;
    double gain = 0.0;
    bool warmup = false;
};

struct FitReport {
    FitStatus status = FitStatus::max_iterations;
    std::string message;
    std::string degenerate_target;
    std::size_t iterations = 0;
    std::vector<std::string> parameter_names;
    std::vector<std::string> target_names;
    std::vector<double> theta_init;
    std::vector<double> theta_hat;
    std::vector<double> t_obs;
    std::vector<double> mu_final;
    std::vector<double> mu_se;
    double J_final = 0.0;
    /// Asymptotic standard errors from (G' V^{-1} G)^{-1}; single-network validity is tenuous.
    std::vector<double> se;
    Eigen::MatrixXd asymptotic_covariance;
    /// Monte Carlo error of theta_hat implied by the final moment run's standard errors.
    std::vector<double> mc_se;
    Eigen::MatrixXd G;
    std::vector<TraceRow> trace;
    NetworkState final_state;
};

/// Starting coefficients: dissolution edges from the mean-age target, formation edges from
/// the equilibrium density implied by the edges target (with the offset correction), the
/// rest zero. Coordinates without a matching target keep the model's value.
std::vector<double> initial_theta(const ModelSpec &model, const ActorTable &actors,
                                  const TargetSpec &spec, const std::vector<double> &t_obs);

/// Stochastic-approximation fit of the free coefficients to `t_obs`.
FitReport fit(const NetworkState &init, const ActorTable &actors, const ModelSpec &model,
              const TargetSpec &spec, const std::vector<double> &t_obs, const FitConfig &config);

} // namespace stergm
