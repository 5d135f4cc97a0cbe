#include "stergm/egmme.hpp"

#include "stergm/equilibrium.hpp"
#include "stergm/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <optional>

namespace stergm {

double objective(const Eigen::VectorXd &mu, const Eigen::MatrixXd &V, const Eigen::VectorXd &t) {
    if (mu.size() != t.size() || V.rows() != mu.size() || V.cols() != mu.size()) {
        throw ContractError("objective dimensions do not agree");
    }
    if (mu.size() == 0) {
        return 0.0;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(V);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("moment covariance is not positive definite");
    }
    const Eigen::VectorXd r = mu - t;
    const Eigen::VectorXd z = llt.matrixL().solve(r);
    return z.squaredNorm();
}

Eigen::MatrixXd ridge_regularize(const Eigen::MatrixXd &V) {
    const auto dim = static_cast<double>(V.rows());
    if (dim == 0) {
        return V;
    }
    const double tr = V.trace();
    const double lambda = tr > 0.0 ? 1e-6 * tr / dim : 1e-12;
    Eigen::MatrixXd out = 0.5 * (V + V.transpose());
    out.diagonal().array() += lambda;
    return out;
}

bool MomentEstimate::any_degenerate() const {
    return std::any_of(degenerate.begin(), degenerate.end(), [](bool b) { return b; });
}

MomentEstimate summarize_samples(const std::vector<std::string> &names,
                                 const std::vector<std::vector<std::vector<double>>> &replicates) {
    const std::size_t k = names.size();
    MomentEstimate m;
    m.names = names;
    m.mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    m.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    m.ess.assign(k, 0.0);
    m.se.assign(k, std::numeric_limits<double>::quiet_NaN());
    m.degenerate.assign(k, false);

    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> all;
        double ess = 0.0;
        for (const auto &rep : replicates) {
            std::vector<double> series;
            for (const auto &row : rep) {
                if (!std::isnan(row[j])) {
                    series.push_back(row[j]);
                }
            }
            ess += effective_sample_size(series);
            all.insert(all.end(), series.begin(), series.end());
        }
        if (all.empty()) {
            m.mu[static_cast<Eigen::Index>(j)] = std::numeric_limits<double>::quiet_NaN();
            m.degenerate[j] = true;
            continue;
        }
        const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
        m.degenerate[j] = *lo == *hi;
        m.mu[static_cast<Eigen::Index>(j)] = mean(all);
        m.ess[j] = ess;
        m.se[j] = ess > 0.0 ? std::sqrt(sample_variance(all) / ess) : 0.0;
    }

    std::vector<const std::vector<double> *> complete;
    for (const auto &rep : replicates) {
        for (const auto &row : rep) {
            if (std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) {
                complete.push_back(&row);
            }
        }
    }
    m.sample_count = complete.size();
    if (complete.size() >= 2) {
        Eigen::VectorXd centre = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
        for (const auto *row : complete) {
            centre += Eigen::Map<const Eigen::VectorXd>(row->data(), static_cast<Eigen::Index>(k));
        }
        centre /= static_cast<double>(complete.size());
        for (const auto *row : complete) {
            const Eigen::VectorXd d =
                Eigen::Map<const Eigen::VectorXd>(row->data(), static_cast<Eigen::Index>(k)) - centre;
            m.covariance += d * d.transpose();
        }
        m.covariance /= static_cast<double>(complete.size() - 1);
    }
    return m;
}

MomentEstimate estimate_moments(const NetworkState &init, const ActorTable &actors,
                                const ModelSpec &model, const TargetSpec &spec,
                                const ChainConfig &config) {
    const ChainRun run = run_chain(init, actors, model, config, spec);
    return summarize_samples(run.names, run.replicates);
}

GradientEstimate estimate_gradient(const std::vector<Eigen::VectorXd> &thetas,
                                   const std::vector<Eigen::VectorXd> &targets,
                                   const Eigen::VectorXd &centre) {
    if (thetas.size() != targets.size()) {
        throw ContractError("gradient history has mismatched lengths");
    }
    const Eigen::Index p = centre.size();
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        if (!targets[i].hasNaN() && !thetas[i].hasNaN()) {
            rows.push_back(i);
        }
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n < p + 2) {
        throw RankDeficientError("gradient regression needs at least " + std::to_string(p + 2) +
                                 " usable rows, have " + std::to_string(n));
    }
    const Eigen::Index k = targets[rows.front()].size();
    Eigen::MatrixXd X(n, p + 1);
    Eigen::MatrixXd Y(n, k);
    for (Eigen::Index r = 0; r < n; ++r) {
        X(r, 0) = 1.0;
        X.row(r).tail(p) = (thetas[rows[static_cast<std::size_t>(r)]] - centre).transpose();
        Y.row(r) = targets[rows[static_cast<std::size_t>(r)]].transpose();
    }
    for (Eigen::Index c = 1; c <= p; ++c) {
        if (X.col(c).maxCoeff() == X.col(c).minCoeff()) {
            throw RankDeficientError("coefficient " + std::to_string(c - 1) +
                                     " has no spread in the gradient window");
        }
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p + 1) {
        throw RankDeficientError("gradient regression design is rank deficient");
    }
    const Eigen::MatrixXd B = qr.solve(Y);
    GradientEstimate g;
    g.intercept = B.row(0).transpose();
    g.G = B.bottomRows(p).transpose();
    const Eigen::MatrixXd resid = Y - X * B;
    g.residual_covariance = resid.transpose() * resid / static_cast<double>(n - p - 1);
    g.rows = static_cast<std::size_t>(n);
    return g;
}

double dissolution_shortcut(double mean_age_steps) {
    if (!(mean_age_steps > 1.0)) {
        throw DomainError("mean age must exceed one time step for the dissolution shortcut");
    }
    return -logit(1.0 / mean_age_steps);
}

void FitConfig::validate() const {
    if (!(gain_a > 0.0) || !(gain_b > 0.0)) {
        throw ConfigError("gain parameters must be positive");
    }
    if (!(jitter > 0.0) || jitter_floor < 0.0) {
        throw ConfigError("jitter must be positive");
    }
    if (replicates == 0 || steps_per_iteration == 0 || final_samples == 0 || final_interval == 0) {
        throw ConfigError("replicates, steps per iteration and final samples must be positive");
    }
    if (!(tol_J > 0.0) || tol_J_patience == 0) {
        throw ConfigError("convergence tolerance must be positive");
    }
}

std::string fit_status_name(FitStatus s) {
    switch (s) {
    case FitStatus::converged:
        return "converged";
    case FitStatus::max_iterations:
        return "max_iterations";
    case FitStatus::degenerate:
        return "degenerate";
    }
    return "?";
}

std::vector<double> initial_theta(const ModelSpec &model, const ActorTable &actors,
                                  const TargetSpec &spec, const std::vector<double> &t_obs) {
    const std::vector<std::string> names = spec.names();
    auto target = [&](const std::string &name) -> std::optional<double> {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name && i < t_obs.size() && std::isfinite(t_obs[i])) {
                return t_obs[i];
            }
        }
        return std::nullopt;
    };

    ModelSpec m = model;
    double theta_d_edges = std::numeric_limits<double>::quiet_NaN();
    for (PhaseTerm &p : m.dissolution) {
        if (p.fixed) {
            if (p.term.kind == TermKind::edges) {
                theta_d_edges = p.theta;
            }
            continue;
        }
        if (p.term.kind == TermKind::edges) {
            if (const auto age = target("mean-tie-age"); age && *age > 1.0) {
                p.theta = dissolution_shortcut(*age);
            }
            theta_d_edges = p.theta;
        } else {
            p.theta = 0.0;
        }
    }
    const auto n = static_cast<double>(actors.active_count());
    const auto dyads = static_cast<double>(m.dyad_space.size(actors));
    for (PhaseTerm &p : m.formation) {
        if (p.fixed) {
            continue;
        }
        if (p.term.kind != TermKind::edges) {
            p.theta = 0.0;
            continue;
        }
        auto edges = target("edges");
        if (!edges || dyads <= 0.0) {
            continue;
        }
        double count = *edges;
        if (spec.normalization == Normalization::per_capita_by_group) {
            count *= n;
        }
        const double density = count / dyads;
        if (!(density > 0.0 && density < 1.0)) {
            continue;
        }
        const double survive = std::isfinite(theta_d_edges) ? std::exp(theta_d_edges) : 0.0;
        // Invert density = (1 + s) / (2 + e^{-eta} + s) for eta.
        const double e_minus = (1.0 + survive) * (1.0 - density) / density - 1.0;
        double eta = e_minus > 0.0 ? -std::log(e_minus) : logit(density);
        if (m.size_offset) {
            eta -= size_offset_coefficient(n);
        }
        p.theta = eta;
    }
    return m.free_theta();
}

namespace {

Eigen::VectorXd to_eigen(const std::vector<double> &v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd &v) {
    return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd select(const Eigen::VectorXd &v, const std::vector<Eigen::Index> &idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    }
    return out;
}

Eigen::MatrixXd select(const Eigen::MatrixXd &m, const std::vector<Eigen::Index> &idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            out(a, b) = m(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
        }
    }
    return out;
}

struct HistoryRow {
    std::size_t iteration;
    Eigen::VectorXd theta;
    Eigen::VectorXd target;
};

// Information matrix G' V^{-1} G and the weighting V^{-1} G.
struct Weighted {
    Eigen::MatrixXd info;
    Eigen::MatrixXd vinv_g;
};

Weighted weigh(const Eigen::MatrixXd &G, const Eigen::MatrixXd &V) {
    const Eigen::LLT<Eigen::MatrixXd> llt(V);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("moment covariance is not positive definite");
    }
    Weighted w;
    w.vinv_g = llt.solve(G);
    w.info = G.transpose() * w.vinv_g;
    return w;
}

} // namespace

FitReport fit(const NetworkState &init, const ActorTable &actors, const ModelSpec &model,
              const TargetSpec &spec, const std::vector<double> &t_obs, const FitConfig &config) {
    config.validate();
    const std::vector<std::string> names = spec.names();
    if (t_obs.size() != names.size()) {
        throw ContractError("observed targets do not match the target spec");
    }
    const std::size_t p = model.free_dim();
    const std::size_t k = names.size();
    if (k < p) {
        throw ConfigError("fewer targets (" + std::to_string(k) + ") than free coefficients (" +
                          std::to_string(p) + ")");
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (!std::isfinite(t_obs[j])) {
            throw ConfigError("observed target '" + names[j] + "' is not finite");
        }
    }
    validate_network(init, actors, model.dyad_space);

    FitReport rep;
    rep.parameter_names = model.free_names();
    rep.target_names = names;
    rep.t_obs = t_obs;
    rep.theta_init = config.initialize ? initial_theta(model, actors, spec, t_obs) : model.free_theta();
    for (std::size_t i = 0; i < p; ++i) {
        if (!std::isfinite(rep.theta_init[i])) {
            throw ConfigError("starting value of '" + rep.parameter_names[i] + "' is not finite");
        }
    }

    ModelSpec start = model;
    start.set_free_theta(rep.theta_init);
    const StatEvaluator structural(actors, spec.terms);
    const std::uint64_t chain_seed = derive_seed(config.seed, {1});
    std::vector<std::unique_ptr<Chain>> chains;
    for (std::size_t r = 0; r < config.replicates; ++r) {
        chains.push_back(std::make_unique<Chain>(start, actors, init, chain_seed, r, config.sampler));
    }
    parallel_for(chains.size(), config.threads, [&](std::size_t r) { chains[r]->advance(config.burnin); });

    const Eigen::VectorXd t_all = to_eigen(t_obs);
    Eigen::VectorXd theta = to_eigen(rep.theta_init);
    const std::size_t window = config.window > 0 ? config.window : 20 * std::max<std::size_t>(p, 1);
    const std::size_t averaging = config.averaging > 0 ? config.averaging : 5 * window;
    // The slope uses the whole window; the level near theta only the most recent iterations,
    // so points left behind by earlier moves do not bias it through curvature.
    const std::size_t local = std::max<std::size_t>(5, window / 4);
    const std::size_t warmup = local;
    std::deque<HistoryRow> history;
    std::vector<Eigen::VectorXd> averaged;
    bool averaging_phase = false;
    Rng jitter_rng(derive_seed(config.seed, {2}));
    std::vector<std::size_t> degenerate_run(k, 0);
    std::size_t updates = 0;
    std::size_t below_tol = 0;
    bool done = false;
    std::optional<GradientEstimate> last_gradient;
    std::vector<Eigen::Index> last_active;

    for (std::size_t iter = 1; iter <= config.max_iterations && p > 0 && !done; ++iter) {
        rep.iterations = iter;
        const double gain = config.gain_a / (1.0 + static_cast<double>(updates) / config.gain_b);
        const double sd = config.jitter * std::max(gain / config.gain_a, config.jitter_floor);
        std::vector<Eigen::VectorXd> jittered(chains.size());
        for (auto &j : jittered) {
            j = theta;
            for (Eigen::Index c = 0; c < j.size(); ++c) {
                j[c] += sd * jitter_rng.normal();
            }
        }
        std::vector<std::vector<double>> draws(chains.size());
        parallel_for(chains.size(), config.threads, [&](std::size_t r) {
            const std::vector<double> th = to_std(jittered[r]);
            chains[r]->engine().set_free_theta(th);
            chains[r]->advance(config.steps_per_iteration);
            draws[r] = eval_targets_lenient(chains[r]->state(), actors, spec, structural);
        });
        for (std::size_t r = 0; r < chains.size(); ++r) {
            history.push_back({iter, jittered[r], to_eigen(draws[r])});
        }
        while (!history.empty() && history.front().iteration + window <= iter) {
            history.pop_front();
        }

        TraceRow row;
        row.iteration = iter;
        row.theta = to_std(theta);
        row.gain = gain;
        row.J = std::numeric_limits<double>::quiet_NaN();
        if (iter < warmup) {
            row.warmup = true;
            rep.trace.push_back(std::move(row));
            continue;
        }

        // Targets pinned at one value over the window carry no gradient information.
        std::vector<Eigen::Index> active;
        for (std::size_t j = 0; j < k; ++j) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (const HistoryRow &h : history) {
                const double v = h.target[static_cast<Eigen::Index>(j)];
                if (!std::isnan(v)) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
            if (hi > lo) {
                active.push_back(static_cast<Eigen::Index>(j));
                degenerate_run[j] = 0;
            } else if (++degenerate_run[j] >= config.degeneracy_patience) {
                rep.status = FitStatus::degenerate;
                rep.degenerate_target = names[j];
                rep.message = "target '" + names[j] +
                              "' stayed at one value across the simulated window; the observed "
                              "value may lie on the boundary of the achievable statistics";
                done = true;
                break;
            }
        }
        if (done) {
            rep.trace.push_back(std::move(row));
            break;
        }
        if (active.size() < p) {
            rep.trace.push_back(std::move(row));
            continue;
        }

        std::vector<Eigen::VectorXd> hx;
        std::vector<Eigen::VectorXd> hy;
        for (const HistoryRow &h : history) {
            hx.push_back(h.theta);
            hy.push_back(select(h.target, active));
        }
        GradientEstimate g;
        try {
            g = estimate_gradient(hx, hy, theta);
        } catch (const RankDeficientError &) {
            rep.trace.push_back(std::move(row));
            continue;
        }
        const Eigen::MatrixXd V = ridge_regularize(g.residual_covariance);
        const Eigen::VectorXd t_act = select(t_all, active);
        Eigen::VectorXd level = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(active.size()));
        std::size_t level_rows = 0;
        for (const HistoryRow &h : history) {
            if (h.iteration + local <= iter) {
                continue;
            }
            const Eigen::VectorXd y = select(h.target, active);
            if (y.hasNaN()) {
                continue;
            }
            level += y - g.G * (h.theta - theta);
            ++level_rows;
        }
        level = level_rows > 0 ? Eigen::VectorXd(level / static_cast<double>(level_rows)) : g.intercept;
        const Eigen::VectorXd resid = level - t_act;
        row.J = objective(level, V, t_act);
        const Weighted w = weigh(g.G, V);
        const Eigen::VectorXd direction =
            w.info.completeOrthogonalDecomposition().solve(w.vinv_g.transpose() * resid);
        Eigen::VectorXd delta = gain * direction;
        for (Eigen::Index c = 0; c < delta.size(); ++c) {
            delta[c] = std::clamp(delta[c], -config.max_step, config.max_step);
        }
        const double movement = delta.norm() / std::max(1.0, theta.norm());
        theta -= delta;
        ++updates;
        last_gradient = g;
        last_active = active;
        below_tol = row.J < config.tol_J ? below_tol + 1 : 0;
        rep.trace.push_back(std::move(row));
        if (averaging_phase) {
            averaged.push_back(theta);
            if (averaged.size() >= averaging) {
                rep.status = FitStatus::converged;
                done = true;
            }
        } else if (below_tol >= config.tol_J_patience && movement < config.tol_theta &&
                   iter >= config.min_iterations) {
            averaging_phase = true;
        }
    }
    if (p == 0) {
        rep.status = FitStatus::converged;
    }

    Eigen::VectorXd theta_hat = theta;
    if (rep.status != FitStatus::degenerate && !averaged.empty()) {
        theta_hat = Eigen::VectorXd::Zero(theta.size());
        for (const auto &v : averaged) {
            theta_hat += v;
        }
        theta_hat /= static_cast<double>(averaged.size());
    }
    rep.theta_hat = to_std(theta_hat);
    if (rep.status == FitStatus::degenerate) {
        rep.final_state = chains.front()->state();
        return rep;
    }

    // Final moment run at the averaged estimate.
    std::vector<std::vector<std::vector<double>>> samples(chains.size());
    parallel_for(chains.size(), config.threads, [&](std::size_t r) {
        chains[r]->engine().set_free_theta(rep.theta_hat);
        chains[r]->advance(config.final_burnin);
        for (std::size_t s = 0; s < config.final_samples; ++s) {
            chains[r]->advance(config.final_interval);
            samples[r].push_back(eval_targets_lenient(chains[r]->state(), actors, spec, structural));
        }
    });
    const MomentEstimate final_m = summarize_samples(names, samples);
    rep.mu_final = to_std(final_m.mu);
    rep.mu_se = final_m.se;
    rep.final_state = chains.front()->state();
    try {
        rep.J_final = objective(final_m.mu, ridge_regularize(final_m.covariance), t_all);
    } catch (const NumericalError &) {
        rep.J_final = std::numeric_limits<double>::quiet_NaN();
    }

    const auto nan = std::numeric_limits<double>::quiet_NaN();
    rep.se.assign(p, nan);
    rep.mc_se.assign(p, nan);
    if (last_gradient && p > 0) {
        const Eigen::MatrixXd &G = last_gradient->G;
        rep.G = G;
        try {
            const Eigen::MatrixXd V = ridge_regularize(select(final_m.covariance, last_active));
            const Weighted w = weigh(G, V);
            const Eigen::FullPivLU<Eigen::MatrixXd> lu(w.info);
            if (lu.isInvertible()) {
                const Eigen::MatrixXd cov = lu.inverse();
                rep.asymptotic_covariance = cov;
                const Eigen::MatrixXd M = cov * w.vinv_g.transpose();
                Eigen::VectorXd mc_var = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(last_active.size()));
                for (std::size_t a = 0; a < last_active.size(); ++a) {
                    const double s = final_m.se[static_cast<std::size_t>(last_active[a])];
                    mc_var[static_cast<Eigen::Index>(a)] = s * s;
                }
                const Eigen::MatrixXd mc = M * mc_var.asDiagonal() * M.transpose();
                for (std::size_t i = 0; i < p; ++i) {
                    const auto ii = static_cast<Eigen::Index>(i);
                    rep.se[i] = std::sqrt(std::max(0.0, cov(ii, ii)));
                    rep.mc_se[i] = std::sqrt(std::max(0.0, mc(ii, ii)));
                }
            }
        } catch (const NumericalError &) {
            // Standard errors stay NaN.
        }
    }
    if (rep.status == FitStatus::max_iterations) {
        rep.message = "iteration limit reached before the convergence rule held";
    }
    return rep;
}

} // namespace stergm
