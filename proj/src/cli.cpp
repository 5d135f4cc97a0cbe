#include "stergm/cli.hpp"

#include "stergm/annealing.hpp"
#include "stergm/equilibrium.hpp"
#include "stergm/numeric.hpp"
#include "stergm/rng.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;

namespace stergm::cli {

int exit_code_for(const std::exception &e) noexcept {
    if (dynamic_cast<const ConfigError *>(&e) != nullptr || dynamic_cast<const CLI::Error *>(&e) != nullptr) {
        return exit_config;
    }
    if (dynamic_cast<const DegeneracyError *>(&e) != nullptr) {
        return exit_degenerate;
    }
    if (dynamic_cast<const NumericalError *>(&e) != nullptr ||
        dynamic_cast<const UndefinedTargetError *>(&e) != nullptr ||
        dynamic_cast<const DomainError *>(&e) != nullptr) {
        return exit_numerical;
    }
    return exit_failure;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static const char *hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::string &path) { return sha256_hex(read_text_file(path)); }

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::string &out_dir, Manifest m) {
    m.outputs.clear();
    std::vector<std::string> names;
    for (const auto &entry : fs::directory_iterator(out_dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
            names.push_back(entry.path().filename().string());
        }
    }
    std::sort(names.begin(), names.end());
    for (const std::string &n : names) {
        m.outputs.emplace_back(n, sha256_file((fs::path(out_dir) / n).string()));
    }
    Json j;
    j["command"] = m.command;
    j["arguments"] = m.arguments;
    Json inputs = Json::array();
    for (const auto &[path, digest] : m.inputs) {
        inputs.push_back({{"path", path}, {"sha256", digest}});
    }
    j["inputs"] = inputs;
    j["seed"] = m.seed;
    j["version"] = m.version;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["status"] = m.status;
    Json outputs = Json::array();
    for (const auto &[file, digest] : m.outputs) {
        outputs.push_back({{"file", file}, {"sha256", digest}});
    }
    j["outputs"] = outputs;
    write_json_file((fs::path(out_dir) / "manifest.json").string(), j);
}

namespace {

/// One command invocation: owns the output directory and writes the manifest when done.
class Session {
public:
    Session(std::string command, const Common &c) : dir_(c.out_dir) {
        fs::create_directories(dir_);
        m_.command = std::move(command);
        m_.seed = c.seed;
        m_.version = STERGM_VERSION;
        m_.started = utc_now();
        arg("threads", std::to_string(c.threads));
    }

    void arg(const std::string &key, const std::string &value) {
        if (!value.empty()) {
            m_.arguments.push_back("--" + key + "=" + value);
        }
    }

    /// Registers and digests an input file; empty paths are ignored.
    const std::string &input(const std::string &path) {
        if (!path.empty()) {
            m_.inputs.emplace_back(path, sha256_file(path));
        }
        return path;
    }

    std::string path(const std::string &name) const { return (fs::path(dir_) / name).string(); }

    void text(const std::string &name, const std::string &content) const { write_text_file(path(name), content); }
    void json(const std::string &name, const Json &j) const { write_json_file(path(name), j); }

    int finish(int code) {
        m_.finished = utc_now();
        m_.status = code == exit_ok ? "ok" : "failed (exit " + std::to_string(code) + ")";
        write_manifest(dir_, m_);
        return code;
    }

private:
    std::string dir_;
    Manifest m_;
};

/// Runs `body`, writing the manifest on success and on failure alike.
template <class F>
int guarded(Session &s, F &&body) {
    int code = exit_failure;
    try {
        code = body();
    } catch (const std::exception &e) {
        s.finish(exit_code_for(e));
        throw;
    }
    return s.finish(code);
}

Json vec_json(const std::vector<double> &v) {
    Json a = Json::array();
    for (double x : v) {
        a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
    }
    return a;
}

ModelFile load_model(const std::string &path) {
    try {
        return model_from_json(read_json_file(path));
    } catch (const ConfigError &e) {
        const std::string what = e.what();
        throw ConfigError(what.rfind(path, 0) == 0 ? what : path + ": " + what);
    }
}

/// Targets recorded when a model file declares none: its generative terms plus mean tie age.
TargetSpec default_targets(const ModelFile &mf) {
    if (mf.targets.size() > 0) {
        return mf.targets;
    }
    TargetSpec spec;
    auto add = [&](const std::vector<PhaseTerm> &terms) {
        for (const PhaseTerm &p : terms) {
            const std::string name = p.term.name();
            const bool seen = std::any_of(spec.terms.begin(), spec.terms.end(),
                                          [&](const StatisticTerm &t) { return t.name() == name; });
            if (!seen) {
                spec.terms.push_back(p.term);
            }
        }
    };
    add(mf.model.formation);
    add(mf.model.dissolution);
    spec.durations.push_back(DurationTarget::mean_tie_age);
    return spec;
}

bool edges_only(const std::vector<PhaseTerm> &terms) {
    return terms.size() == 1 && terms.front().term.kind == TermKind::edges;
}

std::string csv_of(const std::function<void(std::ostream &)> &writer) {
    std::ostringstream ss;
    writer(ss);
    return ss.str();
}

void write_stats_csv(std::ostream &out, const std::vector<std::string> &names,
                     const std::vector<CompositionRow> &rows) {
    out << "step,n,ties,mean_degree";
    for (const std::string &n : names) {
        out << ',' << n;
    }
    out << '\n';
    for (const CompositionRow &r : rows) {
        const double md = r.n == 0 ? std::numeric_limits<double>::quiet_NaN()
                                   : 2.0 * static_cast<double>(r.edges) / static_cast<double>(r.n);
        out << r.step << ',' << r.n << ',' << r.edges << ',' << format_double(md);
        for (double v : r.targets) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

Json km_json(const KmResult &km, bool available) {
    if (!available) {
        return Json{{"available", false}};
    }
    Json surv = Json::array();
    for (const auto &[x, s] : km.survival) {
        surv.push_back({x, s});
    }
    return Json{{"available", true},   {"raw_mean", km.raw_mean}, {"km_mean", km.km_mean},
                {"completed", km.completed}, {"censored", km.censored}, {"survival", surv}};
}

Json moments_json(const MomentEstimate &m) {
    Json list = Json::array();
    for (std::size_t k = 0; k < m.names.size(); ++k) {
        list.push_back({{"name", m.names[k]},
                        {"mean", std::isfinite(m.mu[static_cast<Eigen::Index>(k)]) ? Json(m.mu[static_cast<Eigen::Index>(k)]) : Json(nullptr)},
                        {"se", std::isfinite(m.se[k]) ? Json(m.se[k]) : Json(nullptr)},
                        {"ess", m.ess[k]},
                        {"degenerate", static_cast<bool>(m.degenerate[k])}});
    }
    return Json{{"samples", m.sample_count}, {"targets", list}};
}

int fit_exit_code(const FitReport &r) {
    switch (r.status) {
    case FitStatus::converged:
        return exit_ok;
    case FitStatus::degenerate:
        return exit_degenerate;
    case FitStatus::max_iterations:
        return exit_numerical;
    }
    return exit_failure;
}

void write_fit_artifacts(const Session &s, const FitReport &r, const ModelSpec &model, const TargetSpec &spec,
                         const ActorTable &actors, const std::string &report_name = "fit_report.json") {
    s.json(report_name, fit_report_to_json(r));
    s.text("fit_trace.csv", csv_of([&](std::ostream &o) { write_fit_trace_csv(o, r); }));
    ModelSpec fitted = model;
    if (r.theta_hat.size() == fitted.free_dim()) {
        fitted.set_free_theta(r.theta_hat);
    }
    s.json("fitted_model.json", model_to_json(fitted, spec));
    s.json("fit_final_network.json", network_to_json(r.final_state, actors));
}

FitConfig load_fit_config(const std::string &path, const Common &c, std::uint64_t seed) {
    FitConfig cfg = path.empty() ? FitConfig{} : fit_config_from_json(read_json_file(path));
    if (path.empty() || c.seed_given) {
        cfg.seed = seed;
    }
    cfg.threads = c.threads;
    return cfg;
}

/// Marker file recording pipeline progress.
class StageMarker {
public:
    explicit StageMarker(const Session &s) : s_(s) {}

    void begin(const std::string &stage) {
        current_ = stage;
        write("running", "");
    }
    void complete() {
        done_.push_back(current_);
        current_.clear();
        write("running", "");
    }
    void fail(const std::string &error) { write("failed", error); }
    void finish() { write("complete", ""); }
    const std::vector<std::string> &done() const noexcept { return done_; }

private:
    void write(const std::string &status, const std::string &error) {
        Json j{{"status", status}, {"completed", done_}};
        if (!current_.empty()) {
            j["stage"] = current_;
        }
        if (!error.empty()) {
            j["error"] = error;
        }
        s_.json("pipeline_stage.json", j);
    }

    const Session &s_;
    std::vector<std::string> done_;
    std::string current_;
};

} // namespace

// ---------------------------------------------------------------------------

int cmd_simulate(const SimulateOptions &o, const Common &c) {
    Session s("simulate", c);
    s.arg("steps", std::to_string(o.steps));
    s.arg("burnin", std::to_string(o.burnin));
    s.arg("interval", std::to_string(o.interval));
    s.arg("replicates", std::to_string(o.replicates));
    s.arg("sampler", o.sampler);
    s.arg("proposals", std::to_string(o.proposals));
    return guarded(s, [&] {
        const ModelFile mf = load_model(s.input(o.model));
        const NetworkFile nf = read_network_file(s.input(o.network));
        const TargetSpec spec = default_targets(mf);
        ChainConfig cc;
        cc.burnin_steps = o.burnin;
        cc.interval_steps = o.interval;
        cc.samples = o.interval == 0 ? 0 : o.steps / o.interval;
        cc.num_replicates = o.replicates;
        cc.rng_seed = c.seed;
        cc.threads = c.threads;
        cc.sampler.mode = parse_sampler_mode(o.sampler);
        cc.sampler.proposals_per_phase = o.proposals;
        const ChainRun run = run_chain(nf.net, nf.actors, mf.model, cc, spec);
        s.text(o.out, csv_of([&](std::ostream &out) { write_samples_csv(out, run); }));
        s.json("summary.json", moments_json(summarize_samples(run.names, run.replicates)));
        s.json("final_network.json", network_to_json(run.final_states.front(), nf.actors));
        return exit_ok;
    });
}

int cmd_equilibrium(const EquilibriumOptions &o, const Common &c) {
    Session s("equilibrium", c);
    s.arg("max-duration", std::to_string(o.max_duration));
    if (o.isolates) {
        s.arg("isolates", format_double(*o.isolates));
    }
    return guarded(s, [&] {
        const ModelFile mf = load_model(s.input(o.model));
        NetworkFile nf;
        if (!o.network.empty()) {
            nf = read_network_file(s.input(o.network));
        } else if (o.n > 0) {
            for (std::size_t i = 0; i < o.n; ++i) {
                nf.actors.add("U", "U", 0);
            }
        } else {
            throw ConfigError("equilibrium needs --network or --n");
        }
        const ModelSpec &model = mf.model;
        Json j;
        const auto probs = stationary_dyad_probabilities(nf.actors, model);
        ExactSum expected;
        for (const auto &[d, p] : probs) {
            expected.add(p);
        }
        const auto n = nf.actors.active_count();
        j["n"] = n;
        j["dyads"] = probs.size();
        j["expected_edges"] = expected.value();
        j["expected_density"] = probs.empty() ? 0.0 : expected.value() / static_cast<double>(probs.size());
        j["expected_mean_degree"] = n == 0 ? 0.0 : 2.0 * expected.value() / static_cast<double>(n);
        j["network_logpmf"] = stationary_network_logpmf(nf.net, nf.actors, model);
        if (edges_only(model.dissolution)) {
            const double theta_d = model.dissolution.front().theta;
            const double p = dissolution_probability(theta_d);
            j["dissolution"] = {{"probability", p}, {"mean_duration", 1.0 / p}};
            std::ostringstream ss;
            ss << "x,duration_pmf,observed_age_pmf,observed_duration_pmf\n";
            for (long x = 1; x <= o.max_duration; ++x) {
                ss << x << ',' << format_double(duration_pmf(x, p)) << ',' << format_double(observed_age_pmf(x, p))
                   << ',' << format_double(observed_duration_pmf(x, p)) << '\n';
            }
            s.text("durations.csv", ss.str());
            if (edges_only(model.formation) && model.size_offset && n >= 2) {
                const double tf = model.formation.front().theta;
                j["offset"] = {{"coefficient", size_offset_coefficient(static_cast<double>(n))},
                               {"mean_degree", offset_mean_degree(static_cast<double>(n), tf, theta_d)},
                               {"mean_degree_limit", offset_mean_degree_limit(tf, theta_d)}};
            }
        }
        if (o.isolates) {
            const int ni = static_cast<int>(n);
            const double theta = isolate_gmme(ni, *o.isolates);
            j["isolates"] = {{"observed", *o.isolates},
                             {"theta", theta},
                             {"expected_at_theta", isolate_expected_count(ni, theta)}};
        }
        s.json("equilibrium.json", j);
        return exit_ok;
    });
}

int cmd_fit(const FitOptions &o, const Common &c) {
    Session s("fit", c);
    return guarded(s, [&] {
        const ModelFile mf = load_model(s.input(o.model));
        const NetworkFile nf = read_network_file(s.input(o.network));
        const std::vector<double> t_obs = target_values_from_json(read_json_file(s.input(o.targets)), mf.targets);
        const FitConfig cfg = load_fit_config(s.input(o.config), c, c.seed);
        const FitReport r = fit(nf.net, nf.actors, mf.model, mf.targets, t_obs, cfg);
        write_fit_artifacts(s, r, mf.model, mf.targets, nf.actors, o.out);
        if (r.status != FitStatus::converged) {
            std::cerr << "fit " << fit_status_name(r.status) << ": " << r.message << '\n';
        }
        return fit_exit_code(r);
    });
}

int cmd_ego_stats(const EgoStatsOptions &o, const Common &c) {
    Session s("ego-stats", c);
    s.arg("resample", std::to_string(o.resample));
    return guarded(s, [&] {
        const EgoSample raw = read_survey_file(s.input(o.survey));
        const TargetSpec spec = load_model(s.input(o.spec)).targets;
        const EgoSample sample = o.resample > 0 ? resample_egos(raw, o.resample, c.seed) : raw;
        const EgoTargetReport rep = recover_cross_targets(sample, spec);
        Json j = target_values_to_json(rep.names, rep.values);
        j["per_capita"] = vec_json(rep.per_capita);
        j["mean_ongoing_age"] = rep.mean_ongoing_age ? Json(*rep.mean_ongoing_age) : Json(nullptr);
        j["egos"] = rep.egos;
        j["ongoing_nominations"] = rep.ongoing_nominations;
        j["resample"] = o.resample;
        s.json(o.out, j);
        s.text("pseudo_population.csv", csv_of([&](std::ostream &out) { write_actor_csv(out, pseudo_population(sample)); }));

        const TransitionStats ts = o.previous.empty()
                                       ? recover_transition_stats(raw, spec.terms)
                                       : recover_transition_stats(read_survey_file(s.input(o.previous)), raw, spec.terms);
        Json t;
        t["waves"] = o.previous.empty() ? 1 : 2;
        t["names"] = ts.names;
        t["formed"] = vec_json(ts.formed);
        t["dissolved"] = ts.dissolved ? vec_json(*ts.dissolved) : Json("unavailable");
        t["persisted"] = vec_json(ts.persisted);
        t["union"] = ts.union_values ? vec_json(*ts.union_values) : Json("unavailable");
        t["intersection"] = vec_json(ts.intersection);
        s.json("transition.json", t);
        return exit_ok;
    });
}

int cmd_init_network(const InitNetworkOptions &o, const Common &c) {
    Session s("init-network", c);
    if (o.n > 0) {
        s.arg("n", std::to_string(o.n));
    }
    if (o.mean_age) {
        s.arg("mean-age", format_double(*o.mean_age));
    }
    return guarded(s, [&] {
        const ModelFile mf = load_model(s.input(o.model));
        const std::vector<double> values = target_values_from_json(read_json_file(s.input(o.targets)), mf.targets);
        ActorTable actors;
        if (!o.actors.empty()) {
            std::ifstream in(s.input(o.actors));
            if (!in) {
                throw ConfigError("cannot open '" + o.actors + "'");
            }
            actors = read_actor_csv(in, o.actors);
        } else {
            if (o.n == 0) {
                throw ConfigError("init-network needs --actors or --n");
            }
            for (std::size_t i = 0; i < o.n; ++i) {
                actors.add("U", "U", 0);
            }
        }
        AnnealConfig cfg = o.anneal.empty() ? AnnealConfig{} : anneal_config_from_json(read_json_file(s.input(o.anneal)));
        if (o.anneal.empty() || c.seed_given) {
            cfg.seed = c.seed;
        }
        const std::vector<double> structural(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mf.targets.terms.size()));
        std::optional<double> mean_age = o.mean_age;
        for (std::size_t k = 0; k < mf.targets.durations.size() && !mean_age; ++k) {
            if (mf.targets.durations[k] == DurationTarget::mean_tie_age) {
                mean_age = values[mf.targets.terms.size() + k];
            }
        }
        const AnnealResult r = anneal_network(actors, mf.model.dyad_space, mf.targets, structural, cfg, mean_age);
        s.json("network.json", network_to_json(r.net, actors));
        std::ostringstream trace;
        trace << "iteration,distance\n";
        for (const auto &[it, d] : r.trace) {
            trace << it << ',' << format_double(d) << '\n';
        }
        s.text("anneal_trace.csv", trace.str());
        std::vector<std::string> names;
        for (const StatisticTerm &t : mf.targets.terms) {
            names.push_back(t.name());
        }
        s.json("anneal_report.json", Json{{"distance", r.distance},
                                          {"iterations", r.iterations},
                                          {"names", names},
                                          {"targets", vec_json(structural)},
                                          {"achieved", vec_json(r.achieved)}});
        std::cerr << "annealing residual distance " << format_double(r.distance) << '\n';
        return exit_ok;
    });
}

int cmd_popsim(const PopsimOptions &o, const Common &c) {
    Session s("popsim", c);
    if (o.steps) {
        s.arg("steps", std::to_string(*o.steps));
    }
    return guarded(s, [&] {
        const ModelFile mf = load_model(s.input(o.model));
        const NetworkFile nf = read_network_file(s.input(o.init));
        VitalConfig vital = o.vital.empty() ? VitalConfig{} : vital_from_json(read_json_file(s.input(o.vital)));
        if (o.steps) {
            vital.steps = *o.steps;
        }
        if (o.vital.empty() || c.seed_given) {
            vital.seed = c.seed;
        }
        const TargetSpec spec = default_targets(mf);
        const PopsimResult res = run_popsim(nf.net, nf.actors, mf.model, vital, spec);
        const std::vector<std::string> names = spec.names();
        s.text("stats.csv", csv_of([&](std::ostream &out) { write_stats_csv(out, names, res.composition); }));
        s.text("composition.csv", csv_of([&](std::ostream &out) { write_composition_csv(out, names, res.composition); }));
        s.text("tie_history.csv", csv_of([&](std::ostream &out) { write_tie_history_csv(out, res.final_state.log); }));
        s.json("durations.json", km_json(res.durations, res.durations_available));
        s.json("final_network.json", network_to_json(res.final_state.net, res.final_state.actors));
        return exit_ok;
    });
}

// ---------------------------------------------------------------------------

PipelineResult run_pipeline(const PipelineOptions &o, const Common &c) {
    Session s("pipeline", c);
    s.arg("resample", std::to_string(o.resample));
    s.arg("validation-steps", std::to_string(o.validation_steps));
    StageMarker marker(s);
    PipelineResult res;
    try {
        // Inputs parse up front so a malformed file fails before any work.
        marker.begin("load");
        const EgoSample raw = read_survey_file(s.input(o.survey));
        ModelFile mf = load_model(s.input(o.model));
        const VitalConfig vital_in = o.vital.empty() ? VitalConfig{} : vital_from_json(read_json_file(s.input(o.vital)));
        FitConfig fit_cfg = load_fit_config(s.input(o.fit_config), c, derive_seed(c.seed, {3}));
        fit_cfg.seed = derive_seed(c.seed, {3});
        AnnealConfig anneal_cfg =
            o.anneal_config.empty() ? AnnealConfig{} : anneal_config_from_json(read_json_file(s.input(o.anneal_config)));
        anneal_cfg.seed = derive_seed(c.seed, {2});
        const TargetSpec &spec = mf.targets;
        if (spec.size() == 0) {
            throw ConfigError("the model skeleton declares no targets");
        }
        marker.complete();

        marker.begin("ego-stats");
        const EgoSample sample = o.resample > 0 ? resample_egos(raw, o.resample, derive_seed(c.seed, {1})) : raw;
        res.ego = recover_cross_targets(sample, spec);
        const ActorTable actors = pseudo_population(sample);
        {
            Json j = target_values_to_json(res.ego.names, res.ego.values);
            j["per_capita"] = vec_json(res.ego.per_capita);
            j["mean_ongoing_age"] = res.ego.mean_ongoing_age ? Json(*res.ego.mean_ongoing_age) : Json(nullptr);
            j["egos"] = res.ego.egos;
            j["ongoing_nominations"] = res.ego.ongoing_nominations;
            s.json("ego_targets.json", j);
            s.text("pseudo_population.csv", csv_of([&](std::ostream &out) { write_actor_csv(out, actors); }));
        }
        marker.complete();

        marker.begin("dissolution-shortcut");
        std::optional<double> mean_age;
        for (std::size_t k = 0; k < spec.durations.size(); ++k) {
            if (spec.durations[k] == DurationTarget::mean_tie_age) {
                mean_age = res.ego.values[spec.terms.size() + k];
            }
        }
        ModelSpec model = mf.model;
        if (mean_age && edges_only(model.dissolution) && !model.dissolution.front().fixed) {
            res.shortcut_theta = dissolution_shortcut(*mean_age);
            model.dissolution.front().theta = *res.shortcut_theta;
            model.dissolution.front().fixed = true;
            s.json("shortcut.json", Json{{"mean_tie_age", *mean_age}, {"dissolution.edges", *res.shortcut_theta}});
        } else {
            s.json("shortcut.json", Json{{"applied", false}});
        }
        marker.complete();

        marker.begin("init-network");
        const std::vector<double> structural(res.ego.values.begin(),
                                             res.ego.values.begin() + static_cast<std::ptrdiff_t>(spec.terms.size()));
        const AnnealResult ar = anneal_network(actors, model.dyad_space, spec, structural, anneal_cfg, mean_age);
        s.json("init_network.json", network_to_json(ar.net, actors));
        s.json("anneal_report.json", Json{{"distance", ar.distance}, {"iterations", ar.iterations},
                                          {"achieved", vec_json(ar.achieved)}});
        marker.complete();

        marker.begin("fit");
        res.fit = fit(ar.net, actors, model, spec, res.ego.values, fit_cfg);
        write_fit_artifacts(s, res.fit, model, spec, actors);
        if (res.fit.status == FitStatus::degenerate) {
            throw DegeneracyError(res.fit.degenerate_target, "fit stopped: " + res.fit.message);
        }
        if (res.fit.status != FitStatus::converged) {
            throw NumericalError("fit did not converge: " + res.fit.message);
        }
        ModelSpec fitted = model;
        fitted.set_free_theta(res.fit.theta_hat);
        marker.complete();

        marker.begin("static-validation");
        {
            const VitalConfig frozen = VitalConfig::frozen(o.validation_steps, derive_seed(c.seed, {4}));
            const PopsimResult v = run_popsim(res.fit.final_state, actors, fitted, frozen, spec, fit_cfg.sampler);
            const std::vector<std::string> names = spec.names();
            res.validation_passed = true;
            Json rows = Json::array();
            for (std::size_t k = 0; k < names.size(); ++k) {
                std::vector<double> series;
                for (std::size_t r = 1; r < v.composition.size(); ++r) {
                    if (std::isfinite(v.composition[r].targets[k])) {
                        series.push_back(v.composition[r].targets[k]);
                    }
                }
                ValidationRow row;
                row.name = names[k];
                row.target = k < spec.terms.size() ? res.ego.per_capita[k] : res.ego.values[k];
                if (series.size() >= 2) {
                    row.mean = mean(series);
                    const double ess = effective_sample_size(series);
                    row.se = std::sqrt(sample_variance(series) / std::max(ess, 1.0));
                    row.within = std::abs(row.mean - row.target) <= o.validation_tolerance_se * row.se ||
                                 row.mean == row.target;
                } else {
                    row.mean = std::numeric_limits<double>::quiet_NaN();
                }
                res.validation_passed = res.validation_passed && row.within;
                rows.push_back({{"name", row.name}, {"target", row.target},
                                {"mean", std::isfinite(row.mean) ? Json(row.mean) : Json(nullptr)},
                                {"se", row.se}, {"within", row.within}});
                res.validation.push_back(row);
            }
            s.json("validation.json", Json{{"steps", o.validation_steps},
                                           {"tolerance_se", o.validation_tolerance_se},
                                           {"passed", res.validation_passed},
                                           {"targets", rows}});
            s.text("validation_stats.csv",
                   csv_of([&](std::ostream &out) { write_stats_csv(out, names, v.composition); }));
        }
        marker.complete();

        marker.begin("popsim");
        {
            VitalConfig vital = vital_in;
            vital.seed = derive_seed(c.seed, {5});
            const PopsimResult p = run_popsim(res.fit.final_state, actors, fitted, vital, spec, fit_cfg.sampler);
            const std::vector<std::string> names = spec.names();
            s.text("stats.csv", csv_of([&](std::ostream &out) { write_stats_csv(out, names, p.composition); }));
            s.text("composition.csv", csv_of([&](std::ostream &out) { write_composition_csv(out, names, p.composition); }));
            s.text("tie_history.csv", csv_of([&](std::ostream &out) { write_tie_history_csv(out, p.final_state.log); }));
            s.json("durations.json", km_json(p.durations, p.durations_available));
            res.durations = p.durations;
            res.durations_available = p.durations_available;

            res.target_mean_degree = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t k = 0; k < spec.terms.size(); ++k) {
                if (spec.terms[k].kind == TermKind::edges) {
                    res.target_mean_degree = 2.0 * res.ego.per_capita[k];
                }
            }
            ExactSum md;
            std::size_t count = 0;
            for (std::size_t r = 1; r < p.composition.size(); ++r) {
                if (p.composition[r].n > 0) {
                    md.add(2.0 * static_cast<double>(p.composition[r].edges) / static_cast<double>(p.composition[r].n));
                    ++count;
                }
            }
            res.popsim_mean_degree = count == 0 ? std::numeric_limits<double>::quiet_NaN() : md.value() / static_cast<double>(count);
        }
        marker.complete();

        res.stages = marker.done();
        s.json("pipeline_report.json",
               Json{{"stages", res.stages},
                    {"targets", target_values_to_json(res.ego.names, res.ego.values)["targets"]},
                    {"dissolution_shortcut", res.shortcut_theta ? Json(*res.shortcut_theta) : Json(nullptr)},
                    {"fit_status", fit_status_name(res.fit.status)},
                    {"fit_iterations", res.fit.iterations},
                    {"parameters", res.fit.parameter_names},
                    {"theta_hat", vec_json(res.fit.theta_hat)},
                    {"J_final", res.fit.J_final},
                    {"validation_passed", res.validation_passed},
                    {"target_mean_degree", std::isfinite(res.target_mean_degree) ? Json(res.target_mean_degree) : Json(nullptr)},
                    {"popsim_mean_degree", std::isfinite(res.popsim_mean_degree) ? Json(res.popsim_mean_degree) : Json(nullptr)},
                    {"durations", km_json(res.durations, res.durations_available)}});
        marker.finish();
    } catch (const std::exception &e) {
        marker.fail(e.what());
        s.finish(exit_code_for(e));
        throw;
    }
    s.finish(exit_ok);
    return res;
}

int cmd_pipeline(const PipelineOptions &o, const Common &c) {
    run_pipeline(o, c);
    return exit_ok;
}

// ---------------------------------------------------------------------------

int run(int argc, const char *const *argv) {
    CLI::App app{"Separable temporal ERGM simulation, equilibrium analysis and EGMME fitting"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(STERGM_VERSION));
    Common common;
    app.add_option("--seed", common.seed, "Base random seed")->each([&](const std::string &) { common.seed_given = true; });
    app.add_option("--threads", common.threads, "Worker threads for replicate chains")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", common.out_dir, "Directory for artifacts and the manifest");

    SimulateOptions sim;
    auto *simulate = app.add_subcommand("simulate", "Run replicate chains and record target statistics");
    simulate->add_option("--model", sim.model, "Model JSON")->required();
    simulate->add_option("--network,--init", sim.network, "Starting network JSON")->required();
    simulate->add_option("--steps", sim.steps, "Steps recorded after burn-in");
    simulate->add_option("--burnin", sim.burnin, "Steps discarded first");
    simulate->add_option("--interval", sim.interval, "Steps between samples")->check(CLI::PositiveNumber);
    simulate->add_option("--replicates", sim.replicates, "Independent chains")->check(CLI::PositiveNumber);
    simulate->add_option("--sampler", sim.sampler, "automatic, exact or mcmc");
    simulate->add_option("--proposals", sim.proposals, "Metropolis-Hastings proposals per phase (0: ten per toggleable dyad)");
    simulate->add_option("--out", sim.out, "Samples file name inside the output directory");

    EquilibriumOptions eq;
    auto *equilibrium = app.add_subcommand("equilibrium", "Closed-form stationary quantities of a dyad-independent model");
    equilibrium->add_option("--model", eq.model, "Model JSON")->required();
    equilibrium->add_option("--network", eq.network, "Network JSON supplying the actors");
    equilibrium->add_option("--n", eq.n, "Number of attribute-free actors when no network is given");
    equilibrium->add_option("--max-duration", eq.max_duration, "Largest duration tabulated");
    equilibrium->add_option("--isolates", eq.isolates, "Observed isolate count to match with an edges-only model");

    FitOptions fo;
    auto *fitcmd = app.add_subcommand("fit", "EGMME fit of the free coefficients to observed targets");
    fitcmd->add_option("--model", fo.model, "Model JSON")->required();
    fitcmd->add_option("--network,--init", fo.network, "Starting network JSON")->required();
    fitcmd->add_option("--targets", fo.targets, "Observed target values JSON")->required();
    fitcmd->add_option("--config", fo.config, "Fit configuration JSON");
    fitcmd->add_option("--out", fo.out, "Report file name inside the output directory");

    EgoStatsOptions eo;
    auto *ego = app.add_subcommand("ego-stats", "Recover targets from an egocentric survey");
    ego->add_option("--survey", eo.survey, "Survey CSV")->required();
    ego->add_option("--spec", eo.spec, "Model or target list JSON")->required();
    ego->add_option("--previous", eo.previous, "Earlier linked wave for transition statistics");
    ego->add_option("--resample", eo.resample, "Pseudo-population size (0 keeps the egos)");
    ego->add_option("--out", eo.out, "Target file name inside the output directory");

    InitNetworkOptions io;
    auto *init = app.add_subcommand("init-network", "Anneal a network to target statistics");
    init->add_option("--model", io.model, "Model JSON declaring the targets")->required();
    init->add_option("--targets", io.targets, "Target values JSON")->required();
    init->add_option("--actors", io.actors, "Actor CSV");
    init->add_option("--n", io.n, "Number of attribute-free actors when no actor CSV is given");
    init->add_option("--mean-age", io.mean_age, "Mean tie age used to draw onsets");
    init->add_option("--anneal", io.anneal, "Annealing configuration JSON");

    PopsimOptions po;
    auto *pop = app.add_subcommand("popsim", "Evolving-population simulation with vital dynamics");
    pop->add_option("--model", po.model, "Model JSON")->required();
    pop->add_option("--init", po.init, "Starting network JSON")->required();
    pop->add_option("--vital", po.vital, "Vital dynamics JSON");
    pop->add_option("--steps", po.steps, "Override the vital configuration's step count");

    PipelineOptions pl;
    auto *pipe = app.add_subcommand("pipeline", "Survey to fitted model to population simulation");
    pipe->add_option("--survey", pl.survey, "Survey CSV")->required();
    pipe->add_option("--model", pl.model, "Model skeleton JSON")->required();
    pipe->add_option("--vital", pl.vital, "Vital dynamics JSON");
    pipe->add_option("--fit-config", pl.fit_config, "Fit configuration JSON");
    pipe->add_option("--anneal", pl.anneal_config, "Annealing configuration JSON");
    pipe->add_option("--resample", pl.resample, "Pseudo-population size (0 keeps the egos)");
    pipe->add_option("--validation-steps", pl.validation_steps, "Length of the static validation run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    try {
        if (*simulate) {
            return cmd_simulate(sim, common);
        }
        if (*equilibrium) {
            return cmd_equilibrium(eq, common);
        }
        if (*fitcmd) {
            return cmd_fit(fo, common);
        }
        if (*ego) {
            return cmd_ego_stats(eo, common);
        }
        if (*init) {
            return cmd_init_network(io, common);
        }
        if (*pop) {
            return cmd_popsim(po, common);
        }
        return cmd_pipeline(pl, common);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

} // namespace stergm::cli
