#include "stergm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace stergm {

std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path + "'");
    }
    out << text;
}

Json read_json_file(const std::string &path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError(path + ": malformed JSON: " + e.what());
    }
}

void write_json_file(const std::string &path, const Json &j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

template <class T>
T get_or(const Json &j, const char *key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

std::string required_string(const Json &j, const char *key) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) {
        throw ConfigError(std::string("missing string field '") + key + "'");
    }
    return j.at(key).get<std::string>();
}

int required_int(const Json &j, const char *key) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_number_integer()) {
        throw ConfigError(std::string("missing integer field '") + key + "'");
    }
    return j.at(key).get<int>();
}

} // namespace

// ---------------------------------------------------------------------------
// Networks

NetworkFile network_from_json(const Json &j) {
    if (!j.is_object() || !j.contains("actors") || !j.at("actors").is_array()) {
        throw ConfigError("network file needs an 'actors' array");
    }
    NetworkFile nf;
    int expected = 0;
    for (const Json &a : j.at("actors")) {
        const int id = required_int(a, "id");
        if (id != expected) {
            throw ConfigError("actor ids must be 0..n-1 in order; found " + std::to_string(id) +
                              " where " + std::to_string(expected) + " was expected");
        }
        ++expected;
        nf.actors.add(required_string(a, "sex"), required_string(a, "race"), required_int(a, "age_months"));
        if (a.contains("active") && !a.at("active").get<bool>()) {
            nf.actors.deactivate(id);
        }
    }
    nf.net = NetworkState(get_or<int>(j, "clock", 0));
    if (j.contains("ties")) {
        for (const Json &t : j.at("ties")) {
            const int a = required_int(t, "i");
            const int b = required_int(t, "j");
            if (!nf.actors.contains(a) || !nf.actors.contains(b)) {
                throw ConfigError("tie references an unknown actor");
            }
            try {
                nf.net.add_tie(Dyad::of(a, b), get_or<int>(t, "onset", nf.net.clock()));
            } catch (const ContractError &e) {
                throw ConfigError(std::string("invalid tie: ") + e.what());
            }
        }
    }
    return nf;
}

Json network_to_json(const NetworkState &net, const ActorTable &actors) {
    Json j;
    j["clock"] = net.clock();
    Json list = Json::array();
    for (const Actor &a : actors.records()) {
        Json r;
        r["id"] = a.id;
        r["sex"] = actors.label(Attribute::sex, a.sex);
        r["race"] = actors.label(Attribute::race, a.race);
        r["age_months"] = a.age_months;
        if (!a.active) {
            r["active"] = false;
        }
        list.push_back(r);
    }
    j["actors"] = list;
    Json ties = Json::array();
    for (const auto &[d, onset] : net.ties()) {
        ties.push_back({{"i", d.lo}, {"j", d.hi}, {"onset", onset}});
    }
    j["ties"] = ties;
    return j;
}

NetworkFile read_network_file(const std::string &path) {
    try {
        return network_from_json(read_json_file(path));
    } catch (const ConfigError &e) {
        throw ConfigError(path + ": " + e.what());
    }
}

ActorTable read_actor_csv(std::istream &in, const std::string &source) {
    ActorTable t;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (!header) {
            if (line != "id,sex,race,age_months") {
                throw ParseError(source, lineno, "expected header 'id,sex,race,age_months'");
            }
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 4) {
            throw ParseError(source, lineno, "expected 4 fields");
        }
        int id = 0;
        int age = 0;
        const auto r1 = std::from_chars(f[0].data(), f[0].data() + f[0].size(), id);
        const auto r2 = std::from_chars(f[3].data(), f[3].data() + f[3].size(), age);
        if (r1.ec != std::errc() || r1.ptr != f[0].data() + f[0].size() || r2.ec != std::errc() ||
            r2.ptr != f[3].data() + f[3].size() || age < 0) {
            throw ParseError(source, lineno, "id and age_months must be non-negative integers");
        }
        if (static_cast<std::size_t>(id) != t.size()) {
            throw ParseError(source, lineno, "actor ids must be 0..n-1 in order");
        }
        if (f[1].empty() || f[2].empty()) {
            throw ParseError(source, lineno, "missing sex or race");
        }
        t.add(f[1], f[2], age);
    }
    if (!header) {
        throw ParseError(source, 1, "empty actor file");
    }
    return t;
}

void write_actor_csv(std::ostream &out, const ActorTable &actors) {
    out << "id,sex,race,age_months\n";
    for (const Actor &a : actors.records()) {
        out << a.id << ',' << actors.label(Attribute::sex, a.sex) << ','
            << actors.label(Attribute::race, a.race) << ',' << a.age_months << '\n';
    }
}

// ---------------------------------------------------------------------------
// Terms and models

namespace {

Json args_of(const Json &j) {
    return j.contains("args") && j.at("args").is_object() ? j.at("args") : Json::object();
}

AgeForm parse_age_form(const std::string &f) {
    if (f == "sqrt") {
        return AgeForm::sqrt_age;
    }
    if (f == "linear") {
        return AgeForm::linear;
    }
    throw ConfigError("age-effect form must be 'sqrt' or 'linear', got '" + f + "'");
}

AgeDifferenceForm parse_diff_form(const std::string &f) {
    if (f == "abs-sqrt-diff") {
        return AgeDifferenceForm::abs_sqrt_diff;
    }
    if (f == "abs-diff") {
        return AgeDifferenceForm::abs_diff;
    }
    if (f == "sq-sqrt-diff") {
        return AgeDifferenceForm::sq_sqrt_diff;
    }
    if (f == "sq-diff") {
        return AgeDifferenceForm::sq_diff;
    }
    throw ConfigError("unknown age-difference form '" + f + "'");
}

bool is_duration_name(const std::string &name) {
    return name == "mean-tie-age" || name == "mean-monogamous-tie-age";
}

} // namespace

StatisticTerm term_from_json(const Json &j) {
    const std::string name = required_string(j, "term");
    const Json args = args_of(j);
    auto attr = [&] { return parse_attribute(required_string(args, "attr")); };
    auto level = [&] { return required_string(args, "level"); };
    if (name == "edges") {
        return StatisticTerm::edges();
    }
    if (name == "activity") {
        return StatisticTerm::activity(attr(), level());
    }
    if (name == "homophily") {
        return StatisticTerm::homophily(attr(), level());
    }
    if (name == "same-category") {
        return StatisticTerm::same_category(attr());
    }
    if (name == "degree1") {
        return StatisticTerm::degree1();
    }
    if (name == "degree1-by-category") {
        return StatisticTerm::degree1_by_category(attr(), level());
    }
    if (name == "age-effect") {
        return StatisticTerm::age_effect(parse_age_form(required_string(args, "f")));
    }
    if (name == "age-difference") {
        return StatisticTerm::age_difference(parse_diff_form(required_string(args, "f")));
    }
    if (name == "older-male-younger-female") {
        return StatisticTerm::older_male_younger_female(get_or<std::string>(args, "male", "M"),
                                                        get_or<std::string>(args, "female", "F"));
    }
    if (name == "offset-log-inverse-n") {
        return StatisticTerm::size_offset();
    }
    throw ConfigError("unknown term '" + name + "'");
}

Json term_to_json(const StatisticTerm &t) {
    Json j;
    Json args = Json::object();
    const std::string attr(attribute_name(t.attr));
    switch (t.kind) {
    case TermKind::edges:
        j["term"] = "edges";
        break;
    case TermKind::activity:
        j["term"] = "activity";
        args = {{"attr", attr}, {"level", t.level}};
        break;
    case TermKind::homophily:
        j["term"] = "homophily";
        args = {{"attr", attr}, {"level", t.level}};
        break;
    case TermKind::same_category:
        j["term"] = "same-category";
        args = {{"attr", attr}};
        break;
    case TermKind::degree1:
        j["term"] = "degree1";
        break;
    case TermKind::degree1_by_category:
        j["term"] = "degree1-by-category";
        args = {{"attr", attr}, {"level", t.level}};
        break;
    case TermKind::age_effect:
        j["term"] = "age-effect";
        args = {{"f", t.age_form == AgeForm::sqrt_age ? "sqrt" : "linear"}};
        break;
    case TermKind::age_difference: {
        j["term"] = "age-difference";
        const std::string n = t.name();
        args = {{"f", n.substr(n.find('.') + 1)}};
        break;
    }
    case TermKind::older_male_younger_female:
        j["term"] = "older-male-younger-female";
        args = {{"male", t.male_level}, {"female", t.female_level}};
        break;
    case TermKind::size_offset:
        j["term"] = "offset-log-inverse-n";
        break;
    }
    if (!args.empty()) {
        j["args"] = args;
    }
    return j;
}

double theta_from_json(const Json &j) {
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "+inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
    }
    throw ConfigError("coefficient must be a number, 'inf' or '-inf'");
}

Json theta_to_json(double theta) {
    if (std::isinf(theta)) {
        return theta > 0 ? "inf" : "-inf";
    }
    return theta;
}

TargetSpec target_spec_from_json(const Json &list, const Json &normalization) {
    TargetSpec spec;
    if (!list.is_null()) {
        if (!list.is_array()) {
            throw ConfigError("'targets' must be an array");
        }
        for (const Json &t : list) {
            const std::string name = required_string(t, "term");
            if (name == "mean-tie-age") {
                spec.durations.push_back(DurationTarget::mean_tie_age);
            } else if (name == "mean-monogamous-tie-age") {
                spec.durations.push_back(DurationTarget::mean_monogamous_tie_age);
            } else {
                spec.terms.push_back(term_from_json(t));
            }
        }
    }
    if (normalization.is_string()) {
        const std::string n = normalization.get<std::string>();
        if (n == "raw") {
            spec.normalization = Normalization::raw;
        } else if (n == "per-capita") {
            spec.normalization = Normalization::per_capita_by_group;
        } else {
            throw ConfigError("normalization must be 'raw' or 'per-capita'");
        }
    }
    const auto names = spec.names();
    if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
        throw ConfigError("target list contains a duplicate");
    }
    return spec;
}

ModelFile model_from_json(const Json &j) {
    if (!j.is_object()) {
        throw ConfigError("model file must be a JSON object");
    }
    ModelFile mf;
    auto phase = [&](const char *key, std::vector<PhaseTerm> &into, bool formation) {
        if (!j.contains(key)) {
            return;
        }
        for (const Json &t : j.at(key)) {
            StatisticTerm term = term_from_json(t);
            if (term.kind == TermKind::size_offset) {
                if (!formation) {
                    throw ConfigError("the size offset applies to formation only");
                }
                if (t.contains("theta") && theta_from_json(t.at("theta")) != 1.0) {
                    throw ConfigError("the size offset coefficient is fixed at 1");
                }
                mf.model.size_offset = true;
                continue;
            }
            if (is_duration_name(required_string(t, "term"))) {
                throw ConfigError("duration targets cannot be generative terms");
            }
            PhaseTerm p;
            p.term = term;
            p.theta = t.contains("theta") ? theta_from_json(t.at("theta")) : 0.0;
            p.fixed = get_or<bool>(t, "fixed", false) || std::isinf(p.theta);
            into.push_back(p);
        }
    };
    phase("formation", mf.model.formation, true);
    phase("dissolution", mf.model.dissolution, false);
    mf.targets = target_spec_from_json(j.contains("targets") ? j.at("targets") : Json(),
                                       j.contains("normalization") ? j.at("normalization") : Json());
    if (j.contains("dyad_space")) {
        const Json &ds = j.at("dyad_space");
        const std::string kind = required_string(ds, "kind");
        if (kind == "all") {
            mf.model.dyad_space = DyadSpace::all();
        } else if (kind == "bipartite") {
            mf.model.dyad_space = DyadSpace::bipartite(parse_attribute(required_string(ds, "attr")));
        } else if (kind == "explicit") {
            std::vector<Dyad> dyads;
            for (const Json &p : ds.at("dyads")) {
                dyads.push_back(Dyad::of(p.at(0).get<int>(), p.at(1).get<int>()));
            }
            mf.model.dyad_space = DyadSpace::explicit_list(std::move(dyads));
        } else {
            throw ConfigError("dyad_space kind must be all, bipartite or explicit");
        }
    }
    return mf;
}

Json model_to_json(const ModelSpec &model, const TargetSpec &targets) {
    Json j;
    auto phase = [](const std::vector<PhaseTerm> &terms) {
        Json list = Json::array();
        for (const PhaseTerm &p : terms) {
            Json t = term_to_json(p.term);
            t["theta"] = theta_to_json(p.theta);
            if (p.fixed) {
                t["fixed"] = true;
            }
            list.push_back(t);
        }
        return list;
    };
    j["formation"] = phase(model.formation);
    if (model.size_offset) {
        j["formation"].insert(j["formation"].begin(), Json{{"term", "offset-log-inverse-n"}});
    }
    j["dissolution"] = phase(model.dissolution);
    Json tl = Json::array();
    for (const StatisticTerm &t : targets.terms) {
        tl.push_back(term_to_json(t));
    }
    for (DurationTarget d : targets.durations) {
        tl.push_back({{"term", duration_target_name(d)}});
    }
    j["targets"] = tl;
    j["normalization"] = targets.normalization == Normalization::raw ? "raw" : "per-capita";
    switch (model.dyad_space.kind()) {
    case DyadSpaceKind::all_undirected:
        j["dyad_space"] = {{"kind", "all"}};
        break;
    case DyadSpaceKind::bipartite_by_attribute:
        j["dyad_space"] = {{"kind", "bipartite"}, {"attr", std::string(attribute_name(model.dyad_space.attribute()))}};
        break;
    case DyadSpaceKind::explicit_list: {
        Json d = Json::array();
        for (const Dyad &x : model.dyad_space.listed()) {
            d.push_back({x.lo, x.hi});
        }
        j["dyad_space"] = {{"kind", "explicit"}, {"dyads", d}};
        break;
    }
    }
    return j;
}

std::vector<double> target_values_from_json(const Json &j, const TargetSpec &spec) {
    if (!j.is_object() || !j.contains("targets") || !j.at("targets").is_array()) {
        throw ConfigError("target file needs a 'targets' array of {name, value}");
    }
    const std::vector<std::string> names = spec.names();
    std::vector<double> values(names.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> seen(names.size(), false);
    for (const Json &t : j.at("targets")) {
        const std::string name = required_string(t, "name");
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) {
            continue;
        }
        const auto k = static_cast<std::size_t>(it - names.begin());
        if (!t.contains("value") || !t.at("value").is_number()) {
            throw ConfigError("target '" + name + "' needs a numeric value");
        }
        values[k] = t.at("value").get<double>();
        seen[k] = true;
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (!seen[k]) {
            throw ConfigError("target file lacks a value for '" + names[k] + "'");
        }
    }
    return values;
}

Json target_values_to_json(const std::vector<std::string> &names, const std::vector<double> &values) {
    Json list = Json::array();
    for (std::size_t k = 0; k < names.size(); ++k) {
        list.push_back({{"name", names[k]}, {"value", values[k]}});
    }
    return Json{{"targets", list}};
}

// ---------------------------------------------------------------------------
// Configs and reports

namespace {

SamplerConfig sampler_from_json(const Json &j) {
    SamplerConfig s;
    s.mode = parse_sampler_mode(get_or<std::string>(j, "sampler", "automatic"));
    s.proposals_per_phase = get_or<std::size_t>(j, "mcmc_proposals_per_phase", 0);
    return s;
}

Json vec_json(const std::vector<double> &v) {
    Json a = Json::array();
    for (double x : v) {
        a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
    }
    return a;
}

Json matrix_json(const Eigen::MatrixXd &m) {
    Json a = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(std::isfinite(m(r, c)) ? Json(m(r, c)) : Json(nullptr));
        }
        a.push_back(row);
    }
    return a;
}

} // namespace

SamplerMode parse_sampler_mode(const std::string &name) {
    if (name == "automatic") {
        return SamplerMode::automatic;
    }
    if (name == "exact") {
        return SamplerMode::exact;
    }
    if (name == "mcmc") {
        return SamplerMode::mcmc;
    }
    throw ConfigError("sampler must be automatic, exact or mcmc, got '" + name + "'");
}

FitConfig fit_config_from_json(const Json &j) {
    if (!j.is_object()) {
        throw ConfigError("fit config must be a JSON object");
    }
    FitConfig c;
    c.gain_a = get_or(j, "gain_a", c.gain_a);
    c.gain_b = get_or(j, "gain_b", c.gain_b);
    c.jitter = get_or(j, "jitter", c.jitter);
    c.jitter_floor = get_or(j, "jitter_floor", c.jitter_floor);
    c.window = get_or(j, "window", c.window);
    c.averaging = get_or(j, "averaging", c.averaging);
    c.max_iterations = get_or(j, "max_iterations", c.max_iterations);
    c.min_iterations = get_or(j, "min_iterations", c.min_iterations);
    c.tol_J = get_or(j, "tol_J", c.tol_J);
    c.tol_J_patience = get_or(j, "tol_J_patience", c.tol_J_patience);
    c.tol_theta = get_or(j, "tol_theta", c.tol_theta);
    c.max_step = get_or(j, "max_step", c.max_step);
    c.degeneracy_patience = get_or(j, "degeneracy_patience", c.degeneracy_patience);
    c.replicates = get_or(j, "replicates", c.replicates);
    c.steps_per_iteration = get_or(j, "steps_per_iteration", c.steps_per_iteration);
    c.burnin = get_or(j, "burnin", c.burnin);
    c.final_burnin = get_or(j, "final_burnin", c.final_burnin);
    c.final_samples = get_or(j, "final_samples", c.final_samples);
    c.final_interval = get_or(j, "final_interval", c.final_interval);
    c.seed = get_or(j, "seed", c.seed);
    c.initialize = get_or(j, "initialize", c.initialize);
    c.sampler = sampler_from_json(j);
    c.validate();
    return c;
}

Json fit_config_to_json(const FitConfig &c) {
    return Json{{"gain_a", c.gain_a},
                {"gain_b", c.gain_b},
                {"jitter", c.jitter},
                {"jitter_floor", c.jitter_floor},
                {"window", c.window},
                {"averaging", c.averaging},
                {"max_iterations", c.max_iterations},
                {"min_iterations", c.min_iterations},
                {"tol_J", c.tol_J},
                {"tol_J_patience", c.tol_J_patience},
                {"tol_theta", c.tol_theta},
                {"max_step", c.max_step},
                {"degeneracy_patience", c.degeneracy_patience},
                {"replicates", c.replicates},
                {"steps_per_iteration", c.steps_per_iteration},
                {"burnin", c.burnin},
                {"final_burnin", c.final_burnin},
                {"final_samples", c.final_samples},
                {"final_interval", c.final_interval},
                {"seed", c.seed},
                {"initialize", c.initialize}};
}

Json fit_report_to_json(const FitReport &r) {
    Json j;
    j["status"] = fit_status_name(r.status);
    if (!r.message.empty()) {
        j["message"] = r.message;
    }
    if (!r.degenerate_target.empty()) {
        j["degenerate_target"] = r.degenerate_target;
    }
    j["iterations"] = r.iterations;
    j["parameters"] = r.parameter_names;
    j["theta_init"] = vec_json(r.theta_init);
    j["theta_hat"] = vec_json(r.theta_hat);
    j["targets"] = r.target_names;
    j["t_obs"] = vec_json(r.t_obs);
    j["mu_final"] = vec_json(r.mu_final);
    j["mu_se"] = vec_json(r.mu_se);
    j["J_final"] = std::isfinite(r.J_final) ? Json(r.J_final) : Json(nullptr);
    j["se"] = vec_json(r.se);
    j["se_note"] = "asymptotic (G'V^-1G)^-1 standard errors; tenuous for a single observed network";
    j["mc_se"] = vec_json(r.mc_se);
    j["asymptotic_covariance"] = matrix_json(r.asymptotic_covariance);
    j["gradient"] = matrix_json(r.G);
    return j;
}

void write_fit_trace_csv(std::ostream &out, const FitReport &r) {
    out << "iteration,warmup,gain,J";
    for (const std::string &p : r.parameter_names) {
        out << ',' << p;
    }
    out << '\n';
    for (const TraceRow &row : r.trace) {
        out << row.iteration << ',' << (row.warmup ? 1 : 0) << ',' << format_double(row.gain) << ','
            << format_double(row.J);
        for (double v : row.theta) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

VitalConfig vital_from_json(const Json &j) {
    if (!j.is_object()) {
        throw ConfigError("vital config must be a JSON object");
    }
    VitalConfig v;
    v.birth_prob = get_or(j, "birth_prob", v.birth_prob);
    v.death_prob = get_or(j, "death_prob", v.death_prob);
    v.entry_age_months = get_or(j, "entry_age_months", v.entry_age_months);
    v.exit_age_months = get_or(j, "exit_age_months", v.exit_age_months);
    v.steps = get_or(j, "steps", v.steps);
    v.seed = get_or(j, "seed", v.seed);
    v.aging = get_or(j, "aging", v.aging);
    v.validate();
    return v;
}

Json vital_to_json(const VitalConfig &v) {
    return Json{{"birth_prob", v.birth_prob},   {"death_prob", v.death_prob},
                {"entry_age_months", v.entry_age_months}, {"exit_age_months", v.exit_age_months},
                {"steps", v.steps},             {"seed", v.seed},
                {"aging", v.aging}};
}

AnnealConfig anneal_config_from_json(const Json &j) {
    AnnealConfig c;
    if (j.is_null()) {
        return c;
    }
    c.iterations = get_or(j, "iterations", c.iterations);
    c.t_start = get_or(j, "t_start", c.t_start);
    c.t_end = get_or(j, "t_end", c.t_end);
    c.seed = get_or(j, "seed", c.seed);
    c.trace_every = get_or(j, "trace_every", c.trace_every);
    return c;
}

// ---------------------------------------------------------------------------
// Sample CSV

void write_samples_csv(std::ostream &out, const ChainRun &run) {
    out << "replicate,sample";
    for (const std::string &n : run.names) {
        out << ',' << n;
    }
    out << '\n';
    for (std::size_t r = 0; r < run.replicates.size(); ++r) {
        for (std::size_t s = 0; s < run.replicates[r].size(); ++s) {
            out << r << ',' << s;
            for (double v : run.replicates[r][s]) {
                out << ',' << format_double(v);
            }
            out << '\n';
        }
    }
}

ChainRun read_samples_csv(std::istream &in, const std::string &source) {
    ChainRun run;
    std::string line;
    std::size_t lineno = 0;
    auto split = [](const std::string &l) {
        std::vector<std::string> f;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        return f;
    };
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "empty samples file");
    }
    ++lineno;
    std::vector<std::string> head = split(line);
    if (head.size() < 2 || head[0] != "replicate" || head[1] != "sample") {
        throw ParseError(source, 1, "expected header starting 'replicate,sample'");
    }
    run.names.assign(head.begin() + 2, head.end());
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> f = split(line);
        if (f.size() != head.size()) {
            throw ParseError(source, lineno, "wrong number of fields");
        }
        const std::size_t r = std::stoul(f[0]);
        if (run.replicates.size() <= r) {
            run.replicates.resize(r + 1);
        }
        std::vector<double> row;
        for (std::size_t k = 2; k < f.size(); ++k) {
            if (f[k] == "nan") {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            double v = 0.0;
            const auto res = std::from_chars(f[k].data(), f[k].data() + f[k].size(), v);
            if (res.ec != std::errc() || res.ptr != f[k].data() + f[k].size()) {
                throw ParseError(source, lineno, "bad number '" + f[k] + "'");
            }
            row.push_back(v);
        }
        run.replicates[r].push_back(std::move(row));
    }
    return run;
}

// ---------------------------------------------------------------------------
// Generic CSV

namespace {

std::vector<std::string> split_cells(const std::string &line) {
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) {
            return f;
        }
        start = comma + 1;
    }
}

double parse_number(const std::string &cell) {
    if (cell == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (cell == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (cell == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw ConfigError("bad number '" + cell + "'");
    }
    return v;
}

} // namespace

std::size_t CsvTable::column(const std::string &name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw ConfigError("no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string &name) const {
    return parse_number(rows.at(row).at(column(name)));
}

CsvTable read_csv_table(std::istream &in, const std::string &source) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells = split_cells(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ParseError(source, lineno,
                             "expected " + std::to_string(t.header.size()) + " fields, found " +
                                 std::to_string(cells.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) {
        throw ParseError(source, 1, "missing header row");
    }
    return t;
}

std::vector<TieRecord> read_tie_history_csv(std::istream &in, const std::string &source) {
    const CsvTable t = read_csv_table(in, source);
    if (t.header != std::vector<std::string>{"i", "j", "onset", "end", "duration", "cause"}) {
        throw ParseError(source, 1, "expected header 'i,j,onset,end,duration,cause'");
    }
    std::vector<TieRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto &row = t.rows[r];
        try {
            TieRecord rec;
            rec.dyad = Dyad::of(std::stoi(row[0]), std::stoi(row[1]));
            rec.onset = std::stoi(row[2]);
            if (!row[3].empty()) {
                rec.end = std::stoi(row[3]);
            }
            if (row[5] == "none") {
                rec.cause = CensorCause::none;
            } else if (row[5] == "actor_removed") {
                rec.cause = CensorCause::actor_removed;
            } else if (row[5] == "simulation_end") {
                rec.cause = CensorCause::simulation_end;
            } else {
                throw ConfigError("unknown cause '" + row[5] + "'");
            }
            out.push_back(rec);
        } catch (const std::logic_error &) {
            throw ParseError(source, r + 2, "malformed tie record");
        } catch (const ConfigError &e) {
            throw ParseError(source, r + 2, e.what());
        }
    }
    return out;
}

} // namespace stergm
