#include "stergm/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace stergm;

namespace {

struct Invocation {
    int code = 0;
    std::string err;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "stergm");
    std::vector<const char *> argv;
    for (const std::string &a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream captured_err, captured_out;
    std::streambuf *old_err = std::cerr.rdbuf(captured_err.rdbuf());
    std::streambuf *old_out = std::cout.rdbuf(captured_out.rdbuf());
    const int code = cli::run(static_cast<int>(argv.size()), argv.data());
    std::cerr.rdbuf(old_err);
    std::cout.rdbuf(old_out);
    return {code, captured_err.str()};
}

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("stergm_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string write(const fs::path &p, const std::string &text) {
    std::ofstream(p) << text;
    return p.string();
}

const char *kEdgesModel = R"({
  "formation": [{"term": "edges", "theta": -2.0}],
  "dissolution": [{"term": "edges", "theta": 1.0}],
  "targets": [{"term": "edges"}, {"term": "mean-tie-age"}]
})";

std::string network_of(int n) {
    Json j;
    j["clock"] = 1;
    j["actors"] = Json::array();
    for (int i = 0; i < n; ++i) {
        j["actors"].push_back({{"id", i}, {"sex", i % 2 ? "F" : "M"}, {"race", "W"}, {"age_months", 300}});
    }
    j["ties"] = Json::array();
    return j.dump();
}

Json manifest_of(const fs::path &dir) { return read_json_file((dir / "manifest.json").string()); }

} // namespace

TEST_CASE("exit codes") {
    const fs::path d = scratch("codes");
    CHECK(invoke({}).code == cli::exit_config);
    CHECK(invoke({"nonsense"}).code == cli::exit_config);
    CHECK(invoke({"equilibrium", "--model", (d / "missing.json").string(), "--n", "10"}).code == cli::exit_config);
    const std::string model = write(d / "model.json", kEdgesModel);
    CHECK(invoke({"--out-dir", (d / "iso").string(), "equilibrium", "--model", model, "--n", "10", "--isolates", "10"})
              .code == cli::exit_numerical);
    CHECK(manifest_of(d / "iso")["status"] != "ok");

    const std::string frozen = write(d / "frozen.json", R"({
      "formation": [{"term": "edges", "theta": "-inf"}, {"term": "same-category", "args": {"attr": "race"}}],
      "dissolution": [{"term": "edges", "theta": "inf"}],
      "targets": [{"term": "edges"}]
    })");
    const std::string net = write(d / "net.json", network_of(8));
    const std::string targets = write(d / "targets.json", R"({"targets":[{"name":"edges","value":3}]})");
    const std::string cfg = write(d / "cfg.json", R"({"initialize": false, "degeneracy_patience": 5, "burnin": 5})");
    CHECK(invoke({"--out-dir", (d / "degen").string(), "fit", "--model", frozen, "--network", net, "--targets", targets,
                  "--config", cfg})
              .code == cli::exit_degenerate);

    const std::string short_cfg = write(d / "short.json", R"({"max_iterations": 3, "burnin": 5})");
    const std::string edges_targets =
        write(d / "t2.json", R"({"targets":[{"name":"edges","value":3},{"name":"mean-tie-age","value":4}]})");
    CHECK(invoke({"--out-dir", (d / "short").string(), "fit", "--model", model, "--network", net, "--targets",
                  edges_targets, "--config", short_cfg})
              .code == cli::exit_numerical);
    CHECK(fs::exists(d / "short" / "fit_report.json"));
}

TEST_CASE("parse errors name the offending line") {
    const fs::path d = scratch("parse");
    const std::string survey = write(d / "survey.csv",
                                     "record,ego_id,sex,race,age_months,start_months_before,end_months_before,alter_key\n"
                                     "ego,1,M,W,300,,,\n"
                                     "alter,1,F,W,12.5,2,ONGOING,\n");
    const std::string spec = write(d / "spec.json", kEdgesModel);
    const Invocation r = invoke({"--out-dir", (d / "out").string(), "ego-stats", "--survey", survey, "--spec", spec});
    CHECK(r.code == cli::exit_config);
    CHECK(r.err.find("survey.csv:3") != std::string::npos);
}

TEST_CASE("sha256 matches the standard test vector") {
    CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("same seed, same artifacts") {
    const fs::path d = scratch("repro");
    const std::string model = write(d / "model.json", kEdgesModel);
    const std::string net = write(d / "net.json", network_of(12));
    auto run_sim = [&](const std::string &dir, const std::string &seed) {
        return invoke({"--seed", seed, "--out-dir", (d / dir).string(), "simulate", "--model", model, "--network", net,
                       "--steps", "40", "--burnin", "5", "--replicates", "2"})
            .code;
    };
    REQUIRE(run_sim("a", "9") == 0);
    REQUIRE(run_sim("b", "9") == 0);
    REQUIRE(run_sim("c", "10") == 0);
    const Json ma = manifest_of(d / "a");
    const Json mb = manifest_of(d / "b");
    const Json mc = manifest_of(d / "c");
    CHECK(ma["outputs"] == mb["outputs"]);
    CHECK(ma["outputs"] != mc["outputs"]);
    CHECK(ma["status"] == "ok");
    CHECK(ma["seed"] == 9);
    for (const Json &o : ma["outputs"]) {
        CHECK(o["sha256"] == cli::sha256_file((d / "a" / o["file"].get<std::string>()).string()));
    }
    CHECK(ma["inputs"].size() == 2);

    std::ifstream in(d / "a" / "samples.csv");
    const ChainRun run = read_samples_csv(in);
    CHECK(run.replicates.size() == 2);
    CHECK(run.replicates[0].size() == 40);
}

TEST_CASE("equilibrium command") {
    const fs::path d = scratch("equilibrium");
    const std::string model = write(d / "model.json", R"({
      "formation": [{"term": "offset-log-inverse-n"}, {"term": "edges", "theta": 0}],
      "dissolution": [{"term": "edges", "theta": 0}]
    })");
    REQUIRE(invoke({"--out-dir", (d / "out").string(), "equilibrium", "--model", model, "--n", "50"}).code == 0);
    const Json j = read_json_file((d / "out" / "equilibrium.json").string());
    CHECK(j["offset"]["mean_degree_limit"].get<double>() == doctest::Approx(2.0));
    CHECK(j["dissolution"]["mean_duration"].get<double>() == doctest::Approx(2.0));
    std::ifstream in(d / "out" / "durations.csv");
    const CsvTable t = read_csv_table(in);
    CHECK(t.number(0, "duration_pmf") == doctest::Approx(0.5));
    CHECK(t.number(2, "observed_age_pmf") == doctest::Approx(t.number(2, "duration_pmf")));
}

TEST_CASE("popsim command outputs read back") {
    const fs::path d = scratch("popsim");
    const std::string model = write(d / "model.json", kEdgesModel);
    const std::string net = write(d / "net.json", network_of(30));
    const std::string vital = write(d / "vital.json", R"({"birth_prob":0.01,"death_prob":0.01,"steps":60})");
    REQUIRE(invoke({"--seed", "3", "--out-dir", (d / "out").string(), "popsim", "--model", model, "--init", net,
                    "--vital", vital})
                .code == 0);
    std::ifstream stats(d / "out" / "stats.csv");
    const CsvTable t = read_csv_table(stats);
    CHECK(t.rows.size() == 61);
    CHECK(t.number(0, "n") == 30.0);
    std::ifstream hist(d / "out" / "tie_history.csv");
    const std::vector<TieRecord> recs = read_tie_history_csv(hist);
    CHECK_FALSE(recs.empty());
    const NetworkFile final_net = read_network_file((d / "out" / "final_network.json").string());
    std::size_t open_at_end = 0;
    for (const TieRecord &r : recs) {
        open_at_end += r.cause == CensorCause::simulation_end ? 1 : 0;
    }
    CHECK(open_at_end == final_net.net.edge_count());
}

TEST_CASE("init-network and ego-stats commands") {
    const fs::path d = scratch("init");
    const std::string model = write(d / "model.json", kEdgesModel);
    const std::string targets =
        write(d / "targets.json", R"({"targets":[{"name":"edges","value":25},{"name":"mean-tie-age","value":6}]})");
    REQUIRE(invoke({"--out-dir", (d / "net").string(), "init-network", "--model", model, "--targets", targets, "--n", "40"})
                .code == 0);
    const NetworkFile nf = read_network_file((d / "net" / "network.json").string());
    CHECK(nf.net.edge_count() == 25);

    const std::string survey = write(d / "survey.csv",
                                     "record,ego_id,sex,race,age_months,start_months_before,end_months_before,alter_key\n"
                                     "ego,1,M,W,300,,,\n"
                                     "alter,1,F,W,280,2,ONGOING,\n"
                                     "ego,2,F,W,310,,,\n"
                                     "alter,2,M,W,300,4,ONGOING,\n");
    REQUIRE(invoke({"--out-dir", (d / "ego").string(), "ego-stats", "--survey", survey, "--spec", model, "--resample", "0"})
                .code == 0);
    const Json j = read_json_file((d / "ego" / "ego_targets.json").string());
    TargetSpec spec;
    spec.terms = {StatisticTerm::edges()};
    spec.durations = {DurationTarget::mean_tie_age};
    const std::vector<double> v = target_values_from_json(j, spec);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 4.0);
    const Json tr = read_json_file((d / "ego" / "transition.json").string());
    CHECK(tr.dump().find("unavailable") != std::string::npos);
}
