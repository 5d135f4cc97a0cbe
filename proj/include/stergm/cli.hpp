#pragma once

#include "stergm/egmme.hpp"
#include "stergm/egodata.hpp"
#include "stergm/io.hpp"
#include "stergm/popsim.hpp"

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stergm::cli {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_numerical = 3, exit_degenerate = 4 };

/// Config and parse errors map to 2, numerical and undefined-target failures to 3,
/// degeneracy to 4, anything else to 1.
int exit_code_for(const std::exception &e) noexcept;

/// Options shared by every subcommand. `seed_given` records an explicit --seed.
struct Common {
    std::uint64_t seed = 1;
    bool seed_given = false;
    unsigned threads = 1;
    std::string out_dir = ".";
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string &path);

/// manifest.json contents. Outputs are every other regular file in the directory.
struct Manifest {
    std::string command;
    std::vector<std::string> arguments;
    std::vector<std::pair<std::string, std::string>> inputs;
    std::uint64_t seed = 1;
    std::string version;
    std::string started;
    std::string finished;
    std::string status;
    std::vector<std::pair<std::string, std::string>> outputs;
};

/// Digests the directory's files (manifest.json excluded, names sorted) and writes the manifest.
void write_manifest(const std::string &out_dir, Manifest m);

/// UTC timestamp in ISO 8601 form.
std::string utc_now();

struct SimulateOptions {
    std::string model;
    std::string network;
    std::size_t steps = 100;
    std::size_t burnin = 0;
    std::size_t interval = 1;
    std::size_t replicates = 1;
    std::string sampler = "automatic";
    std::size_t proposals = 0;
    std::string out = "samples.csv";
};

struct EquilibriumOptions {
    std::string model;
    /// Network supplying the actors, or `n` attribute-free actors.
    std::string network;
    std::size_t n = 0;
    long max_duration = 100;
    std::optional<double> isolates;
};

struct FitOptions {
    std::string model;
    std::string network;
    std::string targets;
    std::string config;
    std::string out = "fit_report.json";
};

struct EgoStatsOptions {
    std::string survey;
    std::string spec;
    std::string previous;
    std::size_t resample = 1000;
    std::string out = "ego_targets.json";
};

struct InitNetworkOptions {
    std::string model;
    std::string targets;
    std::string actors;
    std::size_t n = 0;
    std::optional<double> mean_age;
    std::string anneal;
};

struct PopsimOptions {
    std::string model;
    std::string init;
    std::string vital;
    std::optional<std::size_t> steps;
};

struct PipelineOptions {
    std::string survey;
    std::string model;
    std::string vital;
    std::string fit_config;
    std::string anneal_config;
    /// Pseudo-population size; 0 keeps the egos as sampled.
    std::size_t resample = 1000;
    std::size_t validation_steps = 1000;
    double validation_tolerance_se = 3.0;
};

/// Static-population check of one target.
struct ValidationRow {
    std::string name;
    double target = 0.0;
    double mean = 0.0;
    double se = 0.0;
    bool within = false;
};

struct PipelineResult {
    std::vector<std::string> stages;
    EgoTargetReport ego;
    std::optional<double> shortcut_theta;
    FitReport fit;
    std::vector<ValidationRow> validation;
    bool validation_passed = false;
    /// Mean degree targeted and realized under vital dynamics (NaN without an edges target).
    double target_mean_degree = 0.0;
    double popsim_mean_degree = 0.0;
    KmResult durations;
    bool durations_available = false;
};

// Each command writes its artifacts and a manifest into common.out_dir and returns the
// exit status. Errors propagate as exceptions; `run` maps them to exit codes.
int cmd_simulate(const SimulateOptions &o, const Common &c);
int cmd_equilibrium(const EquilibriumOptions &o, const Common &c);
int cmd_fit(const FitOptions &o, const Common &c);
int cmd_ego_stats(const EgoStatsOptions &o, const Common &c);
int cmd_init_network(const InitNetworkOptions &o, const Common &c);
int cmd_popsim(const PopsimOptions &o, const Common &c);

/// ego-stats, dissolution shortcut, annealed starting network, fit, static validation and
/// the vital-dynamics run. pipeline_stage.json in the output directory names the stage
/// reached; a failed stage leaves it marked "failed" with the earlier artifacts in place.
PipelineResult run_pipeline(const PipelineOptions &o, const Common &c);
int cmd_pipeline(const PipelineOptions &o, const Common &c);

/// Parses the command line and runs the subcommand; never throws.
int run(int argc, const char *const *argv);

} // namespace stergm::cli
