#pragma once

#include "stergm/annealing.hpp"
#include "stergm/dynamics.hpp"
#include "stergm/egmme.hpp"
#include "stergm/popsim.hpp"
#include "stergm/statistics.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace stergm {

using Json = nlohmann::ordered_json;

/// Reads a whole JSON file; ConfigError when unreadable or malformed.
Json read_json_file(const std::string &path);
void write_json_file(const std::string &path, const Json &j);
std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &text);

/// Network file: {"actors":[{id,sex,race,age_months}], "ties":[{i,j,onset}], "clock":t}.
/// Actor ids must be 0..n-1.
struct NetworkFile {
    ActorTable actors;
    NetworkState net;
};
NetworkFile network_from_json(const Json &j);
Json network_to_json(const NetworkState &net, const ActorTable &actors);
NetworkFile read_network_file(const std::string &path);

/// Attribute table CSV with header id,sex,race,age_months; ids must be 0..n-1 in order.
ActorTable read_actor_csv(std::istream &in, const std::string &source = "actors");
void write_actor_csv(std::ostream &out, const ActorTable &actors);

/// {"term": name, "args": {...}} as used in model and target lists.
StatisticTerm term_from_json(const Json &j);
Json term_to_json(const StatisticTerm &t);

/// Coefficient: a number or one of "inf", "+inf", "-inf".
double theta_from_json(const Json &j);
Json theta_to_json(double theta);

/// Model file: {"formation":[...], "dissolution":[...], "targets":[...],
/// "normalization": "raw"|"per-capita", "dyad_space": {...}}. An
/// "offset-log-inverse-n" formation entry switches the size offset on.
struct ModelFile {
    ModelSpec model;
    TargetSpec targets;
};
ModelFile model_from_json(const Json &j);
Json model_to_json(const ModelSpec &model, const TargetSpec &targets);
TargetSpec target_spec_from_json(const Json &list, const Json &normalization);

/// Observed targets: {"targets":[{"name":..., "value":...}, ...]} in spec order.
std::vector<double> target_values_from_json(const Json &j, const TargetSpec &spec);
Json target_values_to_json(const std::vector<std::string> &names, const std::vector<double> &values);

/// "automatic", "exact" or "mcmc".
SamplerMode parse_sampler_mode(const std::string &name);

FitConfig fit_config_from_json(const Json &j);
Json fit_config_to_json(const FitConfig &c);
Json fit_report_to_json(const FitReport &r);
void write_fit_trace_csv(std::ostream &out, const FitReport &r);

VitalConfig vital_from_json(const Json &j);
Json vital_to_json(const VitalConfig &v);

AnnealConfig anneal_config_from_json(const Json &j);

/// Header row of names then one row per sample, prefixed with replicate and sample index.
void write_samples_csv(std::ostream &out, const ChainRun &run);
/// Reads back a file written by write_samples_csv.
ChainRun read_samples_csv(std::istream &in, const std::string &source = "samples");

/// Header plus rows of raw cells; ParseError for a missing header or a ragged row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; ConfigError when absent.
    std::size_t column(const std::string &name) const;
    double number(std::size_t row, const std::string &name) const;
};
CsvTable read_csv_table(std::istream &in, const std::string &source = "csv");

/// Reads back a file written by write_tie_history_csv.
std::vector<TieRecord> read_tie_history_csv(std::istream &in, const std::string &source = "tie history");

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

} // namespace stergm
