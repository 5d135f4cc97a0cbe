#pragma once

#include "stergm/dynamics.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stergm {

struct VitalConfig {
    double birth_prob = 0.0023;
    double death_prob = 0.00042;
    int entry_age_months = 216;
    int exit_age_months = 720;
    std::size_t steps = 6000;
    std::uint64_t seed = 1;
    /// Ages advance one month per step; off for a static validation run.
    bool aging = true;

    void validate() const;
    /// No births, deaths or aging: the population is fixed.
    static VitalConfig frozen(std::size_t steps, std::uint64_t seed);
};

enum class CensorCause { none, actor_removed, simulation_end };

std::string censor_cause_name(CensorCause c);

/// One tie's lifetime. A dissolved tie formed at `onset` and absent at step `end` lasted
/// end - onset steps; a censored tie was last seen at `end` with age end - onset + 1.
struct TieRecord {
    Dyad dyad;
    int onset = 0;
    std::optional<int> end;
    CensorCause cause = CensorCause::none;

    bool censored() const noexcept { return cause != CensorCause::none; }
    /// Observed (possibly censored) duration; ContractError while the tie is still open.
    int duration() const;
};

class TieHistoryLog {
public:
    /// Registers ties already present (their onsets may predate the log).
    void open_existing(const NetworkState &net);
    void formed(Dyad d, int onset);
    void dissolved(Dyad d, int clock);
    void removed(Dyad d, int clock);
    /// Censors every open tie at `clock`.
    void close(int clock);

    const std::vector<TieRecord> &records() const noexcept { return records_; }
    std::size_t open_count() const noexcept { return open_.size(); }

private:
    void finish(Dyad d, int clock, CensorCause cause);

    std::vector<TieRecord> records_;
    std::map<Dyad, std::size_t> open_;
};

void write_tie_history_csv(std::ostream &out, const TieHistoryLog &log);

struct KmResult {
    double raw_mean = 0.0;
    double km_mean = 0.0;
    std::size_t completed = 0;
    std::size_t censored = 0;
    /// (x, S(x)) at each distinct event time.
    std::vector<std::pair<int, double>> survival;
};

/// Product-limit estimate from (duration, censored) pairs; km_mean sums S(x) for
/// x = 0 .. max duration - 1. UndefinedTargetError when every record is censored.
KmResult kaplan_meier(const std::vector<std::pair<int, bool>> &observations);
KmResult km_adjusted_mean_duration(const TieHistoryLog &log);

/// One row of the composition report.
struct CompositionRow {
    std::size_t step = 0;
    std::size_t n = 0;
    std::size_t edges = 0;
    /// Per sex x race group: label "sex/race", count, mean degree.
    std::vector<std::string> groups;
    std::vector<std::size_t> group_counts;
    std::vector<double> group_mean_degree;
    /// Targets under the per-capita rule.
    std::vector<double> targets;
};

CompositionRow composition_row(std::size_t step, const NetworkState &net, const ActorTable &actors,
                               const TargetSpec &spec);
void write_composition_csv(std::ostream &out, const std::vector<std::string> &target_names,
                           const std::vector<CompositionRow> &rows);

struct PopState {
    ActorTable actors;
    NetworkState net;
    TieHistoryLog log;
    std::size_t step = 0;
};

/// One month: network step with n taken before any vital change, then births, deaths,
/// aging, age-out, removal of ties incident on removed actors, and the record.
/// Returns the ids removed this step.
std::vector<ActorId> popsim_step(PopState &state, StepEngine &engine, const VitalConfig &vital);

struct PopsimResult {
    PopState final_state;
    std::vector<CompositionRow> composition;
    KmResult durations;
    bool durations_available = false;
};

/// Runs `vital.steps` months and closes the tie log at the end.
PopsimResult run_popsim(const NetworkState &init, const ActorTable &actors, const ModelSpec &model,
                        const VitalConfig &vital, const TargetSpec &spec, SamplerConfig sampler = {});

} // namespace stergm
