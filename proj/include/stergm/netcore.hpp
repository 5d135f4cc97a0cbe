#pragma once

#include "stergm/errors.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stergm {

class Rng;

using ActorId = std::int32_t;

/// Unordered actor pair stored with lo < hi. Self-loops cannot be represented.
struct Dyad {
    ActorId lo = 0;
    ActorId hi = 1;

    static Dyad of(ActorId a, ActorId b) {
        if (a == b || a < 0 || b < 0) {
            throw ContractError("invalid dyad (" + std::to_string(a) + "," + std::to_string(b) + ")");
        }
        return a < b ? Dyad{a, b} : Dyad{b, a};
    }

    bool touches(ActorId i) const noexcept { return lo == i || hi == i; }
    ActorId other(ActorId i) const noexcept { return lo == i ? hi : lo; }

    friend auto operator<=>(const Dyad &, const Dyad &) = default;
};

enum class Attribute { sex, race };

std::string_view attribute_name(Attribute attr) noexcept;
Attribute parse_attribute(std::string_view name);

struct Actor {
    ActorId id = 0;
    int sex = 0;
    int race = 0;
    int age_months = 0;
    bool active = true;

    int attribute(Attribute attr) const noexcept { return attr == Attribute::sex ? sex : race; }
    double age_years() const noexcept { return age_months / 12.0; }
};

/// Actors with categorical sex/race codes. Ids are dense (0..size-1), assigned in
/// insertion order, and never reused: removed actors stay as inactive records.
class ActorTable {
public:
    ActorId add(std::string_view sex, std::string_view race, int age_months);
    ActorId add_coded(int sex, int race, int age_months);

    std::size_t size() const noexcept { return actors_.size(); }
    std::size_t active_count() const noexcept { return active_count_; }
    bool contains(ActorId id) const noexcept {
        return id >= 0 && static_cast<std::size_t>(id) < actors_.size();
    }
    bool is_active(ActorId id) const noexcept { return contains(id) && actors_[id].active; }

    const Actor &at(ActorId id) const;
    Actor &at(ActorId id);
    const std::vector<Actor> &records() const noexcept { return actors_; }
    std::vector<ActorId> active_ids() const;

    void deactivate(ActorId id);

    /// Code of an existing level; ConfigError when the level is unknown.
    int code(Attribute attr, std::string_view level) const;
    bool has_level(Attribute attr, std::string_view level) const;
    /// Code of a level, registering it when new.
    int intern(Attribute attr, std::string_view level);
    const std::vector<std::string> &levels(Attribute attr) const noexcept {
        return levels_[static_cast<std::size_t>(attr)];
    }
    const std::string &label(Attribute attr, int code) const;

    /// Number of active actors carrying the given level.
    std::size_t count_level(Attribute attr, int code) const;

private:
    std::vector<Actor> actors_;
    std::vector<std::string> levels_[2];
    std::size_t active_count_ = 0;
};

enum class DyadSpaceKind { all_undirected, bipartite_by_attribute, explicit_list };

/// Set of dyads eligible for ties, evaluated lazily over the active actors.
class DyadSpace {
public:
    DyadSpace() = default;

    static DyadSpace all() { return DyadSpace{}; }
    /// Only dyads whose endpoints differ on `attr` (e.g. heterosexual-only on sex).
    static DyadSpace bipartite(Attribute attr);
    static DyadSpace explicit_list(std::vector<Dyad> dyads);

    DyadSpaceKind kind() const noexcept { return kind_; }
    Attribute attribute() const noexcept { return attr_; }
    const std::vector<Dyad> &listed() const noexcept { return listed_; }

    bool contains(const ActorTable &actors, Dyad d) const;
    std::size_t size(const ActorTable &actors) const;
    Dyad sample(const ActorTable &actors, Rng &rng) const;

    /// Visits every dyad in canonical (lo, hi) order.
    template <class F>
    void for_each(const ActorTable &actors, F &&visit) const {
        if (kind_ == DyadSpaceKind::explicit_list) {
            for (const Dyad &d : listed_) {
                if (actors.is_active(d.lo) && actors.is_active(d.hi)) {
                    visit(d);
                }
            }
            return;
        }
        const std::vector<ActorId> ids = actors.active_ids();
        for (std::size_t a = 0; a < ids.size(); ++a) {
            const Actor &x = actors.at(ids[a]);
            for (std::size_t b = a + 1; b < ids.size(); ++b) {
                if (kind_ == DyadSpaceKind::bipartite_by_attribute &&
                    x.attribute(attr_) == actors.at(ids[b]).attribute(attr_)) {
                    continue;
                }
                visit(Dyad{ids[a], ids[b]});
            }
        }
    }

private:
    DyadSpaceKind kind_ = DyadSpaceKind::all_undirected;
    Attribute attr_ = Attribute::sex;
    std::vector<Dyad> listed_;
};

/// Undirected network with per-tie onset times. age(e) = clock - onset(e) + 1, so a tie
/// formed in the current step has age 1.
class NetworkState {
public:
    NetworkState() = default;
    explicit NetworkState(int clock) : clock_(clock) {}

    int clock() const noexcept { return clock_; }
    void set_clock(int clock);

    std::size_t edge_count() const noexcept { return onset_.size(); }
    bool empty() const noexcept { return onset_.empty(); }
    bool has_tie(Dyad d) const { return onset_.contains(d); }
    int onset(Dyad d) const;
    int age(Dyad d) const { return clock_ - onset(d) + 1; }

    std::size_t degree(ActorId i) const noexcept;
    /// Sorted neighbour ids.
    std::span<const ActorId> neighbors(ActorId i) const noexcept;

    void add_tie(Dyad d, int onset);
    void add_tie(Dyad d) { add_tie(d, clock_); }
    void remove_tie(Dyad d);
    /// Removes every tie incident on `i`, returning them in canonical order.
    std::vector<Dyad> remove_incident(ActorId i);

    /// Tie -> onset, in canonical dyad order.
    const std::map<Dyad, int> &ties() const noexcept { return onset_; }

    friend bool operator==(const NetworkState &a, const NetworkState &b) {
        return a.clock_ == b.clock_ && a.onset_ == b.onset_;
    }

private:
    int clock_ = 0;
    std::map<Dyad, int> onset_;
    std::vector<std::vector<ActorId>> adjacency_;
};

/// Ties added (y+ minus y^{t-1}) and removed (y^{t-1} minus y-) by one time step,
/// each in canonical order.
struct PhaseOutcome {
    std::vector<Dyad> formed;
    std::vector<Dyad> dissolved;
};

/// Next state: ties (prev + formed) - dissolved; clock + 1; formed ties get the new clock
/// as onset; survivors keep theirs. ContractError when `outcome` is inconsistent with `prev`.
NetworkState compose_step(const NetworkState &prev, const PhaseOutcome &outcome);

/// In-place variant of compose_step.
void apply_step(NetworkState &net, const PhaseOutcome &outcome);

std::vector<std::pair<Dyad, int>> tie_age_vector(const NetworkState &net);

/// ContractError unless every tie lies in `space` between active actors and no onset is
/// in the future.
void validate_network(const NetworkState &net, const ActorTable &actors, const DyadSpace &space);

} // namespace stergm
