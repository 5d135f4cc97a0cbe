#include "stergm/netcore.hpp"

#include "stergm/rng.hpp"

#include <algorithm>

namespace stergm {

std::string_view attribute_name(Attribute attr) noexcept {
    return attr == Attribute::sex ? "sex" : "race";
}

Attribute parse_attribute(std::string_view name) {
    if (name == "sex") {
        return Attribute::sex;
    }
    if (name == "race") {
        return Attribute::race;
    }
    throw ConfigError("unknown attribute '" + std::string(name) + "' (expected sex or race)");
}

// ---------------------------------------------------------------------------
// ActorTable

ActorId ActorTable::add(std::string_view sex, std::string_view race, int age_months) {
    return add_coded(intern(Attribute::sex, sex), intern(Attribute::race, race), age_months);
}

ActorId ActorTable::add_coded(int sex, int race, int age_months) {
    if (sex < 0 || static_cast<std::size_t>(sex) >= levels(Attribute::sex).size() || race < 0 ||
        static_cast<std::size_t>(race) >= levels(Attribute::race).size()) {
        throw ContractError("actor attribute code out of range");
    }
    if (age_months < 0) {
        throw ConfigError("negative age_months " + std::to_string(age_months));
    }
    const auto id = static_cast<ActorId>(actors_.size());
    actors_.push_back(Actor{id, sex, race, age_months, true});
    ++active_count_;
    return id;
}

const Actor &ActorTable::at(ActorId id) const {
    if (!contains(id)) {
        throw ContractError("unknown actor id " + std::to_string(id));
    }
    return actors_[static_cast<std::size_t>(id)];
}

Actor &ActorTable::at(ActorId id) {
    if (!contains(id)) {
        throw ContractError("unknown actor id " + std::to_string(id));
    }
    return actors_[static_cast<std::size_t>(id)];
}

std::vector<ActorId> ActorTable::active_ids() const {
    std::vector<ActorId> ids;
    ids.reserve(active_count_);
    for (const Actor &a : actors_) {
        if (a.active) {
            ids.push_back(a.id);
        }
    }
    return ids;
}

void ActorTable::deactivate(ActorId id) {
    Actor &a = at(id);
    if (a.active) {
        a.active = false;
        --active_count_;
    }
}

int ActorTable::code(Attribute attr, std::string_view level) const {
    const auto &lv = levels(attr);
    const auto it = std::find(lv.begin(), lv.end(), level);
    if (it == lv.end()) {
        throw ConfigError("unknown " + std::string(attribute_name(attr)) + " level '" +
                          std::string(level) + "'");
    }
    return static_cast<int>(it - lv.begin());
}

bool ActorTable::has_level(Attribute attr, std::string_view level) const {
    const auto &lv = levels(attr);
    return std::find(lv.begin(), lv.end(), level) != lv.end();
}

int ActorTable::intern(Attribute attr, std::string_view level) {
    if (level.empty()) {
        throw ConfigError("empty " + std::string(attribute_name(attr)) + " level");
    }
    auto &lv = levels_[static_cast<std::size_t>(attr)];
    const auto it = std::find(lv.begin(), lv.end(), level);
    if (it != lv.end()) {
        return static_cast<int>(it - lv.begin());
    }
    lv.emplace_back(level);
    return static_cast<int>(lv.size() - 1);
}

const std::string &ActorTable::label(Attribute attr, int code) const {
    const auto &lv = levels(attr);
    if (code < 0 || static_cast<std::size_t>(code) >= lv.size()) {
        throw ContractError("attribute code out of range");
    }
    return lv[static_cast<std::size_t>(code)];
}

std::size_t ActorTable::count_level(Attribute attr, int code) const {
    return static_cast<std::size_t>(std::count_if(actors_.begin(), actors_.end(), [&](const Actor &a) {
        return a.active && a.attribute(attr) == code;
    }));
}

// ---------------------------------------------------------------------------
// DyadSpace

DyadSpace DyadSpace::bipartite(Attribute attr) {
    DyadSpace s;
    s.kind_ = DyadSpaceKind::bipartite_by_attribute;
    s.attr_ = attr;
    return s;
}

DyadSpace DyadSpace::explicit_list(std::vector<Dyad> dyads) {
    std::sort(dyads.begin(), dyads.end());
    dyads.erase(std::unique(dyads.begin(), dyads.end()), dyads.end());
    DyadSpace s;
    s.kind_ = DyadSpaceKind::explicit_list;
    s.listed_ = std::move(dyads);
    return s;
}

bool DyadSpace::contains(const ActorTable &actors, Dyad d) const {
    if (d.lo == d.hi || !actors.is_active(d.lo) || !actors.is_active(d.hi)) {
        return false;
    }
    switch (kind_) {
    case DyadSpaceKind::all_undirected:
        return true;
    case DyadSpaceKind::bipartite_by_attribute:
        return actors.at(d.lo).attribute(attr_) != actors.at(d.hi).attribute(attr_);
    case DyadSpaceKind::explicit_list:
        return std::binary_search(listed_.begin(), listed_.end(), d);
    }
    return false;
}

std::size_t DyadSpace::size(const ActorTable &actors) const {
    const std::size_t n = actors.active_count();
    switch (kind_) {
    case DyadSpaceKind::all_undirected:
        return n < 2 ? 0 : n * (n - 1) / 2;
    case DyadSpaceKind::bipartite_by_attribute: {
        std::size_t same = 0;
        for (std::size_t c = 0; c < actors.levels(attr_).size(); ++c) {
            const std::size_t k = actors.count_level(attr_, static_cast<int>(c));
            same += k < 2 ? 0 : k * (k - 1) / 2;
        }
        return (n < 2 ? 0 : n * (n - 1) / 2) - same;
    }
    case DyadSpaceKind::explicit_list:
        return static_cast<std::size_t>(std::count_if(listed_.begin(), listed_.end(), [&](const Dyad &d) {
            return actors.is_active(d.lo) && actors.is_active(d.hi);
        }));
    }
    return 0;
}

Dyad DyadSpace::sample(const ActorTable &actors, Rng &rng) const {
    if (size(actors) == 0) {
        throw ContractError("cannot sample from an empty dyad space");
    }
    if (kind_ == DyadSpaceKind::explicit_list) {
        for (;;) {
            const Dyad &d = listed_[rng.below(listed_.size())];
            if (actors.is_active(d.lo) && actors.is_active(d.hi)) {
                return d;
            }
        }
    }
    const std::vector<ActorId> ids = actors.active_ids();
    for (;;) {
        const auto a = ids[rng.below(ids.size())];
        const auto b = ids[rng.below(ids.size())];
        if (a == b) {
            continue;
        }
        const Dyad d = Dyad::of(a, b);
        if (kind_ == DyadSpaceKind::all_undirected || contains(actors, d)) {
            return d;
        }
    }
}

// ---------------------------------------------------------------------------
// NetworkState

void NetworkState::set_clock(int clock) {
    for (const auto &[d, on] : onset_) {
        if (on > clock) {
            throw ContractError("clock " + std::to_string(clock) + " precedes onset of a tie");
        }
    }
    clock_ = clock;
}

int NetworkState::onset(Dyad d) const {
    const auto it = onset_.find(d);
    if (it == onset_.end()) {
        throw ContractError("no tie (" + std::to_string(d.lo) + "," + std::to_string(d.hi) + ")");
    }
    return it->second;
}

std::size_t NetworkState::degree(ActorId i) const noexcept {
    if (i < 0 || static_cast<std::size_t>(i) >= adjacency_.size()) {
        return 0;
    }
    return adjacency_[static_cast<std::size_t>(i)].size();
}

std::span<const ActorId> NetworkState::neighbors(ActorId i) const noexcept {
    if (i < 0 || static_cast<std::size_t>(i) >= adjacency_.size()) {
        return {};
    }
    return adjacency_[static_cast<std::size_t>(i)];
}

void NetworkState::add_tie(Dyad d, int onset) {
    if (onset > clock_) {
        throw ContractError("tie onset " + std::to_string(onset) + " is after clock " +
                            std::to_string(clock_));
    }
    if (!onset_.emplace(d, onset).second) {
        throw ContractError("tie (" + std::to_string(d.lo) + "," + std::to_string(d.hi) +
                            ") already present");
    }
    const auto need = static_cast<std::size_t>(d.hi) + 1;
    if (adjacency_.size() < need) {
        adjacency_.resize(need);
    }
    auto insert_sorted = [](std::vector<ActorId> &v, ActorId x) {
        v.insert(std::lower_bound(v.begin(), v.end(), x), x);
    };
    insert_sorted(adjacency_[static_cast<std::size_t>(d.lo)], d.hi);
    insert_sorted(adjacency_[static_cast<std::size_t>(d.hi)], d.lo);
}

void NetworkState::remove_tie(Dyad d) {
    if (onset_.erase(d) == 0) {
        throw ContractError("tie (" + std::to_string(d.lo) + "," + std::to_string(d.hi) + ") absent");
    }
    auto erase_sorted = [](std::vector<ActorId> &v, ActorId x) {
        v.erase(std::lower_bound(v.begin(), v.end(), x));
    };
    erase_sorted(adjacency_[static_cast<std::size_t>(d.lo)], d.hi);
    erase_sorted(adjacency_[static_cast<std::size_t>(d.hi)], d.lo);
}

std::vector<Dyad> NetworkState::remove_incident(ActorId i) {
    std::vector<Dyad> removed;
    const auto nb = neighbors(i);
    removed.reserve(nb.size());
    for (ActorId j : nb) {
        removed.push_back(Dyad::of(i, j));
    }
    std::sort(removed.begin(), removed.end());
    for (const Dyad &d : removed) {
        remove_tie(d);
    }
    return removed;
}

// ---------------------------------------------------------------------------

void apply_step(NetworkState &net, const PhaseOutcome &outcome) {
    for (const Dyad &d : outcome.formed) {
        if (net.has_tie(d)) {
            throw ContractError("formed tie (" + std::to_string(d.lo) + "," + std::to_string(d.hi) +
                                ") already present in the previous network");
        }
    }
    for (const Dyad &d : outcome.dissolved) {
        if (!net.has_tie(d)) {
            throw ContractError("dissolved tie (" + std::to_string(d.lo) + "," +
                                std::to_string(d.hi) + ") absent from the previous network");
        }
    }
    for (const Dyad &d : outcome.dissolved) {
        net.remove_tie(d);
    }
    net.set_clock(net.clock() + 1);
    for (const Dyad &d : outcome.formed) {
        net.add_tie(d, net.clock());
    }
}

NetworkState compose_step(const NetworkState &prev, const PhaseOutcome &outcome) {
    NetworkState next = prev;
    apply_step(next, outcome);
    return next;
}

std::vector<std::pair<Dyad, int>> tie_age_vector(const NetworkState &net) {
    std::vector<std::pair<Dyad, int>> out;
    out.reserve(net.edge_count());
    for (const auto &[d, on] : net.ties()) {
        out.emplace_back(d, net.clock() - on + 1);
    }
    return out;
}

void validate_network(const NetworkState &net, const ActorTable &actors, const DyadSpace &space) {
    for (const auto &[d, on] : net.ties()) {
        if (!space.contains(actors, d)) {
            throw ContractError("tie (" + std::to_string(d.lo) + "," + std::to_string(d.hi) +
                                ") outside the dyad space or incident on an inactive actor");
        }
        if (on > net.clock()) {
            throw ContractError("tie onset after the network clock");
        }
    }
}

} // namespace stergm
