#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "gravitykg/errors.hpp"

namespace gravitykg {

// A country node. `index` is dense and assigned at graph build time; the
// label<->index mapping is a bijection within one registry.
struct EntityId {
    std::string label;
    std::size_t index = 0;

    friend bool operator==(const EntityId& a, const EntityId& b) {
        return a.index == b.index && a.label == b.label;
    }
    friend auto operator<=>(const EntityId& a, const EntityId& b) {
        return std::tie(a.label, a.index) <=> std::tie(b.label, b.index);
    }
};

// Gravity band used as KG predicate. Ordinals ascend with the band's mean
// gravity score.
struct RelationLabel {
    std::string name;
    std::size_t band_ordinal = 0;

    friend bool operator==(const RelationLabel&, const RelationLabel&) = default;
    friend auto operator<=>(const RelationLabel& a, const RelationLabel& b) {
        return std::tie(a.band_ordinal, a.name) <=> std::tie(b.band_ordinal, b.name);
    }
};

inline RelationLabel make_band_label(std::size_t ordinal) {
    return RelationLabel{"gravity_band_" + std::to_string(ordinal), ordinal};
}

namespace detail {

// Recovers the ordinal from a "..._<digits>" relation name; `fallback`
// otherwise.
inline std::size_t ordinal_from_band_name(const std::string& name, std::size_t fallback) {
    const auto pos = name.find_last_of('_');
    if (pos == std::string::npos || pos + 1 >= name.size()) return fallback;
    std::size_t value = 0;
    for (std::size_t i = pos + 1; i < name.size(); ++i) {
        if (name[i] < '0' || name[i] > '9') return fallback;
        value = value * 10 + static_cast<std::size_t>(name[i] - '0');
    }
    return value;
}

} // namespace detail

struct Triple {
    EntityId head;
    RelationLabel relation;
    EntityId tail;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple& a, const Triple& b) {
        return std::tie(a.head, a.relation, a.tail) <=> std::tie(b.head, b.relation, b.tail);
    }
};

// One monthly bilateral flow observation joined with its gravity covariates.
struct TradeRecord {
    int year = 0;
    int month = 0; // 1-12
    EntityId reporter;
    EntityId partner;
    std::string commodity; // HS-6 code
    double trade_value = 0.0;
    double gdp_reporter = 0.0;
    double gdp_partner = 0.0;
    double harmonic_distance = 0.0;
};

// Attraction force between one unordered country pair for one year.
// The pair is stored with pair.first.label < pair.second.label.
struct GravityScore {
    int year = 0;
    std::pair<EntityId, EntityId> pair;
    double score = 0.0;
    double constant_G = 1.0;
};

enum class Norm { L1, L2 };

// Interns country labels into dense indices. Single-writer; idempotent.
class EntityRegistry {
public:
    EntityId intern(const std::string& label) {
        if (label.empty()) throw InvalidLabel("entity label must be non-empty");
        auto it = by_label_.find(label);
        if (it != by_label_.end()) return entities_[it->second];
        const std::size_t index = entities_.size();
        entities_.push_back(EntityId{label, index});
        by_label_.emplace(label, index);
        return entities_.back();
    }

    bool contains(const std::string& label) const { return by_label_.count(label) > 0; }

    const EntityId& at(const std::string& label) const {
        auto it = by_label_.find(label);
        if (it == by_label_.end()) throw UnknownEntity("unknown entity: " + label);
        return entities_[it->second];
    }

    const std::vector<EntityId>& entities() const { return entities_; }
    std::size_t size() const { return entities_.size(); }

private:
    std::vector<EntityId> entities_;
    std::unordered_map<std::string, std::size_t> by_label_;
};

inline EntityId intern_entity(const std::string& label, EntityRegistry& registry) {
    return registry.intern(label);
}

// Countries as nodes, gravity bands as edges. Triples are deduplicated and
// kept sorted for deterministic downstream iteration.
class KnowledgeGraph {
public:
    const std::vector<EntityId>& entities() const { return registry_.entities(); }
    const std::vector<RelationLabel>& relations() const { return relations_; }
    const std::vector<Triple>& triples() const { return triples_; }

    EntityRegistry& registry() { return registry_; }
    const EntityRegistry& registry() const { return registry_; }

    void register_relation(const RelationLabel& r) {
        if (relation_names_.insert(r.name).second) {
            relations_.push_back(r);
            std::sort(relations_.begin(), relations_.end());
        }
    }

    bool has_relation(const std::string& name) const { return relation_names_.count(name) > 0; }

    // Inserting an existing triple leaves the graph unchanged.
    bool add_triple(const Triple& t) { return triple_set_.insert(t).second; }

    // Call once after the last insertion; materializes the sorted triple list.
    void finalize() { triples_.assign(triple_set_.begin(), triple_set_.end()); }

    std::size_t triple_count() const { return triple_set_.size(); }

private:
    EntityRegistry registry_;
    std::vector<RelationLabel> relations_;
    std::set<std::string> relation_names_;
    std::set<Triple> triple_set_;
    std::vector<Triple> triples_;
};

// True iff head, tail and relation are registered and the triple is not a
// self-loop (a country does not trade with itself).
inline bool validate_triple(const Triple& t, const KnowledgeGraph& kg) {
    if (t.head.label == t.tail.label) return false;
    if (!kg.registry().contains(t.head.label) || !kg.registry().contains(t.tail.label)) return false;
    return kg.has_relation(t.relation.name);
}

// Learned vectors for every entity and relation, all of length `dimension`.
// Entity vectors are renormalized to unit L2 after every training epoch.
struct EmbeddingSpace {
    std::size_t dimension = 0;
    Norm norm = Norm::L1;
    std::vector<EntityId> entities;                  // dense by index
    std::vector<std::vector<double>> entity_vectors; // aligned with entities
    std::vector<RelationLabel> relations;            // ascending band ordinal
    std::vector<std::vector<double>> relation_vectors;

    std::unordered_map<std::string, std::size_t> entity_lookup;
    std::unordered_map<std::string, std::size_t> relation_lookup;

    void rebuild_lookup() {
        entity_lookup.clear();
        relation_lookup.clear();
        for (std::size_t i = 0; i < entities.size(); ++i) entity_lookup[entities[i].label] = i;
        for (std::size_t i = 0; i < relations.size(); ++i) relation_lookup[relations[i].name] = i;
    }

    const std::vector<double>& entity_vec(const std::string& label) const {
        auto it = entity_lookup.find(label);
        if (it == entity_lookup.end()) throw UnknownEntity("no embedding for entity: " + label);
        return entity_vectors[it->second];
    }

    const std::vector<double>& relation_vec(const std::string& name) const {
        auto it = relation_lookup.find(name);
        if (it == relation_lookup.end()) throw UnknownEntity("no embedding for relation: " + name);
        return relation_vectors[it->second];
    }
};

} // namespace gravitykg
