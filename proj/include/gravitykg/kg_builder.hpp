#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gravitykg/clustering.hpp"
#include "gravitykg/core.hpp"
#include "gravitykg/errors.hpp"
#include "gravitykg/rng.hpp"

namespace gravitykg {

// Score-range to relation mapping. labels.size() == thresholds.size() + 1;
// a score equal to a boundary belongs to the upper band.
struct BandMap {
    std::vector<double> thresholds;
    std::vector<RelationLabel> labels;

    void validate() const {
        if (labels.size() != thresholds.size() + 1) throw ConfigError("band map: labels != thresholds+1");
        for (std::size_t i = 1; i < thresholds.size(); ++i)
            if (!(thresholds[i - 1] < thresholds[i])) throw ConfigError("band map: thresholds not ascending");
    }
};

// Thresholds are midpoints between adjacent cluster centers, so the banding
// is reconstructible from the centers alone.
inline BandMap band_map_from_centers(const std::vector<double>& centers) {
    if (centers.empty()) throw ConfigError("band map: no centers");
    BandMap map;
    for (std::size_t i = 0; i + 1 < centers.size(); ++i)
        map.thresholds.push_back((centers[i] + centers[i + 1]) / 2.0);
    for (std::size_t i = 0; i < centers.size(); ++i) map.labels.push_back(make_band_label(i));
    map.validate();
    return map;
}

inline RelationLabel band_of(double score, const BandMap& bands) {
    bands.validate();
    if (std::isnan(score)) throw DomainError("band_of: NaN score");
    const auto it = std::upper_bound(bands.thresholds.begin(), bands.thresholds.end(), score);
    return bands.labels[it - bands.thresholds.begin()];
}

// Reassigns DBSCAN noise points to the nearest cluster center so every score
// carries a band; the raw noise list is preserved for reporting.
inline cluster::ClusteringResult resolve_noise(cluster::ClusteringResult result,
                                               const std::vector<double>& clustered_values) {
    if (result.noise_indices.empty()) return result;
    if (clustered_values.size() != result.assignments.size())
        throw ShapeError("resolve_noise: values/assignments length mismatch");
    for (std::size_t idx : result.noise_indices) {
        result.assignments[idx] = cluster::detail::nearest_center(clustered_values[idx], result.centers);
    }
    return result;
}

// Builds the gravity knowledge base: one pair of directed triples
// <i, band, j> and <j, band, i> per scored country pair. Entities are
// interned in sorted label order for deterministic dense indices.
inline KnowledgeGraph build_kg(const std::vector<GravityScore>& scores,
                               const cluster::ClusteringResult& result) {
    if (scores.empty()) throw EmptyGraph("build_kg: no gravity scores");
    if (result.assignments.size() != scores.size())
        throw ShapeError("build_kg: clustering does not cover the scores");

    std::set<std::string> labels;
    for (const auto& s : scores) {
        labels.insert(s.pair.first.label);
        labels.insert(s.pair.second.label);
    }
    KnowledgeGraph kg;
    for (const auto& label : labels) kg.registry().intern(label);

    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int band = result.assignments[i];
        if (band < 0) throw DomainError("build_kg: unclustered score at index " + std::to_string(i));
        const RelationLabel relation = make_band_label(static_cast<std::size_t>(band));
        kg.register_relation(relation);
        const EntityId a = kg.registry().at(scores[i].pair.first.label);
        const EntityId b = kg.registry().at(scores[i].pair.second.label);
        kg.add_triple(Triple{a, relation, b});
        kg.add_triple(Triple{b, relation, a});
    }
    kg.finalize();
    return kg;
}

struct TripleSplit {
    std::vector<Triple> train;
    std::vector<Triple> test;
    std::size_t moved_to_train = 0; // test pairs forced into train for entity coverage
};

// Uniform random split over unordered pairs; both directions of a pair stay
// on the same side. Test pairs whose entities would be unseen in train are
// moved to train and counted.
inline TripleSplit split_triples(const KnowledgeGraph& kg, double train_frac, std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train_frac must be in (0, 1)");

    // Group triples by unordered pair.
    std::map<std::pair<std::string, std::string>, std::vector<Triple>> groups;
    for (const auto& t : kg.triples()) {
        auto key = t.head.label < t.tail.label ? std::make_pair(t.head.label, t.tail.label)
                                               : std::make_pair(t.tail.label, t.head.label);
        groups[key].push_back(t);
    }
    std::vector<const std::pair<const std::pair<std::string, std::string>, std::vector<Triple>>*> order;
    order.reserve(groups.size());
    for (const auto& g : groups) order.push_back(&g);

    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(order.size())));

    TripleSplit split;
    std::set<std::string> train_entities;
    std::vector<const std::vector<Triple>*> test_groups;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < n_train) {
            for (const auto& t : order[i]->second) split.train.push_back(t);
            train_entities.insert(order[i]->first.first);
            train_entities.insert(order[i]->first.second);
        } else {
            test_groups.push_back(&order[i]->second);
        }
    }
    for (const auto* g : test_groups) {
        const auto& key_a = (*g)[0].head.label;
        const auto& key_b = (*g)[0].tail.label;
        if (!train_entities.count(key_a) || !train_entities.count(key_b)) {
            for (const auto& t : *g) split.train.push_back(t);
            train_entities.insert(key_a);
            train_entities.insert(key_b);
            ++split.moved_to_train;
        } else {
            for (const auto& t : *g) split.test.push_back(t);
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

// One triple per line: head<TAB>relation<TAB>tail, sorted.
inline void write_kg_tsv(const std::string& path, const std::vector<Triple>& triples) {
    std::vector<std::string> lines;
    lines.reserve(triples.size());
    for (const auto& t : triples) lines.push_back(t.head.label + "\t" + t.relation.name + "\t" + t.tail.label);
    std::sort(lines.begin(), lines.end());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    for (const auto& line : lines) out << line << '\n';
}

inline KnowledgeGraph load_kg_tsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<std::array<std::string, 3>> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos) throw RowError(line_no, "expected head<TAB>relation<TAB>tail");
        raw.push_back({line.substr(0, tab1), line.substr(tab1 + 1, tab2 - tab1 - 1), line.substr(tab2 + 1)});
    }

    std::set<std::string> entity_labels;
    std::set<std::string> relation_names;
    for (const auto& [h, r, t] : raw) {
        entity_labels.insert(h);
        entity_labels.insert(t);
        relation_names.insert(r);
    }
    KnowledgeGraph kg;
    for (const auto& label : entity_labels) kg.registry().intern(label);
    std::size_t fallback = 0;
    for (const auto& name : relation_names)
        kg.register_relation(RelationLabel{name, detail::ordinal_from_band_name(name, fallback++)});
    for (const auto& [h, r, t] : raw) {
        RelationLabel relation;
        for (const auto& reg : kg.relations())
            if (reg.name == r) relation = reg;
        kg.add_triple(Triple{kg.registry().at(h), relation, kg.registry().at(t)});
    }
    kg.finalize();
    return kg;
}

} // namespace gravitykg
