#pragma once

// Shared deterministic fixtures for the unit and acceptance suites.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "gravitykg/core.hpp"
#include "gravitykg/rng.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::string tmpl = (fs::temp_directory_path() / ("gravitykg-" + tag + "-XXXXXX")).string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed for " + tmpl);
        path_ = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    fs::path path_;
};

inline std::vector<std::string> clique_labels(char prefix, std::size_t n) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%c%02zu", prefix, i);
        labels.emplace_back(buf);
    }
    return labels;
}

// 12 countries in two cliques of 6. Within-clique pairs carry the high band,
// cross-clique pairs the low band; both directions are emitted.
inline gravitykg::KnowledgeGraph two_clique_kg() {
    using namespace gravitykg;
    const auto a = clique_labels('A', 6);
    const auto b = clique_labels('B', 6);
    KnowledgeGraph kg;
    for (const auto& l : a) kg.registry().intern(l);
    for (const auto& l : b) kg.registry().intern(l);
    const RelationLabel low = make_band_label(0);
    const RelationLabel high = make_band_label(1);
    kg.register_relation(low);
    kg.register_relation(high);
    auto link = [&](const std::string& x, const std::string& y, const RelationLabel& r) {
        kg.add_triple(Triple{kg.registry().at(x), r, kg.registry().at(y)});
        kg.add_triple(Triple{kg.registry().at(y), r, kg.registry().at(x)});
    };
    for (const auto& group : {a, b})
        for (std::size_t i = 0; i < group.size(); ++i)
            for (std::size_t j = i + 1; j < group.size(); ++j) link(group[i], group[j], high);
    for (const auto& x : a)
        for (const auto& y : b) link(x, y, low);
    kg.finalize();
    return kg;
}

// Link-prediction variant: only the within-clique edges exist (single band);
// cross-clique pairs are the absent population negatives are drawn from.
inline gravitykg::KnowledgeGraph two_clique_link_kg() {
    using namespace gravitykg;
    const auto a = clique_labels('A', 6);
    const auto b = clique_labels('B', 6);
    KnowledgeGraph kg;
    for (const auto& l : a) kg.registry().intern(l);
    for (const auto& l : b) kg.registry().intern(l);
    const RelationLabel band = make_band_label(0);
    kg.register_relation(band);
    auto link = [&](const std::string& x, const std::string& y) {
        kg.add_triple(Triple{kg.registry().at(x), band, kg.registry().at(y)});
        kg.add_triple(Triple{kg.registry().at(y), band, kg.registry().at(x)});
    };
    for (const auto& group : {a, b})
        for (std::size_t i = 0; i < group.size(); ++i)
            for (std::size_t j = i + 1; j < group.size(); ++j) link(group[i], group[j]);
    kg.finalize();
    return kg;
}

// Records backing the link KG: identical GDP everywhere and identical
// within-clique distances, so the basic node features carry almost nothing.
inline std::vector<gravitykg::TradeRecord> two_clique_records(const gravitykg::KnowledgeGraph& kg) {
    using namespace gravitykg;
    std::vector<TradeRecord> records;
    for (const auto& t : kg.triples()) {
        if (t.head.label > t.tail.label) continue;
        TradeRecord r;
        r.year = 2019;
        r.month = 1;
        r.reporter = t.head;
        r.partner = t.tail;
        r.commodity = "010121";
        r.trade_value = 100.0;
        r.gdp_reporter = 1000.0;
        r.gdp_partner = 1000.0;
        r.harmonic_distance = 500.0;
        records.push_back(std::move(r));
    }
    return records;
}

// Random unit-free embedding space for projection tests.
inline gravitykg::EmbeddingSpace random_space(std::size_t n_entities, std::size_t dim,
                                              gravitykg::Rng& rng) {
    using namespace gravitykg;
    EmbeddingSpace space;
    space.dimension = dim;
    space.norm = Norm::L2;
    for (std::size_t i = 0; i < n_entities; ++i) {
        space.entities.push_back(EntityId{"E" + std::to_string(i), i});
        std::vector<double> v(dim);
        for (auto& x : v) x = rng.uniform(-2.0, 2.0);
        space.entity_vectors.push_back(std::move(v));
    }
    space.rebuild_lookup();
    return space;
}

} // namespace fixtures
