#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "gravitykg/core.hpp"
#include "gravitykg/rng.hpp"

using namespace gravitykg;

TEST_CASE("intern_entity is idempotent and dense") {
    EntityRegistry registry;
    const EntityId deu1 = intern_entity("DEU", registry);
    const EntityId deu2 = intern_entity("DEU", registry);
    CHECK(deu1.index == deu2.index);
    CHECK(deu1.label == "DEU");

    const EntityId fra = intern_entity("FRA", registry);
    CHECK(deu1.index == 0);
    CHECK(fra.index == 1);

    CHECK_THROWS_AS(intern_entity("", registry), InvalidLabel);
}

TEST_CASE("entity interning is a bijection over random label sequences") {
    Rng rng(42);
    for (int round = 0; round < 20; ++round) {
        EntityRegistry registry;
        std::vector<std::string> labels;
        for (int i = 0; i < 50; ++i) labels.push_back("C" + std::to_string(rng.uniform_index(15)));

        std::map<std::string, std::size_t> first_index;
        for (const auto& label : labels) {
            const EntityId id = registry.intern(label);
            auto [it, inserted] = first_index.emplace(label, id.index);
            if (!inserted) CHECK(it->second == id.index); // repeats are stable
        }
        std::set<std::size_t> indices;
        for (const auto& [label, index] : first_index) indices.insert(index);
        CHECK(indices.size() == first_index.size()); // distinct labels, distinct indices
        CHECK(registry.size() == first_index.size());
    }
}

TEST_CASE("validate_triple") {
    KnowledgeGraph kg;
    const EntityId deu = kg.registry().intern("DEU");
    const EntityId fra = kg.registry().intern("FRA");
    const RelationLabel band = make_band_label(0);
    kg.register_relation(band);

    CHECK(validate_triple(Triple{deu, band, fra}, kg));
    CHECK_FALSE(validate_triple(Triple{deu, band, deu}, kg)); // self-loop
    CHECK_FALSE(validate_triple(Triple{deu, make_band_label(7), fra}, kg));
    CHECK_FALSE(validate_triple(Triple{deu, band, EntityId{"USA", 9}}, kg));
}

TEST_CASE("knowledge graph deduplicates triples") {
    KnowledgeGraph kg;
    const EntityId a = kg.registry().intern("DEU");
    const EntityId b = kg.registry().intern("FRA");
    const RelationLabel band = make_band_label(0);
    kg.register_relation(band);

    CHECK(kg.add_triple(Triple{a, band, b}));
    CHECK_FALSE(kg.add_triple(Triple{a, band, b}));
    CHECK(kg.triple_count() == 1);
    kg.finalize();
    CHECK(kg.triples().size() == 1);
}
