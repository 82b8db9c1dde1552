#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gravitykg/core.hpp"
#include "gravitykg/csv.hpp"
#include "gravitykg/errors.hpp"
#include "gravitykg/rng.hpp"

namespace gravitykg::transe {

struct TranseConfig {
    std::size_t dimension = 10;
    double margin = 1.0;
    double learning_rate = 0.01;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    Norm norm = Norm::L1;
    std::uint64_t seed = 0;

    void validate() const {
        if (dimension < 1) throw ConfigError("transe: dimension must be >= 1");
        if (margin <= 0.0) throw ConfigError("transe: margin must be > 0");
        if (learning_rate <= 0.0) throw ConfigError("transe: learning_rate must be > 0");
        if (batch_size < 1) throw ConfigError("transe: batch_size must be >= 1");
    }
};

struct TrainTrace {
    struct EpochStats {
        std::size_t epoch = 0;      // 1-based
        double mean_loss = 0.0;     // mean hinge loss over the epoch's positives
        std::size_t active_terms = 0;
    };
    std::vector<EpochStats> epochs;
};

// Energy of a triple: ||h + l - t|| under the chosen norm.
inline double distance(const std::vector<double>& h, const std::vector<double>& l,
                       const std::vector<double>& t, Norm norm) {
    if (h.size() != l.size() || h.size() != t.size())
        throw ShapeError("transe distance: vector length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double d = h[i] + l[i] - t[i];
        acc += norm == Norm::L1 ? std::abs(d) : d * d;
    }
    return norm == Norm::L1 ? acc : std::sqrt(acc);
}

// Replaces the head (probability 1/2) or the tail with a uniformly random
// entity distinct from the original; the relation is untouched.
inline Triple corrupt(const Triple& triple, const KnowledgeGraph& kg, Rng& rng) {
    const auto& entities = kg.entities();
    if (entities.size() < 2) throw DomainError("corrupt: need at least 2 entities");
    Triple corrupted = triple;
    const bool replace_head = rng.coin();
    const std::size_t original = replace_head ? triple.head.index : triple.tail.index;
    std::size_t pick = rng.uniform_index(entities.size() - 1);
    if (pick >= original) ++pick;
    if (replace_head) {
        corrupted.head = entities[pick];
    } else {
        corrupted.tail = entities[pick];
    }
    return corrupted;
}

inline double margin_loss(const Triple& pos, const Triple& neg, const EmbeddingSpace& space, double gamma) {
    const double d_pos =
        distance(space.entity_vec(pos.head.label), space.relation_vec(pos.relation.name),
                 space.entity_vec(pos.tail.label), space.norm);
    const double d_neg =
        distance(space.entity_vec(neg.head.label), space.relation_vec(neg.relation.name),
                 space.entity_vec(neg.tail.label), space.norm);
    return std::max(0.0, gamma + d_pos - d_neg);
}

// One gradient contribution of the hinge term, keyed into the space's dense
// entity/relation storage.
struct GradEntry {
    bool is_entity = true;
    std::size_t index = 0;
    std::vector<double> grad;
};

namespace detail {

// d ||v||' contributions: sign(v) for L1, v/||v|| for L2 (zero at the origin).
inline std::vector<double> norm_gradient(const std::vector<double>& h, const std::vector<double>& l,
                                         const std::vector<double>& t, Norm norm) {
    std::vector<double> g(h.size(), 0.0);
    if (norm == Norm::L1) {
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double d = h[i] + l[i] - t[i];
            g[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        }
    } else {
        double nrm = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double d = h[i] + l[i] - t[i];
            g[i] = d;
            nrm += d * d;
        }
        nrm = std::sqrt(nrm);
        if (nrm > 0.0)
            for (auto& v : g) v /= nrm;
        else
            std::fill(g.begin(), g.end(), 0.0);
    }
    return g;
}

inline void accumulate(std::vector<GradEntry>& entries, bool is_entity, std::size_t index,
                       const std::vector<double>& grad, double scale) {
    for (auto& e : entries) {
        if (e.is_entity == is_entity && e.index == index) {
            for (std::size_t i = 0; i < grad.size(); ++i) e.grad[i] += scale * grad[i];
            return;
        }
    }
    GradEntry entry{is_entity, index, std::vector<double>(grad.size(), 0.0)};
    for (std::size_t i = 0; i < grad.size(); ++i) entry.grad[i] = scale * grad[i];
    entries.push_back(std::move(entry));
}

} // namespace detail

// Subgradient of margin_loss w.r.t. every embedding it touches. Entries for
// shared ids (the relation always, head or tail when the other slot was
// corrupted) are accumulated. Returns the loss value; entries are empty when
// the margin is inactive. This is the exact routine the trainer steps on, so
// the finite-difference check covers the production gradient path.
inline double margin_loss_grad(const Triple& pos, const Triple& neg, const EmbeddingSpace& space,
                               double gamma, std::vector<GradEntry>& entries) {
    entries.clear();
    const auto& h = space.entity_vec(pos.head.label);
    const auto& l = space.relation_vec(pos.relation.name);
    const auto& t = space.entity_vec(pos.tail.label);
    const auto& h2 = space.entity_vec(neg.head.label);
    const auto& l2 = space.relation_vec(neg.relation.name);
    const auto& t2 = space.entity_vec(neg.tail.label);

    const double loss = gamma + distance(h, l, t, space.norm) - distance(h2, l2, t2, space.norm);
    if (loss <= 0.0) return 0.0;

    const auto g_pos = detail::norm_gradient(h, l, t, space.norm);
    const auto g_neg = detail::norm_gradient(h2, l2, t2, space.norm);

    const std::size_t hi = space.entity_lookup.at(pos.head.label);
    const std::size_t ti = space.entity_lookup.at(pos.tail.label);
    const std::size_t ri = space.relation_lookup.at(pos.relation.name);
    const std::size_t hi2 = space.entity_lookup.at(neg.head.label);
    const std::size_t ti2 = space.entity_lookup.at(neg.tail.label);
    const std::size_t ri2 = space.relation_lookup.at(neg.relation.name);

    detail::accumulate(entries, true, hi, g_pos, +1.0);
    detail::accumulate(entries, false, ri, g_pos, +1.0);
    detail::accumulate(entries, true, ti, g_pos, -1.0);
    detail::accumulate(entries, true, hi2, g_neg, -1.0);
    detail::accumulate(entries, false, ri2, g_neg, -1.0);
    detail::accumulate(entries, true, ti2, g_neg, +1.0);
    return loss;
}

// Initial space: every vector uniform in [-6/sqrt(N), 6/sqrt(N)].
inline EmbeddingSpace init_space(const KnowledgeGraph& kg, const TranseConfig& config, Rng& rng) {
    EmbeddingSpace space;
    space.dimension = config.dimension;
    space.norm = config.norm;
    space.entities = kg.entities();
    space.relations = kg.relations();
    const double bound = 6.0 / std::sqrt(static_cast<double>(config.dimension));
    space.entity_vectors.resize(space.entities.size());
    for (auto& v : space.entity_vectors) {
        v.resize(config.dimension);
        for (auto& x : v) x = rng.uniform(-bound, bound);
    }
    space.relation_vectors.resize(space.relations.size());
    for (auto& v : space.relation_vectors) {
        v.resize(config.dimension);
        for (auto& x : v) x = rng.uniform(-bound, bound);
    }
    space.rebuild_lookup();
    return space;
}

inline void renormalize_entities(EmbeddingSpace& space) {
    for (auto& v : space.entity_vectors) {
        double nrm = 0.0;
        for (double x : v) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm > 0.0)
            for (auto& x : v) x /= nrm;
    }
}

struct TrainResult {
    EmbeddingSpace space;
    TrainTrace trace;
};

// Minibatch SGD on the margin-ranking loss with one sampled corruption per
// positive. Entity vectors are renormalized to unit L2 after every epoch;
// relation vectors stay free. Bit-for-bit deterministic given (kg, config).
inline TrainResult train(const KnowledgeGraph& train_kg, const TranseConfig& config) {
    config.validate();
    if (train_kg.triples().empty()) throw EmptyData("transe train: empty train set");

    Rng rng(config.seed);
    TrainResult result;
    result.space = init_space(train_kg, config, rng);
    EmbeddingSpace& space = result.space;

    const auto& triples = train_kg.triples();
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<GradEntry> entries;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
        double loss_sum = 0.0;
        std::size_t active = 0;

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            std::vector<GradEntry> batch_grad;
            for (std::size_t b = start; b < stop; ++b) {
                const Triple& pos = triples[order[b]];
                const Triple neg = corrupt(pos, train_kg, rng);
                const double loss = margin_loss_grad(pos, neg, space, config.margin, entries);
                loss_sum += loss;
                if (loss > 0.0) {
                    ++active;
                    for (const auto& e : entries)
                        detail::accumulate(batch_grad, e.is_entity, e.index, e.grad, 1.0);
                }
            }
            for (const auto& e : batch_grad) {
                auto& vec = e.is_entity ? space.entity_vectors[e.index] : space.relation_vectors[e.index];
                for (std::size_t i = 0; i < vec.size(); ++i) vec[i] -= config.learning_rate * e.grad[i];
            }
        }
        renormalize_entities(space);
        result.trace.epochs.push_back(
            {epoch, loss_sum / static_cast<double>(order.size()), active});
    }
    return result;
}

// Plausibility score: negated energy, so 0 is the maximum.
inline double score_triple(const Triple& t, const EmbeddingSpace& space) {
    return -distance(space.entity_vec(t.head.label), space.relation_vec(t.relation.name),
                     space.entity_vec(t.tail.label), space.norm);
}

using TripleKey = std::tuple<std::string, std::string, std::string>;

inline TripleKey key_of(const Triple& t) { return {t.head.label, t.relation.name, t.tail.label}; }

// All candidate tails for (head, relation) by descending score. The head
// itself is excluded (self-trade is banned in this KG), and so is any entity
// forming a known true triple in `filter` — the filtered ranking protocol.
inline std::vector<EntityId> rank_tails(const EntityId& head, const RelationLabel& relation,
                                        const EmbeddingSpace& space, const std::set<TripleKey>& filter = {}) {
    const auto& h = space.entity_vec(head.label);
    const auto& l = space.relation_vec(relation.name);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(space.entities.size());
    for (std::size_t i = 0; i < space.entities.size(); ++i) {
        const EntityId& candidate = space.entities[i];
        if (candidate.label == head.label) continue;
        if (filter.count({head.label, relation.name, candidate.label})) continue;
        scored.emplace_back(-distance(h, l, space.entity_vectors[i], space.norm), i);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<EntityId> ranked;
    ranked.reserve(scored.size());
    for (const auto& [score, idx] : scored) ranked.push_back(space.entities[idx]);
    return ranked;
}

// Filtered Hits@1 over tail-prediction queries: for each query triple the
// other known-true tails are filtered out before ranking.
inline double filtered_hits_at_1(const std::vector<Triple>& queries, const std::vector<Triple>& known_true,
                                 const EmbeddingSpace& space) {
    if (queries.empty()) throw EmptyData("filtered_hits_at_1: no queries");
    std::set<TripleKey> all_true;
    for (const auto& t : known_true) all_true.insert(key_of(t));
    std::size_t hits = 0;
    for (const auto& q : queries) {
        std::set<TripleKey> filter = all_true;
        filter.erase(key_of(q));
        const auto ranked = rank_tails(q.head, q.relation, space, filter);
        if (!ranked.empty() && ranked.front().label == q.tail.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(queries.size());
}

inline void save_embeddings_csv(const std::string& path, const EmbeddingSpace& space) {
    csv::Writer w(path);
    std::vector<std::string> header = {"entity_or_relation", "kind"};
    for (std::size_t i = 0; i < space.dimension; ++i) header.push_back("v" + std::to_string(i));
    w.write_row(header);
    for (std::size_t i = 0; i < space.entities.size(); ++i) {
        std::vector<std::string> row = {space.entities[i].label, "entity"};
        for (double x : space.entity_vectors[i]) row.push_back(csv::format_double(x));
        w.write_row(row);
    }
    for (std::size_t i = 0; i < space.relations.size(); ++i) {
        std::vector<std::string> row = {space.relations[i].name, "relation"};
        for (double x : space.relation_vectors[i]) row.push_back(csv::format_double(x));
        w.write_row(row);
    }
}

inline EmbeddingSpace load_embeddings_csv(const std::string& path, Norm norm = Norm::L1) {
    csv::Reader reader(path);
    csv::Row row;
    if (!reader.next(row)) throw SchemaError("empty file, missing header: " + path);
    if (row.fields.size() < 3 || row.fields[0] != "entity_or_relation" || row.fields[1] != "kind")
        throw SchemaError("unexpected embeddings header in " + path);
    EmbeddingSpace space;
    space.norm = norm;
    space.dimension = row.fields.size() - 2;
    std::size_t entity_index = 0;
    while (reader.next(row)) {
        if (row.fields.size() == 1 && row.fields[0].empty()) continue;
        if (row.fields.size() != space.dimension + 2) throw RowError(row.line, "bad embedding row width");
        std::vector<double> vec(space.dimension);
        for (std::size_t i = 0; i < space.dimension; ++i)
            vec[i] = csv::parse_double(row.fields[i + 2], row.line, "v" + std::to_string(i));
        if (row.fields[1] == "entity") {
            space.entities.push_back(EntityId{row.fields[0], entity_index++});
            space.entity_vectors.push_back(std::move(vec));
        } else if (row.fields[1] == "relation") {
            space.relations.push_back(RelationLabel{
                row.fields[0], gravitykg::detail::ordinal_from_band_name(row.fields[0], space.relations.size())});
            space.relation_vectors.push_back(std::move(vec));
        } else {
            throw RowError(row.line, "unknown kind: " + row.fields[1]);
        }
    }
    space.rebuild_lookup();
    return space;
}

inline void save_trace_csv(const std::string& path, const TrainTrace& trace) {
    csv::Writer w(path);
    w.write_row({"epoch", "mean_loss", "active_terms"});
    for (const auto& e : trace.epochs)
        w.write_row({std::to_string(e.epoch), csv::format_double(e.mean_loss), std::to_string(e.active_terms)});
}

} // namespace gravitykg::transe
