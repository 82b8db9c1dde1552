#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "gravitykg/core.hpp"
#include "gravitykg/errors.hpp"
#include "gravitykg/evaluation.hpp"
#include "gravitykg/rng.hpp"

namespace gravitykg::gnn {

struct GnnConfig {
    std::size_t hidden_dim = 16;
    std::size_t epochs = 300;
    double learning_rate = 0.05;
    double negative_ratio = 1.0;
    double threshold = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (hidden_dim < 1) throw ConfigError("gnn: hidden_dim must be >= 1");
        if (learning_rate <= 0.0) throw ConfigError("gnn: learning_rate must be > 0");
        if (negative_ratio <= 0.0) throw ConfigError("gnn: negative_ratio must be > 0");
    }
};

enum class FeatureSet { Basic, Embedding };

// Undirected edge instances over the country graph. `adjacency` is the
// aggregation graph: always built from training positives so test edges
// never leak into the neighbor means.
struct EdgeDataset {
    std::vector<EntityId> nodes;
    std::vector<std::vector<double>> node_features;
    std::vector<std::pair<std::size_t, std::size_t>> positive_edges; // i < j, node indices
    std::vector<std::pair<std::size_t, std::size_t>> negative_edges;
    std::vector<std::vector<std::size_t>> adjacency;
};

// Positives are the country pairs present in the KG; negatives are sampled
// uniformly (seed-deterministic) from the absent pairs. Basic node features:
// log mean GDP, log mean distance to observed partners, degree. Embedding
// node features: the trained entity vector.
inline EdgeDataset make_edge_dataset(const KnowledgeGraph& kg, FeatureSet features,
                                     const EmbeddingSpace* embeddings,
                                     const std::vector<TradeRecord>& records, double negative_ratio,
                                     std::uint64_t seed) {
    if (features == FeatureSet::Embedding && embeddings == nullptr)
        throw ConfigError("make_edge_dataset: embedding features need a trained space");

    EdgeDataset ds;
    ds.nodes = kg.entities();
    const std::size_t n = ds.nodes.size();
    if (n < 2) throw EmptyData("make_edge_dataset: need at least 2 nodes");

    std::set<std::pair<std::size_t, std::size_t>> positive_set;
    for (const auto& t : kg.triples()) {
        const std::size_t a = std::min(t.head.index, t.tail.index);
        const std::size_t b = std::max(t.head.index, t.tail.index);
        positive_set.insert({a, b});
    }
    ds.positive_edges.assign(positive_set.begin(), positive_set.end());

    std::vector<std::pair<std::size_t, std::size_t>> absent;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (!positive_set.count({i, j})) absent.push_back({i, j});

    const auto n_neg = static_cast<std::size_t>(
        std::llround(negative_ratio * static_cast<double>(ds.positive_edges.size())));
    if (absent.size() < n_neg)
        throw InsufficientNegatives("graph too dense: " + std::to_string(absent.size()) +
                                    " absent pairs for " + std::to_string(n_neg) + " negatives");
    Rng rng(seed);
    for (std::size_t i = absent.size(); i > 1; --i) std::swap(absent[i - 1], absent[rng.uniform_index(i)]);
    absent.resize(n_neg);
    std::sort(absent.begin(), absent.end());
    ds.negative_edges = std::move(absent);

    ds.adjacency.resize(n);
    for (const auto& [a, b] : ds.positive_edges) {
        ds.adjacency[a].push_back(b);
        ds.adjacency[b].push_back(a);
    }
    for (auto& nbrs : ds.adjacency) std::sort(nbrs.begin(), nbrs.end());

    ds.node_features.resize(n);
    if (features == FeatureSet::Embedding) {
        for (std::size_t i = 0; i < n; ++i) ds.node_features[i] = embeddings->entity_vec(ds.nodes[i].label);
    } else {
        struct Acc {
            double sum = 0.0;
            std::size_t count = 0;
        };
        std::map<std::string, Acc> gdp, dist;
        for (const auto& r : records) {
            gdp[r.reporter.label].sum += r.gdp_reporter;
            ++gdp[r.reporter.label].count;
            gdp[r.partner.label].sum += r.gdp_partner;
            ++gdp[r.partner.label].count;
            dist[r.reporter.label].sum += r.harmonic_distance;
            ++dist[r.reporter.label].count;
            dist[r.partner.label].sum += r.harmonic_distance;
            ++dist[r.partner.label].count;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto g = gdp.find(ds.nodes[i].label);
            const auto d = dist.find(ds.nodes[i].label);
            if (g == gdp.end() || d == dist.end())
                throw UnknownEntity("no covariates for country: " + ds.nodes[i].label);
            ds.node_features[i] = {std::log(g->second.sum / static_cast<double>(g->second.count)),
                                   std::log(d->second.sum / static_cast<double>(d->second.count)),
                                   static_cast<double>(ds.adjacency[i].size())};
        }
    }
    return ds;
}

// Splits positive and negative edges train/test; both sides keep the
// aggregation adjacency rebuilt from the TRAIN positives only.
inline std::pair<EdgeDataset, EdgeDataset> split_edge_dataset(const EdgeDataset& full, double train_frac,
                                                              std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train_frac must be in (0, 1)");
    Rng rng(seed);
    auto shuffled = [&](std::vector<std::pair<std::size_t, std::size_t>> edges) {
        for (std::size_t i = edges.size(); i > 1; --i) std::swap(edges[i - 1], edges[rng.uniform_index(i)]);
        return edges;
    };
    const auto pos = shuffled(full.positive_edges);
    const auto neg = shuffled(full.negative_edges);
    const auto n_pos_train = static_cast<std::size_t>(std::llround(train_frac * pos.size()));
    const auto n_neg_train = static_cast<std::size_t>(std::llround(train_frac * neg.size()));

    EdgeDataset train = full, test = full;
    train.positive_edges.assign(pos.begin(), pos.begin() + n_pos_train);
    train.negative_edges.assign(neg.begin(), neg.begin() + n_neg_train);
    test.positive_edges.assign(pos.begin() + n_pos_train, pos.end());
    test.negative_edges.assign(neg.begin() + n_neg_train, neg.end());
    std::sort(train.positive_edges.begin(), train.positive_edges.end());
    std::sort(train.negative_edges.begin(), train.negative_edges.end());
    std::sort(test.positive_edges.begin(), test.positive_edges.end());
    std::sort(test.negative_edges.begin(), test.negative_edges.end());

    std::vector<std::vector<std::size_t>> adjacency(full.nodes.size());
    for (const auto& [a, b] : train.positive_edges) {
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    }
    for (auto& nbrs : adjacency) std::sort(nbrs.begin(), nbrs.end());
    train.adjacency = adjacency;
    test.adjacency = std::move(adjacency);
    return {std::move(train), std::move(test)};
}

// One mean-aggregation convolution plus a Hadamard edge scorer:
//   h_v = relu(W_self x_v + W_nbr mean(x_u) + b),  s_ij = sigmoid(w . (h_i h_j) + c)
struct GnnParams {
    std::vector<std::vector<double>> w_self; // hidden x feature
    std::vector<std::vector<double>> w_nbr;
    std::vector<double> bias;   // hidden
    std::vector<double> w_edge; // hidden
    double c_edge = 0.0;
};

inline GnnParams zero_params(std::size_t feature_dim, std::size_t hidden_dim) {
    GnnParams p;
    p.w_self.assign(hidden_dim, std::vector<double>(feature_dim, 0.0));
    p.w_nbr.assign(hidden_dim, std::vector<double>(feature_dim, 0.0));
    p.bias.assign(hidden_dim, 0.0);
    p.w_edge.assign(hidden_dim, 0.0);
    p.c_edge = 0.0;
    return p;
}

inline GnnParams init_params(std::size_t feature_dim, std::size_t hidden_dim, Rng& rng) {
    GnnParams p = zero_params(feature_dim, hidden_dim);
    const double r_conv = std::sqrt(6.0 / static_cast<double>(feature_dim + hidden_dim));
    for (auto& row : p.w_self)
        for (auto& v : row) v = rng.uniform(-r_conv, r_conv);
    for (auto& row : p.w_nbr)
        for (auto& v : row) v = rng.uniform(-r_conv, r_conv);
    const double r_edge = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
    for (auto& v : p.w_edge) v = rng.uniform(-r_edge, r_edge);
    return p;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

struct ForwardState {
    std::vector<std::vector<double>> nbr_mean;   // node x feature
    std::vector<std::vector<double>> pre_act;    // node x hidden
    std::vector<std::vector<double>> hidden;     // node x hidden
    std::vector<double> scores;                  // positives then negatives
};

inline ForwardState forward_full(const EdgeDataset& ds, const GnnParams& p) {
    const std::size_t n = ds.nodes.size();
    const std::size_t fdim = ds.node_features.empty() ? 0 : ds.node_features[0].size();
    const std::size_t hdim = p.bias.size();
    for (const auto& row : p.w_self)
        if (row.size() != fdim) throw ShapeError("gnn forward: W_self width mismatch");

    ForwardState st;
    st.nbr_mean.assign(n, std::vector<double>(fdim, 0.0));
    for (std::size_t v = 0; v < n; ++v) {
        const auto& nbrs = ds.adjacency[v];
        if (nbrs.empty()) continue; // isolated node keeps a zero neighbor term
        for (std::size_t u : nbrs)
            for (std::size_t f = 0; f < fdim; ++f) st.nbr_mean[v][f] += ds.node_features[u][f];
        for (std::size_t f = 0; f < fdim; ++f) st.nbr_mean[v][f] /= static_cast<double>(nbrs.size());
    }
    st.pre_act.assign(n, std::vector<double>(hdim, 0.0));
    st.hidden.assign(n, std::vector<double>(hdim, 0.0));
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t h = 0; h < hdim; ++h) {
            double a = p.bias[h];
            for (std::size_t f = 0; f < fdim; ++f)
                a += p.w_self[h][f] * ds.node_features[v][f] + p.w_nbr[h][f] * st.nbr_mean[v][f];
            st.pre_act[v][h] = a;
            st.hidden[v][h] = a > 0.0 ? a : 0.0;
        }
    }
    auto score_edge = [&](std::size_t i, std::size_t j) {
        double z = p.c_edge;
        for (std::size_t h = 0; h < hdim; ++h) z += p.w_edge[h] * st.hidden[i][h] * st.hidden[j][h];
        return sigmoid(z);
    };
    st.scores.reserve(ds.positive_edges.size() + ds.negative_edges.size());
    for (const auto& [i, j] : ds.positive_edges) st.scores.push_back(score_edge(i, j));
    for (const auto& [i, j] : ds.negative_edges) st.scores.push_back(score_edge(i, j));
    return st;
}

} // namespace detail

// Edge scores in (0, 1): positives first, then negatives.
inline std::vector<double> forward(const EdgeDataset& ds, const GnnParams& params) {
    return detail::forward_full(ds, params).scores;
}

inline std::vector<int> labels_of(const EdgeDataset& ds) {
    std::vector<int> y(ds.positive_edges.size() + ds.negative_edges.size(), 0);
    std::fill(y.begin(), y.begin() + ds.positive_edges.size(), 1);
    return y;
}

inline double mse(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ShapeError("mse: length mismatch");
    if (scores.empty()) throw EmptyData("mse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double d = scores[i] - static_cast<double>(labels[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(scores.size());
}

// Analytic gradient of the full-batch MSE; returns the loss.
inline double backward(const EdgeDataset& ds, const GnnParams& p, GnnParams& grad) {
    const auto st = detail::forward_full(ds, p);
    const std::size_t n = ds.nodes.size();
    const std::size_t fdim = ds.node_features.empty() ? 0 : ds.node_features[0].size();
    const std::size_t hdim = p.bias.size();
    const std::size_t m = st.scores.size();
    if (m == 0) throw EmptyData("gnn backward: no edges");

    grad = zero_params(fdim, hdim);
    std::vector<std::vector<double>> grad_hidden(n, std::vector<double>(hdim, 0.0));

    std::vector<std::pair<std::size_t, std::size_t>> edges = ds.positive_edges;
    edges.insert(edges.end(), ds.negative_edges.begin(), ds.negative_edges.end());
    double loss = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
        const double y = e < ds.positive_edges.size() ? 1.0 : 0.0;
        const double s = st.scores[e];
        loss += (s - y) * (s - y);
        const double gz = 2.0 * (s - y) / static_cast<double>(m) * s * (1.0 - s);
        const auto [i, j] = edges[e];
        grad.c_edge += gz;
        for (std::size_t h = 0; h < hdim; ++h) {
            grad.w_edge[h] += gz * st.hidden[i][h] * st.hidden[j][h];
            grad_hidden[i][h] += gz * p.w_edge[h] * st.hidden[j][h];
            grad_hidden[j][h] += gz * p.w_edge[h] * st.hidden[i][h];
        }
    }
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t h = 0; h < hdim; ++h) {
            if (st.pre_act[v][h] <= 0.0) continue; // relu gate
            const double ga = grad_hidden[v][h];
            if (ga == 0.0) continue;
            grad.bias[h] += ga;
            for (std::size_t f = 0; f < fdim; ++f) {
                grad.w_self[h][f] += ga * ds.node_features[v][f];
                grad.w_nbr[h][f] += ga * st.nbr_mean[v][f];
            }
        }
    }
    return loss / static_cast<double>(m);
}

struct GnnTrainResult {
    GnnParams params;
    std::vector<double> trace; // post-update MSE per epoch
    double initial_mse = 0.0;
    double final_mse = 0.0;
};

// Full-batch gradient descent on the MSE between edge scores and {0,1}
// labels. Deterministic given the seed.
inline GnnTrainResult train_gnn(const EdgeDataset& ds, const GnnConfig& config) {
    config.validate();
    if (ds.positive_edges.empty() || ds.negative_edges.empty())
        throw EmptyData("train_gnn: need positive and negative edges");
    const std::size_t fdim = ds.node_features.empty() ? 0 : ds.node_features[0].size();

    Rng rng(config.seed);
    GnnTrainResult result;
    result.params = init_params(fdim, config.hidden_dim, rng);
    const auto labels = labels_of(ds);
    result.initial_mse = mse(forward(ds, result.params), labels);
    result.final_mse = result.initial_mse;

    GnnParams grad;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        backward(ds, result.params, grad);
        for (std::size_t h = 0; h < config.hidden_dim; ++h) {
            for (std::size_t f = 0; f < fdim; ++f) {
                result.params.w_self[h][f] -= config.learning_rate * grad.w_self[h][f];
                result.params.w_nbr[h][f] -= config.learning_rate * grad.w_nbr[h][f];
            }
            result.params.bias[h] -= config.learning_rate * grad.bias[h];
            result.params.w_edge[h] -= config.learning_rate * grad.w_edge[h];
        }
        result.params.c_edge -= config.learning_rate * grad.c_edge;
        result.final_mse = mse(forward(ds, result.params), labels);
        result.trace.push_back(result.final_mse);
    }
    return result;
}

inline ConfusionMatrix evaluate_gnn(const GnnParams& params, const EdgeDataset& held_out,
                                    double threshold) {
    return confusion(labels_of(held_out), forward(held_out, params), threshold);
}

} // namespace gravitykg::gnn
