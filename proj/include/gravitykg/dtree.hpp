#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "gravitykg/core.hpp"
#include "gravitykg/errors.hpp"
#include "gravitykg/ingestion.hpp"

namespace gravitykg::dtree {

enum class FeatureKind { Numeric, Categorical };

struct Column {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
};

// Row-major design matrix. Categorical cells hold non-negative category
// codes; category_names[col][code] maps a code back to its string.
struct FeatureMatrix {
    std::vector<Column> columns;
    std::vector<std::vector<double>> rows;
    std::vector<double> target;
    std::vector<std::vector<std::string>> category_names; // empty for numeric columns
};

struct DTreeConfig {
    std::size_t max_depth = 50;
    std::size_t min_leaf = 1;
    double min_gain = 0.0;

    void validate() const {
        if (min_leaf < 1) throw ConfigError("dtree: min_leaf must be >= 1");
        if (min_gain < 0.0) throw ConfigError("dtree: min_gain must be >= 0");
    }
};

// Split node or leaf. Numeric splits send value <= threshold left; the value
// exactly at the threshold goes left. Categorical splits send codes in
// left_categories left, unseen codes right. gain is the weighted SSE
// reduction achieved by the split.
struct TreeNode {
    bool is_leaf = true;
    double prediction = 0.0;
    std::size_t count = 0;

    std::size_t feature = 0;
    bool categorical = false;
    double threshold = 0.0;
    std::vector<std::uint8_t> left_categories; // bitmap over category codes
    double gain = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;
};

// Pluggable source of entity vectors; the pipeline trains one space per year.
class EmbeddingLookup {
public:
    virtual ~EmbeddingLookup() = default;
    virtual std::size_t dimension() const = 0;
    virtual const std::vector<double>& vec(int year, const std::string& label) const = 0;
};

class SingleSpaceLookup : public EmbeddingLookup {
public:
    explicit SingleSpaceLookup(const EmbeddingSpace& space) : space_(space) {}
    std::size_t dimension() const override { return space_.dimension; }
    const std::vector<double>& vec(int, const std::string& label) const override {
        return space_.entity_vec(label);
    }

private:
    const EmbeddingSpace& space_;
};

class YearlySpaceLookup : public EmbeddingLookup {
public:
    explicit YearlySpaceLookup(const std::map<int, EmbeddingSpace>& by_year) : by_year_(by_year) {
        if (by_year_.empty()) throw ConfigError("YearlySpaceLookup: no spaces");
    }
    std::size_t dimension() const override { return by_year_.begin()->second.dimension; }
    const std::vector<double>& vec(int year, const std::string& label) const override {
        auto it = by_year_.find(year);
        if (it == by_year_.end())
            throw UnknownEntity("no embedding space for year " + std::to_string(year));
        return it->second.entity_vec(label);
    }

private:
    const std::map<int, EmbeddingSpace>& by_year_;
};

// Basic mode: reporter/partner/commodity codes plus the raw covariates.
// Embedding mode: commodity code plus both countries' embedding vectors.
// Log mode transforms GDP/distance covariates and the trade-value target.
inline FeatureMatrix build_features(const std::vector<TradeRecord>& records,
                                    const EmbeddingLookup* embeddings, bool log_transform) {
    if (records.empty()) throw EmptyData("build_features: no records");

    std::vector<TradeRecord> working = records;
    if (log_transform) {
        working = ingest::apply_log(std::move(working), {ingest::LogField::TradeValue,
                                                         ingest::LogField::Gdp, ingest::LogField::Distance});
    }

    // Dense commodity codes in sorted order so fits are reproducible.
    std::map<std::string, std::size_t> commodity_code;
    for (const auto& r : working) commodity_code.emplace(r.commodity, 0);
    {
        std::size_t next = 0;
        for (auto& [name, code] : commodity_code) code = next++;
    }
    std::vector<std::string> commodity_names(commodity_code.size());
    for (const auto& [name, code] : commodity_code) commodity_names[code] = name;

    FeatureMatrix fm;
    fm.target.reserve(working.size());

    if (embeddings == nullptr) {
        fm.columns = {{"reporter_code", FeatureKind::Categorical},
                      {"partner_code", FeatureKind::Categorical},
                      {"year", FeatureKind::Numeric},
                      {"month", FeatureKind::Numeric},
                      {"commodity_code", FeatureKind::Categorical},
                      {"harmonic_distance", FeatureKind::Numeric},
                      {"gdp_reporter", FeatureKind::Numeric},
                      {"gdp_partner", FeatureKind::Numeric}};
        std::size_t max_index = 0;
        for (const auto& r : working)
            max_index = std::max({max_index, r.reporter.index, r.partner.index});
        std::vector<std::string> country_names(max_index + 1);
        for (const auto& r : working) {
            country_names[r.reporter.index] = r.reporter.label;
            country_names[r.partner.index] = r.partner.label;
        }
        fm.category_names.assign(fm.columns.size(), {});
        fm.category_names[0] = country_names;
        fm.category_names[1] = country_names;
        fm.category_names[4] = commodity_names;
        fm.rows.reserve(working.size());
        for (const auto& r : working) {
            fm.rows.push_back({static_cast<double>(r.reporter.index), static_cast<double>(r.partner.index),
                               static_cast<double>(r.year), static_cast<double>(r.month),
                               static_cast<double>(commodity_code.at(r.commodity)), r.harmonic_distance,
                               r.gdp_reporter, r.gdp_partner});
            fm.target.push_back(r.trade_value);
        }
    } else {
        const std::size_t dim = embeddings->dimension();
        fm.columns.push_back({"commodity_code", FeatureKind::Categorical});
        for (std::size_t i = 0; i < dim; ++i)
            fm.columns.push_back({"rep_emb_" + std::to_string(i), FeatureKind::Numeric});
        for (std::size_t i = 0; i < dim; ++i)
            fm.columns.push_back({"par_emb_" + std::to_string(i), FeatureKind::Numeric});
        fm.category_names.assign(fm.columns.size(), {});
        fm.category_names[0] = commodity_names;
        fm.rows.reserve(working.size());
        for (const auto& r : working) {
            std::vector<double> row;
            row.reserve(1 + 2 * dim);
            row.push_back(static_cast<double>(commodity_code.at(r.commodity)));
            const auto& rep = embeddings->vec(r.year, r.reporter.label);
            const auto& par = embeddings->vec(r.year, r.partner.label);
            row.insert(row.end(), rep.begin(), rep.end());
            row.insert(row.end(), par.begin(), par.end());
            fm.rows.push_back(std::move(row));
            fm.target.push_back(r.trade_value);
        }
    }
    return fm;
}

namespace detail {

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    bool categorical = false;
    double threshold = 0.0;
    std::vector<std::uint8_t> left_categories;
    double gain = -1.0;
};

// Best split of the rows in `idx` by exhaustive scan: numeric features try
// each midpoint between distinct adjacent values, categorical features try
// the contiguous partitions of the codes ordered by target mean.
inline SplitChoice best_split(const FeatureMatrix& fm, const std::vector<std::size_t>& idx,
                              double node_sse, std::size_t min_leaf) {
    SplitChoice best;
    const std::size_t n = idx.size();

    std::vector<std::pair<double, double>> vals; // (feature value, target)
    for (std::size_t f = 0; f < fm.columns.size(); ++f) {
        if (fm.columns[f].kind == FeatureKind::Numeric) {
            vals.clear();
            vals.reserve(n);
            for (std::size_t i : idx) vals.emplace_back(fm.rows[i][f], fm.target[i]);
            std::sort(vals.begin(), vals.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double left_sum = 0.0, left_sq = 0.0;
            double total_sum = 0.0, total_sq = 0.0;
            for (const auto& [v, y] : vals) {
                total_sum += y;
                total_sq += y * y;
            }
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_sum += vals[i].second;
                left_sq += vals[i].second * vals[i].second;
                if (vals[i].first == vals[i + 1].first) continue;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                const double right_sum = total_sum - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse_l = left_sq - left_sum * left_sum / static_cast<double>(nl);
                const double sse_r = right_sq - right_sum * right_sum / static_cast<double>(nr);
                const double gain = node_sse - (sse_l + sse_r);
                if (gain > best.gain) {
                    best.found = true;
                    best.gain = gain;
                    best.feature = f;
                    best.categorical = false;
                    best.threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                    best.left_categories.clear();
                }
            }
        } else {
            // Per-code aggregates.
            std::map<int, std::pair<double, std::size_t>> agg; // code -> (sum, count)
            std::map<int, double> sq;
            for (std::size_t i : idx) {
                const int code = static_cast<int>(fm.rows[i][f]);
                auto& a = agg[code];
                a.first += fm.target[i];
                ++a.second;
                sq[code] += fm.target[i] * fm.target[i];
            }
            if (agg.size() < 2) continue;
            std::vector<int> codes;
            for (const auto& [code, a] : agg) codes.push_back(code);
            std::sort(codes.begin(), codes.end(), [&](int a, int b) {
                const double ma = agg[a].first / static_cast<double>(agg[a].second);
                const double mb = agg[b].first / static_cast<double>(agg[b].second);
                if (ma != mb) return ma < mb;
                return a < b;
            });
            double total_sum = 0.0, total_sq = 0.0;
            for (int c : codes) {
                total_sum += agg[c].first;
                total_sq += sq[c];
            }
            double left_sum = 0.0, left_sq = 0.0;
            std::size_t left_n = 0;
            for (std::size_t b = 0; b + 1 < codes.size(); ++b) {
                left_sum += agg[codes[b]].first;
                left_sq += sq[codes[b]];
                left_n += agg[codes[b]].second;
                const std::size_t right_n = n - left_n;
                if (left_n < min_leaf || right_n < min_leaf) continue;
                const double right_sum = total_sum - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse_l = left_sq - left_sum * left_sum / static_cast<double>(left_n);
                const double sse_r = right_sq - right_sum * right_sum / static_cast<double>(right_n);
                const double gain = node_sse - (sse_l + sse_r);
                if (gain > best.gain) {
                    best.found = true;
                    best.gain = gain;
                    best.feature = f;
                    best.categorical = true;
                    best.threshold = 0.0;
                    int max_code = codes.back();
                    for (int c : codes) max_code = std::max(max_code, c);
                    best.left_categories.assign(static_cast<std::size_t>(max_code) + 1, 0);
                    for (std::size_t q = 0; q <= b; ++q)
                        best.left_categories[static_cast<std::size_t>(codes[q])] = 1;
                }
            }
        }
    }
    return best;
}

inline std::unique_ptr<TreeNode> fit_node(const FeatureMatrix& fm, std::vector<std::size_t>& idx,
                                          const DTreeConfig& config, std::size_t depth) {
    auto node = std::make_unique<TreeNode>();
    node->count = idx.size();
    double sum = 0.0;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i : idx) {
        sum += fm.target[i];
        y_min = std::min(y_min, fm.target[i]);
        y_max = std::max(y_max, fm.target[i]);
    }
    node->prediction = sum / static_cast<double>(idx.size());

    if (depth >= config.max_depth || idx.size() < 2 * config.min_leaf || y_min == y_max) return node;

    double sse = 0.0;
    for (std::size_t i : idx) {
        const double d = fm.target[i] - node->prediction;
        sse += d * d;
    }
    const SplitChoice split = best_split(fm, idx, sse, config.min_leaf);
    // Splits with gain exactly min_gain are taken: with the default
    // min_gain = 0 an impure node whose candidate splits all have zero gain
    // (XOR-style targets) still splits and the tree can reach purity.
    if (!split.found || split.gain < config.min_gain) return node;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
        bool go_left;
        if (split.categorical) {
            const auto code = static_cast<std::size_t>(fm.rows[i][split.feature]);
            go_left = code < split.left_categories.size() && split.left_categories[code];
        } else {
            go_left = fm.rows[i][split.feature] <= split.threshold;
        }
        (go_left ? left_idx : right_idx).push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) return node; // degenerate; keep the leaf

    node->is_leaf = false;
    node->feature = split.feature;
    node->categorical = split.categorical;
    node->threshold = split.threshold;
    node->left_categories = split.left_categories;
    node->gain = split.gain;
    idx.clear();
    idx.shrink_to_fit();
    node->left = fit_node(fm, left_idx, config, depth + 1);
    node->right = fit_node(fm, right_idx, config, depth + 1);
    return node;
}

} // namespace detail

// Greedy CART fit with variance reduction as the split criterion. Fully
// deterministic: ties break toward the lowest feature index, then the lowest
// threshold; the seed parameter is reserved for row subsampling and unused.
inline std::unique_ptr<TreeNode> fit(const FeatureMatrix& fm, const DTreeConfig& config,
                                     std::uint64_t /*seed*/ = 0) {
    config.validate();
    if (fm.rows.empty()) throw EmptyData("dtree fit: empty feature matrix");
    for (const auto& row : fm.rows)
        if (row.size() != fm.columns.size()) throw ShapeError("dtree fit: row width mismatch");
    if (fm.target.size() != fm.rows.size()) throw ShapeError("dtree fit: target length mismatch");
    std::vector<std::size_t> idx(fm.rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    return detail::fit_node(fm, idx, config, 0);
}

inline double predict(const TreeNode& tree, const std::vector<double>& row,
                      const std::vector<Column>& columns) {
    if (row.size() != columns.size()) throw ShapeError("dtree predict: row width mismatch");
    const TreeNode* node = &tree;
    while (!node->is_leaf) {
        bool go_left;
        if (node->categorical) {
            const auto code = static_cast<std::size_t>(row[node->feature]);
            go_left = code < node->left_categories.size() && node->left_categories[code];
        } else {
            go_left = row[node->feature] <= node->threshold;
        }
        node = go_left ? node->left.get() : node->right.get();
    }
    return node->prediction;
}

// Total split gain per feature, normalized to sum to 1. A single leaf yields
// all zeros.
inline std::map<std::string, double> feature_importance(const TreeNode& tree,
                                                        const std::vector<Column>& columns) {
    std::vector<double> gain(columns.size(), 0.0);
    double total = 0.0;
    const std::function<void(const TreeNode&)> walk = [&](const TreeNode& node) {
        if (node.is_leaf) return;
        gain[node.feature] += node.gain;
        total += node.gain;
        walk(*node.left);
        walk(*node.right);
    };
    walk(tree);
    std::map<std::string, double> importance;
    for (std::size_t f = 0; f < columns.size(); ++f)
        importance[columns[f].name] = total > 0.0 ? gain[f] / total : 0.0;
    return importance;
}

} // namespace gravitykg::dtree
