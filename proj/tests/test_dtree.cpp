#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "gravitykg/dtree.hpp"
#include "gravitykg/transe.hpp"
#include "support/fixtures.hpp"

using namespace gravitykg;
using namespace gravitykg::dtree;
using Catch::Approx;

namespace {

FeatureMatrix single_feature(const std::vector<double>& x, const std::vector<double>& y) {
    FeatureMatrix fm;
    fm.columns = {{"x", FeatureKind::Numeric}};
    fm.category_names.resize(1);
    for (std::size_t i = 0; i < x.size(); ++i) fm.rows.push_back({x[i]});
    fm.target = y;
    return fm;
}

// Exhaustive best split over the midpoints of one numeric feature.
std::pair<double, double> brute_force_best_split(const std::vector<double>& x,
                                                 const std::vector<double>& y) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    auto sse = [&](std::size_t from, std::size_t to) {
        double mean = 0.0;
        for (std::size_t i = from; i < to; ++i) mean += y[order[i]];
        mean /= double(to - from);
        double s = 0.0;
        for (std::size_t i = from; i < to; ++i) s += (y[order[i]] - mean) * (y[order[i]] - mean);
        return s;
    };
    double best_sse = std::numeric_limits<double>::infinity();
    double best_threshold = 0.0;
    for (std::size_t cut = 1; cut < x.size(); ++cut) {
        if (x[order[cut - 1]] == x[order[cut]]) continue;
        const double total = sse(0, cut) + sse(cut, x.size());
        if (total < best_sse) {
            best_sse = total;
            best_threshold = (x[order[cut - 1]] + x[order[cut]]) / 2.0;
        }
    }
    return {best_threshold, best_sse};
}

} // namespace

TEST_CASE("four-point fixture splits where exhaustive search says") {
    const std::vector<double> x = {1, 2, 3, 4};
    const std::vector<double> y = {0, 0, 10, 10};
    const auto [oracle_threshold, oracle_sse] = brute_force_best_split(x, y);
    CHECK(oracle_threshold == 2.5);
    CHECK(oracle_sse == 0.0);

    const auto fm = single_feature(x, y);
    const auto tree = fit(fm, {});
    REQUIRE_FALSE(tree->is_leaf);
    CHECK(tree->feature == 0);
    CHECK(tree->threshold == 2.5);
    CHECK(tree->left->prediction == 0.0);
    CHECK(tree->right->prediction == 10.0);

    SECTION("prediction follows the split") {
        CHECK(predict(*tree, {1.5}, fm.columns) == 0.0);
        CHECK(predict(*tree, {2.5}, fm.columns) == 0.0); // boundary: value <= threshold goes left
        CHECK(predict(*tree, {2.50001}, fm.columns) == 10.0);
    }
}

TEST_CASE("constant target yields a single leaf") {
    const auto fm = single_feature({1, 2, 3}, {4.2, 4.2, 4.2});
    const auto tree = fit(fm, {});
    CHECK(tree->is_leaf);
    CHECK(tree->prediction == 4.2);
    CHECK(predict(*tree, {99.0}, fm.columns) == 4.2);
}

TEST_CASE("max_depth zero yields the global mean") {
    const auto fm = single_feature({1, 2, 3, 4}, {0, 0, 10, 10});
    DTreeConfig config;
    config.max_depth = 0;
    const auto tree = fit(fm, config);
    CHECK(tree->is_leaf);
    CHECK(tree->prediction == 5.0);
}

TEST_CASE("empty matrix is rejected") {
    CHECK_THROWS_AS(fit(FeatureMatrix{}, {}), EmptyData);
}

TEST_CASE("zero training SSE on distinct rows") {
    SECTION("random numeric rows") {
        Rng rng(41);
        FeatureMatrix fm;
        fm.columns = {{"a", FeatureKind::Numeric}, {"b", FeatureKind::Numeric}};
        fm.category_names.resize(2);
        for (int i = 0; i < 40; ++i) {
            fm.rows.push_back({rng.uniform(), rng.uniform()});
            fm.target.push_back(rng.uniform(-5.0, 5.0));
        }
        const auto tree = fit(fm, {});
        for (std::size_t i = 0; i < fm.rows.size(); ++i)
            CHECK(predict(*tree, fm.rows[i], fm.columns) == fm.target[i]);
    }
    SECTION("XOR targets still reach purity via zero-gain splits") {
        FeatureMatrix fm;
        fm.columns = {{"a", FeatureKind::Numeric}, {"b", FeatureKind::Numeric}};
        fm.category_names.resize(2);
        fm.rows = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
        fm.target = {0.0, 1.0, 1.0, 0.0};
        const auto tree = fit(fm, {});
        for (std::size_t i = 0; i < fm.rows.size(); ++i)
            CHECK(predict(*tree, fm.rows[i], fm.columns) == fm.target[i]);
    }
}

TEST_CASE("feature importance") {
    SECTION("single informative feature gets weight one") {
        const auto fm = single_feature({1, 2, 3, 4}, {0, 0, 10, 10});
        const auto tree = fit(fm, {});
        const auto importance = feature_importance(*tree, fm.columns);
        CHECK(importance.at("x") == 1.0);
    }
    SECTION("single leaf gives all zeros") {
        const auto fm = single_feature({1, 2}, {3.0, 3.0});
        const auto tree = fit(fm, {});
        const auto importance = feature_importance(*tree, fm.columns);
        CHECK(importance.at("x") == 0.0);
    }
    SECTION("pure-noise feature gets zero importance") {
        Rng rng(17);
        FeatureMatrix fm;
        fm.columns = {{"signal", FeatureKind::Numeric}, {"noise", FeatureKind::Numeric}};
        fm.category_names.resize(2);
        for (int i = 0; i < 30; ++i) {
            const double a = i < 15 ? 0.0 : 1.0;
            fm.rows.push_back({a, rng.uniform()});
            fm.target.push_back(a * 10.0); // fully determined by "signal"
        }
        const auto tree = fit(fm, {});
        const auto importance = feature_importance(*tree, fm.columns);
        CHECK(importance.at("signal") == 1.0);
        CHECK(importance.at("noise") == 0.0);
    }
    SECTION("importances are non-negative and sum to one") {
        Rng rng(29);
        FeatureMatrix fm;
        fm.columns = {{"a", FeatureKind::Numeric}, {"b", FeatureKind::Numeric},
                      {"c", FeatureKind::Categorical}};
        fm.category_names.resize(3);
        fm.category_names[2] = {"k0", "k1", "k2"};
        for (int i = 0; i < 60; ++i) {
            const double cat = double(rng.uniform_index(3));
            fm.rows.push_back({rng.uniform(), rng.uniform(), cat});
            fm.target.push_back(cat * 3.0 + fm.rows.back()[0] + 0.2 * rng.normal());
        }
        const auto tree = fit(fm, {});
        const auto importance = feature_importance(*tree, fm.columns);
        double total = 0.0;
        for (const auto& [name, value] : importance) {
            CHECK(value >= 0.0);
            total += value;
        }
        CHECK(total == Approx(1.0));
    }
}

TEST_CASE("categorical splits use the target-mean ordering") {
    // three categories with means 0, 10, 11: the exact binary partition is
    // {cat0} vs {cat1, cat2}
    FeatureMatrix fm;
    fm.columns = {{"cat", FeatureKind::Categorical}};
    fm.category_names.resize(1);
    fm.category_names[0] = {"a", "b", "c"};
    for (int i = 0; i < 6; ++i) fm.rows.push_back({double(i % 3)});
    fm.target = {0.0, 10.0, 11.0, 0.0, 10.0, 11.0};
    const auto tree = fit(fm, {});
    REQUIRE_FALSE(tree->is_leaf);
    CHECK(tree->categorical);
    REQUIRE(tree->left_categories.size() == 3);
    CHECK(tree->left_categories[0] == 1);
    CHECK(tree->left_categories[1] == 0);
    CHECK(tree->left_categories[2] == 0);
    // unseen category codes route right
    CHECK(predict(*tree, {7.0}, fm.columns) == tree->right->prediction);
}

TEST_CASE("prediction is piecewise constant") {
    Rng rng(53);
    FeatureMatrix fm;
    fm.columns = {{"a", FeatureKind::Numeric}};
    fm.category_names.resize(1);
    for (int i = 0; i < 20; ++i) {
        fm.rows.push_back({double(i)});
        fm.target.push_back(rng.uniform(0.0, 1.0));
    }
    const auto tree = fit(fm, {});
    // nudges that stay inside (i - .4, i + .4) never cross a midpoint threshold
    for (int i = 0; i < 20; ++i) {
        const double base = predict(*tree, {double(i)}, fm.columns);
        CHECK(predict(*tree, {double(i) + 0.4}, fm.columns) == base);
        CHECK(predict(*tree, {double(i) - 0.4}, fm.columns) == base);
    }
}

TEST_CASE("min_gain bounds every split's gain") {
    Rng rng(67);
    FeatureMatrix fm;
    fm.columns = {{"a", FeatureKind::Numeric}, {"b", FeatureKind::Numeric}};
    fm.category_names.resize(2);
    for (int i = 0; i < 80; ++i) {
        fm.rows.push_back({rng.uniform(), rng.uniform()});
        fm.target.push_back(fm.rows.back()[0] * 4.0 + rng.normal());
    }
    DTreeConfig config;
    config.min_gain = 0.5;
    const auto tree = fit(fm, config);
    const std::function<void(const TreeNode&)> walk = [&](const TreeNode& node) {
        if (node.is_leaf) return;
        CHECK(node.gain >= config.min_gain);
        walk(*node.left);
        walk(*node.right);
    };
    walk(*tree);
}

TEST_CASE("build_features") {
    EntityRegistry registry;
    const EntityId deu = registry.intern("DEU");
    const EntityId fra = registry.intern("FRA");
    TradeRecord r;
    r.year = 2019;
    r.month = 3;
    r.reporter = deu;
    r.partner = fra;
    r.commodity = "010121";
    r.trade_value = std::exp(1.0) - 1.0;
    r.gdp_reporter = 4.0;
    r.gdp_partner = 9.0;
    r.harmonic_distance = 6.0;

    SECTION("basic mode has the eight documented columns") {
        const auto fm = build_features({r}, nullptr, false);
        REQUIRE(fm.columns.size() == 8);
        CHECK(fm.columns[0].name == "reporter_code");
        CHECK(fm.columns[4].name == "commodity_code");
        CHECK(fm.columns[4].kind == FeatureKind::Categorical);
        CHECK(fm.rows[0][5] == 6.0);
        CHECK(fm.target[0] == r.trade_value);
    }

    SECTION("embedding mode has 1 + 2N columns") {
        EmbeddingSpace space;
        space.dimension = 10;
        space.norm = Norm::L1;
        space.entities = {deu, fra};
        space.entity_vectors = {std::vector<double>(10, 0.5), std::vector<double>(10, -0.5)};
        space.rebuild_lookup();
        SingleSpaceLookup lookup(space);
        const auto fm = build_features({r}, &lookup, false);
        CHECK(fm.columns.size() == 21);
        CHECK(fm.rows[0].size() == 21);
        CHECK(fm.rows[0][1] == 0.5);   // rep_emb_0
        CHECK(fm.rows[0][11] == -0.5); // par_emb_0
    }

    SECTION("log mode transforms the target with log1p") {
        const auto fm = build_features({r}, nullptr, true);
        CHECK(fm.target[0] == Approx(1.0).epsilon(1e-12));
        CHECK(fm.rows[0][5] == Approx(std::log(6.0)));
    }

    SECTION("missing embedding raises UnknownEntity") {
        EmbeddingSpace space;
        space.dimension = 4;
        space.entities = {deu};
        space.entity_vectors = {std::vector<double>(4, 0.1)};
        space.rebuild_lookup();
        SingleSpaceLookup lookup(space);
        CHECK_THROWS_AS(build_features({r}, &lookup, false), UnknownEntity);
    }
}
