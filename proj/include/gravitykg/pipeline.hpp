#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gravitykg/clustering.hpp"
#include "gravitykg/core.hpp"
#include "gravitykg/csv.hpp"
#include "gravitykg/dtree.hpp"
#include "gravitykg/edge_gnn.hpp"
#include "gravitykg/errors.hpp"
#include "gravitykg/evaluation.hpp"
#include "gravitykg/gravity.hpp"
#include "gravitykg/ingestion.hpp"
#include "gravitykg/kg_builder.hpp"
#include "gravitykg/manifest.hpp"
#include "gravitykg/projection.hpp"
#include "gravitykg/rng.hpp"
#include "gravitykg/transe.hpp"

namespace gravitykg::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

struct PipelineConfig {
    std::string out_dir = "run";
    std::uint64_t seed = 7;

    // data source: either synthetic generation or existing CSV files
    bool synthetic = true;
    ingest::SyntheticSpec synth;
    std::string trade_path;   // used when synthetic == false
    std::string gravity_path; // used when synthetic == false

    std::vector<int> years; // empty: every year present in the data
    ingest::Flow flow = ingest::Flow::Exports;

    GravityParams gravity;

    cluster::Method method = cluster::Method::KMeans;
    cluster::ClusterParams cluster_params;
    bool log_scores = true; // cluster log(score); gravity scores span decades

    double train_frac = 0.8;
    bool directed_single = false; // one directed triple per pair instead of two

    transe::TranseConfig transe;
    dtree::DTreeConfig dtree;
    gnn::GnnConfig gnn;

    std::size_t neighbors_k = 5;
};

inline json config_to_json(const PipelineConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["synthetic"] = c.synthetic;
    j["synth"] = {{"n_countries", c.synth.n_countries},
                  {"n_commodities", c.synth.n_commodities},
                  {"months", c.synth.months},
                  {"noise_sigma", c.synth.noise_sigma}};
    j["trade_path"] = c.trade_path;
    j["gravity_path"] = c.gravity_path;
    j["years"] = c.years;
    j["flow"] = ingest::to_string(c.flow);
    j["gravity"] = {{"constant_G", c.gravity.constant_G}, {"distance_exponent", c.gravity.distance_exponent}};
    j["clustering"] = {{"method", cluster::to_string(c.method)},
                       {"k", c.cluster_params.k ? json(*c.cluster_params.k) : json(nullptr)},
                       {"eps", c.cluster_params.eps},
                       {"min_pts", c.cluster_params.min_pts},
                       {"bandwidth", c.cluster_params.bandwidth ? json(*c.cluster_params.bandwidth) : json(nullptr)},
                       {"log_scores", c.log_scores}};
    j["train_frac"] = c.train_frac;
    j["directed_single"] = c.directed_single;
    j["transe"] = {{"dimension", c.transe.dimension}, {"margin", c.transe.margin},
                   {"learning_rate", c.transe.learning_rate}, {"epochs", c.transe.epochs},
                   {"batch_size", c.transe.batch_size},
                   {"norm", c.transe.norm == Norm::L1 ? "L1" : "L2"}};
    j["dtree"] = {{"max_depth", c.dtree.max_depth}, {"min_leaf", c.dtree.min_leaf},
                  {"min_gain", c.dtree.min_gain}};
    j["gnn"] = {{"hidden_dim", c.gnn.hidden_dim}, {"epochs", c.gnn.epochs},
                {"learning_rate", c.gnn.learning_rate}, {"negative_ratio", c.gnn.negative_ratio},
                {"threshold", c.gnn.threshold}};
    j["neighbors_k"] = c.neighbors_k;
    return j;
}

// Artifact layout inside the run directory.
struct Paths {
    fs::path root;
    explicit Paths(const std::string& out_dir) : root(out_dir) {}

    fs::path trade() const { return root / "trade.csv"; }
    fs::path gravity() const { return root / "gravity.csv"; }
    fs::path provenance() const { return root / "provenance.json"; }
    fs::path records() const { return root / "records.csv"; }
    fs::path ingest_report() const { return root / "ingest-report.json"; }
    fs::path scores() const { return root / "gravity-scores.csv"; }
    fs::path gravity_report() const { return root / "gravity-report.json"; }
    fs::path bands() const { return root / "bands.json"; }
    fs::path year_dir(int year) const { return root / "years" / std::to_string(year); }
    fs::path kg(int year) const { return year_dir(year) / "kg.tsv"; }
    fs::path kg_train(int year) const { return year_dir(year) / "kg-train.tsv"; }
    fs::path kg_test(int year) const { return year_dir(year) / "kg-test.tsv"; }
    fs::path kg_report() const { return root / "kg-report.json"; }
    fs::path embeddings(int year) const { return year_dir(year) / "embeddings.csv"; }
    fs::path trace(int year) const { return year_dir(year) / "trace.csv"; }
    fs::path dtree_dir(const std::string& variant) const { return root / "dtree" / variant; }
    fs::path tree_json(const std::string& variant) const { return dtree_dir(variant) / "tree.json"; }
    fs::path importance(const std::string& variant) const { return dtree_dir(variant) / "importance.csv"; }
    fs::path gnn_dir(const std::string& mode) const { return root / "gnn" / mode; }
    fs::path gnn_trace(const std::string& mode) const { return gnn_dir(mode) / "gnn-trace.csv"; }
    fs::path gnn_report(const std::string& mode) const { return gnn_dir(mode) / "gnn-report.json"; }
    fs::path projection(int year) const { return year_dir(year) / "projection.csv"; }
    fs::path variance(int year) const { return year_dir(year) / "variance.json"; }
    fs::path neighbors(int year) const { return year_dir(year) / "neighbors.csv"; }
    fs::path metrics() const { return root / "metrics.json"; }
    fs::path manifest() const { return root / "manifest.json"; }
};

namespace detail {

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path.string());
    out << j.dump(2) << '\n';
}

inline json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    json j;
    in >> j;
    return j;
}

inline const std::vector<std::string> kRecordsHeader = {
    "year", "month", "reporter", "partner", "commodity",
    "trade_value", "gdp_reporter", "gdp_partner", "harmonic_distance"};

inline void write_records_csv(const fs::path& path, const std::vector<TradeRecord>& records) {
    csv::Writer w(path.string());
    w.write_row(kRecordsHeader);
    for (const auto& r : records)
        w.write_row({std::to_string(r.year), std::to_string(r.month), r.reporter.label, r.partner.label,
                     r.commodity, csv::format_double(r.trade_value), csv::format_double(r.gdp_reporter),
                     csv::format_double(r.gdp_partner), csv::format_double(r.harmonic_distance)});
}

inline std::vector<TradeRecord> load_records_csv(const fs::path& path, EntityRegistry& registry) {
    csv::Reader reader(path.string());
    csv::Row row;
    if (!reader.next(row)) throw SchemaError("empty file, missing header: " + path.string());
    csv::expect_header(row, kRecordsHeader, path.string());
    std::vector<TradeRecord> records;
    while (reader.next(row)) {
        if (row.fields.size() == 1 && row.fields[0].empty()) continue;
        if (row.fields.size() != kRecordsHeader.size()) throw RowError(row.line, "bad record row width");
        TradeRecord r;
        r.year = static_cast<int>(csv::parse_long(row.fields[0], row.line, "year"));
        r.month = static_cast<int>(csv::parse_long(row.fields[1], row.line, "month"));
        r.reporter = registry.intern(row.fields[2]);
        r.partner = registry.intern(row.fields[3]);
        r.commodity = row.fields[4];
        r.trade_value = csv::parse_double(row.fields[5], row.line, "trade_value");
        r.gdp_reporter = csv::parse_double(row.fields[6], row.line, "gdp_reporter");
        r.gdp_partner = csv::parse_double(row.fields[7], row.line, "gdp_partner");
        r.harmonic_distance = csv::parse_double(row.fields[8], row.line, "harmonic_distance");
        records.push_back(std::move(r));
    }
    return records;
}

inline std::size_t max_threads() {
    const char* env = std::getenv("GRAVITYKG_THREADS");
    if (!env) return 1;
    const long v = std::atol(env);
    return v > 1 ? static_cast<std::size_t>(v) : 1;
}

// Train KG for one year: full entity/relation vocabulary, train triples only.
inline KnowledgeGraph kg_with_vocabulary(const KnowledgeGraph& full, const std::vector<Triple>& triples) {
    KnowledgeGraph kg;
    for (const auto& e : full.entities()) kg.registry().intern(e.label);
    for (const auto& r : full.relations()) kg.register_relation(r);
    for (const auto& t : triples)
        kg.add_triple(Triple{kg.registry().at(t.head.label), t.relation, kg.registry().at(t.tail.label)});
    kg.finalize();
    return kg;
}

inline std::set<std::pair<std::size_t, std::size_t>> pair_set(const KnowledgeGraph& kg,
                                                              const EntityRegistry& registry) {
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& t : kg.triples()) {
        const std::size_t a = registry.at(t.head.label).index;
        const std::size_t b = registry.at(t.tail.label).index;
        pairs.insert({std::min(a, b), std::max(a, b)});
    }
    return pairs;
}

} // namespace detail

inline void stage_synth(const PipelineConfig& cfg) {
    const Paths paths(cfg.out_dir);
    fs::create_directories(paths.root);
    const auto data = ingest::generate_synthetic(cfg.synth, derive_seed(cfg.seed, "synth"));
    ingest::write_trade_csv(paths.trade().string(), data.trade_rows);
    ingest::write_gravity_csv(paths.gravity().string(), data.gravity_rows);
    json prov;
    prov["spec"] = {{"n_countries", cfg.synth.n_countries},
                    {"n_commodities", cfg.synth.n_commodities},
                    {"months", cfg.synth.months},
                    {"noise_sigma", cfg.synth.noise_sigma}};
    prov["seed"] = cfg.seed;
    prov["candidate_rows"] = data.candidate_rows;
    prov["kept_rows"] = data.trade_rows.size();
    prov["version"] = kVersion;
    detail::write_json(paths.provenance(), prov);
}

inline void stage_ingest(const PipelineConfig& cfg) {
    const Paths paths(cfg.out_dir);
    fs::create_directories(paths.root);
    const std::string trade_path = cfg.synthetic ? paths.trade().string() : cfg.trade_path;
    const std::string gravity_path = cfg.synthetic ? paths.gravity().string() : cfg.gravity_path;
    const auto loaded = ingest::load_trade_csv(trade_path, cfg.years, cfg.flow);
    const auto covariates = ingest::load_gravity_csv(gravity_path);
    EntityRegistry registry;
    auto joined = ingest::join_gravity(loaded.rows, covariates, registry);
    detail::write_records_csv(paths.records(), joined.records);
    json report;
    report["rows_read"] = loaded.rows_read;
    report["rows_filtered_out"] = loaded.rows_filtered_out;
    report["rows_joined"] = joined.records.size();
    report["unmatched"] = joined.unmatched;
    report["unmatched_examples"] = joined.unmatched_keys;
    detail::write_json(paths.ingest_report(), report);
}

inline void stage_gravity(const PipelineConfig& cfg) {
    const Paths paths(cfg.out_dir);
    EntityRegistry registry;
    const auto records = detail::load_records_csv(paths.records(), registry);
    const auto report = score_all_pairs(records, cfg.gravity);
    write_scores_csv(paths.scores().string(), report.scores);
    json j;
    j["pairs_scored"] = report.scores.size();
    j["pairs_skipped"] = report.skipped_pairs;
    detail::write_json(paths.gravity_report(), j);
}

inline void stage_cluster(const PipelineConfig& cfg) {
    const Paths paths(cfg.out_dir);
    const auto rows = load_scores_csv(paths.scores().string());
    if (rows.empty()) throw EmptyData("cluster: no gravity scores");
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& r : rows) values.push_back(cfg.log_scores ? std::log(r.score) : r.score);

    cluster::ClusterParams params = cfg.cluster_params;
    params.seed = derive_seed(cfg.seed, "clustering");
    auto result = cluster::select_partition(values, cfg.method, params);
    const std::size_t noise_count = result.noise_indices.size();
    result = resolve_noise(std::move(result), values);

    const BandMap bands = band_map_from_centers(result.centers);
    json j;
    j["method"] = cluster::to_string(cfg.method);
    j["space"] = cfg.log_scores ? "log" : "raw";
    j["k"] = result.k;
    j["centers"] = result.centers;
    j["thresholds"] = bands.thresholds;
    json labels = json::array();
    for (const auto& l : bands.labels) labels.push_back({{"name", l.name}, {"band_ordinal", l.band_ordinal}});
    j["labels"] = labels;
    j["noise_count"] = noise_count;
    j["params"] = {{"eps", params.eps},
                   {"min_pts", params.min_pts},
                   {"bandwidth", params.bandwidth ? json(*params.bandwidth) : json(nullptr)},
                   {"requested_k", params.k ? json(*params.k) : json(nullptr)},
                   {"seed", params.seed}};
    detail::write_json(paths.bands(), j);
}

inline BandMap load_band_map(const fs::path& path, bool* log_space = nullptr) {
    const json j = detail::read_json(path);
    BandMap bands;
    bands.thresholds = j.at("thresholds").get<std::vector<double>>();
    for (const auto& l : j.at("labels"))
        bands.labels.push_back(RelationLabel{l.at("name").get<std::string>(),
                                             l.at("band_ordinal").get<std::size_t>()});
    bands.validate();
    if (log_space) *log_space = j.at("space").get<std::string>() == "log";
    return bands;
}

// Rebuilds per-year gravity scores and their band assignments from
// gravity-scores.csv and bands.json alone.
inline std::map<int, std::pair<std::vector<GravityScore>, cluster::ClusteringResult>> banded_scores_by_year(
    const Paths& paths, const PipelineConfig& cfg) {
    const auto rows = load_scores_csv(paths.scores().string());
    bool log_space = false;
    const BandMap bands = load_band_map(paths.bands(), &log_space);
    const json bands_json = detail::read_json(paths.bands());
    const auto centers = bands_json.at("centers").get<std::vector<double>>();

    std::map<int, std::pair<std::vector<GravityScore>, cluster::ClusteringResult>> by_year;
    std::map<int, EntityRegistry> registries;
    for (const auto& row : rows) {
        auto& [scores, result] = by_year[row.year];
        auto& registry = registries[row.year];
        GravityScore s;
        s.year = row.year;
        s.pair = {registry.intern(row.country_a), registry.intern(row.country_b)};
        s.score = row.score;
        s.constant_G = cfg.gravity.constant_G;
        const double value = log_space ? std::log(row.score) : row.score;
        const RelationLabel band = band_of(value, bands);
        result.assignments.push_back(static_cast<int>(band.band_ordinal));
        scores.push_back(std::move(s));
    }
    for (auto& [year, pair] : by_year) {
        pair.second.centers = centers;
        pair.second.k = centers.size();
        pair.second.method = cluster::method_from_string(bands_json.at("method").get<std::string>());
    }
    return by_year;
}

inline void stage_build_kg(const PipelineConfig& cfg) {
    const Paths paths(cfg.out_dir);
    auto by_year = banded_scores_by_year(paths, cfg);
    json report = json::object();
    for (auto& [year, scored] : by_year) {
        auto& [scores, result] = scored;
        KnowledgeGraph kg = build_kg(scores, result);
        fs::create_directories(paths.year_dir(year));
        std::vector<Triple> triples = kg.triples();
        if (cfg.directed_single) {
            // keep only the lexicographically forward direction
            std::vector<Triple> forward;
            for (const auto& t : triples)
                if (t.head.label < t.tail.label) forward.push_back(t);
            triples = std::move(forward);
        }
        write_kg_tsv(paths.kg(year).string(), triples);
        const auto split = split_triples(kg, cfg.train_frac, derive_seed(cfg.seed, "split:" + std::to_string(year)));
        write_kg_tsv(paths.kg_train(year).string(), split.train);
        write_kg_tsv(paths.kg_test(year).string(), split.test);
        report[std::to_string(year)] = {{"entities", kg.entities().size()},
                                        {"relations", kg.relations().size()},
                                        {"triples", triples.size()},
                                        {"train_triples", split.train.size()},
                                        {"test_triples", split.test.size()},
                                        {"pairs_moved_to_train", split.moved_to_train}};
    }
    detail::write_json(paths.kg_report(), report);
}

inline std::vector<int> discover_years(const Paths& paths) {
    std::vector<int> years;
    const fs::path dir = paths.root / "years";
    if (!fs::exists(dir)) throw IoError("missing years directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory()) years.push_back(std::atoi(entry.path().filename().string().c_str()));
    std::sort(years.begin(), years.end());
    if (years.empty()) throw EmptyData("no per-year knowledge graphs found");
    return years;
}

inline void stage_train(const PipelineConfig& cfg) {
    const Paths paths(cfg.out_dir);
    for (int year : discover_years(paths)) {
        const KnowledgeGraph full = load_kg_tsv(paths.kg(year).string());
        const KnowledgeGraph train_part = load_kg_tsv(paths.kg_train(year).string());
        const KnowledgeGraph train_kg = detail::kg_with_vocabulary(full, train_part.triples());
        transe::TranseConfig config = cfg.transe;
        config.seed = derive_seed(cfg.seed, "transe:" + std::to_string(year));
        const auto result = transe::train(train_kg, config);
        transe::save_embeddings_csv(paths.embeddings(year).string(), result.space);
        transe::save_trace_csv(paths.trace(year).string(), result.trace);
    }
}

struct DtreeVariantMetrics {
    std::string name;
    std::string features; // "basic" | "embedding"
    bool log = false;
    RegressionMetrics raw;
    RegressionMetrics log1p;
};

struct DtreeStageResult {
    std::vector<DtreeVariantMetrics> rows;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
};

namespace detail {

inline json metrics_to_json(const RegressionMetrics& m) {
    json j;
    j["mae"] = m.mae;
    j["mape"] = m.mape ? json(*m.mape) : json(nullptr);
    j["mpe"] = m.mpe ? json(*m.mpe) : json(nullptr);
    j["r_square"] = std::isfinite(m.r_square) ? json(m.r_square) : json(nullptr);
    j["mape_skipped"] = m.mape_skipped;
    return j;
}

inline json tree_to_json(const dtree::TreeNode& node, const dtree::FeatureMatrix& fm) {
    json j;
    if (node.is_leaf) {
        j["leaf"] = true;
        j["prediction"] = node.prediction;
        j["count"] = node.count;
        return j;
    }
    j["leaf"] = false;
    j["feature"] = fm.columns[node.feature].name;
    j["count"] = node.count;
    j["gain"] = node.gain;
    if (node.categorical) {
        j["kind"] = "categorical";
        json cats = json::array();
        const auto& names = fm.category_names[node.feature];
        for (std::size_t code = 0; code < node.left_categories.size(); ++code)
            if (node.left_categories[code]) cats.push_back(code < names.size() ? names[code] : std::to_string(code));
        j["left_categories"] = cats;
    } else {
        j["kind"] = "numeric";
        j["threshold"] = node.threshold;
    }
    j["left"] = tree_to_json(*node.left, fm);
    j["right"] = tree_to_json(*node.right, fm);
    return j;
}

inline dtree::FeatureMatrix subset(const dtree::FeatureMatrix& fm, const std::vector<std::size_t>& idx) {
    dtree::FeatureMatrix out;
    out.columns = fm.columns;
    out.category_names = fm.category_names;
    out.rows.reserve(idx.size());
    out.target.reserve(idx.size());
    for (std::size_t i : idx) {
        out.rows.push_back(fm.rows[i]);
        out.target.push_back(fm.target[i]);
    }
    return out;
}

} // namespace detail

inline DtreeStageResult stage_dtree(const PipelineConfig& cfg) {
    const Paths paths(cfg.out_dir);
    EntityRegistry registry;
    const auto records = detail::load_records_csv(paths.records(), registry);
    if (records.empty()) throw EmptyData("dtree stage: no records");

    std::map<int, EmbeddingSpace> spaces;
    for (int year : discover_years(paths))
        spaces.emplace(year, transe::load_embeddings_csv(paths.embeddings(year).string(), cfg.transe.norm));
    dtree::YearlySpaceLookup lookup(spaces);

    // One shared train/test split over records for all four variants.
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, "dtree-split"));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_frac * order.size()));
    const std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    const std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
    if (train_idx.empty() || test_idx.empty()) throw ConfigError("dtree stage: degenerate train/test split");

    std::vector<double> actual_raw;
    actual_raw.reserve(test_idx.size());
    for (std::size_t i : test_idx) actual_raw.push_back(records[i].trade_value);
    std::vector<double> actual_log;
    actual_log.reserve(test_idx.size());
    for (double y : actual_raw) actual_log.push_back(std::log1p(y));

    struct Variant {
        std::string name;
        bool embedding;
        bool log;
    };
    const std::vector<Variant> variants = {{"basic", false, false},
                                           {"basic_log", false, true},
                                           {"embedding", true, false},
                                           {"embedding_log", true, true}};

    DtreeStageResult result;
    result.rows.resize(variants.size());
    result.train_rows = train_idx.size();
    result.test_rows = test_idx.size();

    auto run_variant = [&](std::size_t v) {
        const Variant& variant = variants[v];
        const auto fm = dtree::build_features(records, variant.embedding ? &lookup : nullptr, variant.log);
        const auto train_fm = detail::subset(fm, train_idx);
        const auto tree = dtree::fit(train_fm, cfg.dtree, derive_seed(cfg.seed, "dtree:" + variant.name));

        std::vector<double> pred_raw(test_idx.size()), pred_log(test_idx.size());
        for (std::size_t t = 0; t < test_idx.size(); ++t) {
            const double p = dtree::predict(*tree, fm.rows[test_idx[t]], fm.columns);
            if (variant.log) {
                pred_log[t] = p;
                pred_raw[t] = std::expm1(p);
            } else {
                pred_raw[t] = p;
                pred_log[t] = std::log1p(std::max(0.0, p));
            }
        }

        DtreeVariantMetrics row;
        row.name = variant.name;
        row.features = variant.embedding ? "embedding" : "basic";
        row.log = variant.log;
        row.raw = regression_metrics(actual_raw, pred_raw);
        row.log1p = regression_metrics(actual_log, pred_log);
        result.rows[v] = row;

        fs::create_directories(paths.dtree_dir(variant.name));
        detail::write_json(paths.tree_json(variant.name), detail::tree_to_json(*tree, fm));
        const auto importance = dtree::feature_importance(*tree, fm.columns);
        csv::Writer w(paths.importance(variant.name).string());
        w.write_row({"feature", "importance"});
        for (const auto& col : fm.columns)
            w.write_row({col.name, csv::format_double(importance.at(col.name))});
    };

    const std::size_t threads = detail::max_threads();
    if (threads <= 1) {
        for (std::size_t v = 0; v < variants.size(); ++v) run_variant(v);
    } else {
        std::vector<std::future<void>> futures;
        for (std::size_t v = 0; v < variants.size(); ++v) {
            futures.push_back(std::async(std::launch::async, run_variant, v));
            if (futures.size() == threads) {
                for (auto& f : futures) f.get();
                futures.clear();
            }
        }
        for (auto& f : futures) f.get();
    }
    return result;
}

struct GnnModeMetrics {
    std::string features; // "basic" | "embedding"
    double initial_train_mse = 0.0;
    double final_train_mse = 0.0;
    ConfusionMatrix test_confusion;
};

struct GnnStageResult {
    int year = 0;
    std::vector<GnnModeMetrics> rows;
};

// Link prediction runs on the latest selected year. Positives reuse the KG
// train/test pair split, so edges unseen by the embeddings stay unseen here.
inline GnnStageResult stage_gnn(const PipelineConfig& cfg) {
    const Paths paths(cfg.out_dir);
    const auto years = discover_years(paths);
    const int year = years.back();

    const KnowledgeGraph full = load_kg_tsv(paths.kg(year).string());
    const KnowledgeGraph train_part = load_kg_tsv(paths.kg_train(year).string());
    const KnowledgeGraph test_part = load_kg_tsv(paths.kg_test(year).string());
    const EmbeddingSpace space = transe::load_embeddings_csv(paths.embeddings(year).string(), cfg.transe.norm);

    EntityRegistry registry;
    auto records = detail::load_records_csv(paths.records(), registry);
    std::vector<TradeRecord> year_records;
    for (const auto& r : records)
        if (r.year == year) year_records.push_back(r);

    GnnStageResult result;
    result.year = year;
    for (const std::string mode : {"basic", "embedding"}) {
        const bool embedding = mode == "embedding";
        auto full_ds = gnn::make_edge_dataset(full, embedding ? gnn::FeatureSet::Embedding : gnn::FeatureSet::Basic,
                                              embedding ? &space : nullptr, year_records, cfg.gnn.negative_ratio,
                                              derive_seed(cfg.seed, "gnn-negatives:" + std::to_string(year)));

        // Positive edges follow the KG split; negatives are split at the same fraction.
        const auto train_pairs = detail::pair_set(train_part, full.registry());
        const auto test_pairs = detail::pair_set(test_part, full.registry());
        gnn::EdgeDataset train_ds = full_ds, test_ds = full_ds;
        train_ds.positive_edges.assign(train_pairs.begin(), train_pairs.end());
        test_ds.positive_edges.assign(test_pairs.begin(), test_pairs.end());

        auto negatives = full_ds.negative_edges;
        Rng rng(derive_seed(cfg.seed, "gnn-negsplit:" + std::to_string(year)));
        for (std::size_t i = negatives.size(); i > 1; --i) std::swap(negatives[i - 1], negatives[rng.uniform_index(i)]);
        const auto n_neg_train = static_cast<std::size_t>(std::llround(cfg.train_frac * negatives.size()));
        train_ds.negative_edges.assign(negatives.begin(), negatives.begin() + n_neg_train);
        test_ds.negative_edges.assign(negatives.begin() + n_neg_train, negatives.end());
        std::sort(train_ds.negative_edges.begin(), train_ds.negative_edges.end());
        std::sort(test_ds.negative_edges.begin(), test_ds.negative_edges.end());
        if (test_ds.positive_edges.empty() || test_ds.negative_edges.empty())
            throw EmptyData("gnn stage: empty held-out split");

        std::vector<std::vector<std::size_t>> adjacency(full_ds.nodes.size());
        for (const auto& [a, b] : train_ds.positive_edges) {
            adjacency[a].push_back(b);
            adjacency[b].push_back(a);
        }
        for (auto& nbrs : adjacency) std::sort(nbrs.begin(), nbrs.end());
        train_ds.adjacency = adjacency;
        test_ds.adjacency = adjacency;

        gnn::GnnConfig config = cfg.gnn;
        config.seed = derive_seed(cfg.seed, "gnn-train:" + mode);
        const auto trained = gnn::train_gnn(train_ds, config);
        const auto matrix = gnn::evaluate_gnn(trained.params, test_ds, cfg.gnn.threshold);

        fs::create_directories(paths.gnn_dir(mode));
        {
            csv::Writer w(paths.gnn_trace(mode).string());
            w.write_row({"epoch", "mse"});
            for (std::size_t e = 0; e < trained.trace.size(); ++e)
                w.write_row({std::to_string(e + 1), csv::format_double(trained.trace[e])});
        }
        json report;
        report["features"] = mode;
        report["year"] = year;
        report["initial_train_mse"] = trained.initial_mse;
        report["final_train_mse"] = trained.final_mse;
        report["accuracy"] = matrix.accuracy;
        report["confusion"] = {{"tp", matrix.tp},         {"fp", matrix.fp},
                               {"fn", matrix.fn},         {"tn", matrix.tn},
                               {"tp_rate", matrix.tp_rate}, {"fp_rate", matrix.fp_rate},
                               {"fn_rate", matrix.fn_rate}, {"tn_rate", matrix.tn_rate}};
        report["config"] = {{"hidden_dim", config.hidden_dim}, {"epochs", config.epochs},
                            {"learning_rate", config.learning_rate},
                            {"negative_ratio", config.negative_ratio}, {"threshold", config.threshold},
                            {"seed", config.seed}};
        detail::write_json(paths.gnn_report(mode), report);

        GnnModeMetrics metrics;
        metrics.features = mode;
        metrics.initial_train_mse = trained.initial_mse;
        metrics.final_train_mse = trained.final_mse;
        metrics.test_confusion = matrix;
        result.rows.push_back(metrics);
    }
    return result;
}

inline void stage_project(const PipelineConfig& cfg) {
    const Paths paths(cfg.out_dir);
    for (int year : discover_years(paths)) {
        const EmbeddingSpace space = transe::load_embeddings_csv(paths.embeddings(year).string(), cfg.transe.norm);
        const Projection3D projection = pca_3d(space);
        write_projection_csv(paths.projection(year).string(), projection);
        json v;
        v["method"] = "pca";
        v["explained_variance"] = projection.explained_variance;
        v["padded"] = projection.padded;
        detail::write_json(paths.variance(year), v);
        write_neighbors_csv(paths.neighbors(year).string(), space, cfg.neighbors_k);
    }
}

// The Table 4 / Table 5 style comparison rows plus run provenance. Contains
// no timestamps: identical inputs and seed give byte-identical output.
inline void write_metrics_json(const PipelineConfig& cfg, const DtreeStageResult& dt,
                               const GnnStageResult& gn) {
    const Paths paths(cfg.out_dir);
    json j;
    json rows = json::array();
    for (const auto& row : dt.rows) {
        rows.push_back({{"name", row.name},
                        {"features", row.features},
                        {"log", row.log},
                        {"raw", detail::metrics_to_json(row.raw)},
                        {"log1p", detail::metrics_to_json(row.log1p)}});
    }
    j["decision_tree"] = {{"rows", rows}, {"train_rows", dt.train_rows}, {"test_rows", dt.test_rows}};
    json gnn_rows = json::array();
    for (const auto& row : gn.rows) {
        gnn_rows.push_back({{"features", row.features},
                            {"initial_train_mse", row.initial_train_mse},
                            {"final_train_mse", row.final_train_mse},
                            {"accuracy", row.test_confusion.accuracy},
                            {"confusion",
                             {{"tp", row.test_confusion.tp},
                              {"fp", row.test_confusion.fp},
                              {"fn", row.test_confusion.fn},
                              {"tn", row.test_confusion.tn},
                              {"tp_rate", row.test_confusion.tp_rate},
                              {"fp_rate", row.test_confusion.fp_rate},
                              {"fn_rate", row.test_confusion.fn_rate},
                              {"tn_rate", row.test_confusion.tn_rate}}}});
    }
    j["link_prediction"] = {{"rows", gnn_rows}, {"year", gn.year}};
    j["provenance"] = {{"seed", cfg.seed},
                       {"config_digest", sha256_string(config_to_json(cfg).dump())},
                       {"dataset_digest", sha256_file(paths.records().string())},
                       {"version", kVersion}};
    detail::write_json(paths.metrics(), j);
}

// Full pipeline: (synth ->) ingest -> gravity -> cluster -> build-kg ->
// train -> dtree + gnn -> project -> metrics.json + manifest.json.
inline void run_pipeline(const PipelineConfig& cfg, const std::string& command_line = "pipeline") {
    const Paths paths(cfg.out_dir);
    RunManifest manifest;
    manifest.command_line = command_line;
    manifest.seed = cfg.seed;
    manifest.config_digest = sha256_string(config_to_json(cfg).dump());
    manifest.started_at = iso8601_now();

    if (cfg.synthetic) {
        stage_synth(cfg);
    } else {
        manifest.input_digests[cfg.trade_path] = sha256_file(cfg.trade_path);
        manifest.input_digests[cfg.gravity_path] = sha256_file(cfg.gravity_path);
    }
    stage_ingest(cfg);
    stage_gravity(cfg);
    stage_cluster(cfg);
    stage_build_kg(cfg);
    stage_train(cfg);
    const auto dt = stage_dtree(cfg);
    const auto gn = stage_gnn(cfg);
    stage_project(cfg);
    write_metrics_json(cfg, dt, gn);

    manifest.finished_at = iso8601_now();
    for (const auto& entry : fs::recursive_directory_iterator(paths.root)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename() == "manifest.json") continue;
        manifest.artifact_digests[fs::relative(entry.path(), paths.root).string()] =
            sha256_file(entry.path().string());
    }
    write_manifest(paths.manifest().string(), manifest);
}

} // namespace gravitykg::pipeline
