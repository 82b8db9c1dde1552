// gravitykg: gravity-model knowledge graphs from bilateral trade data.
// Subcommands cover the full pipeline plus every stage standalone.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gravitykg/gravitykg.hpp"

namespace {

using gravitykg::pipeline::PipelineConfig;

std::string join_args(int argc, char** argv) {
    std::string line;
    for (int i = 0; i < argc; ++i) {
        if (i) line += ' ';
        line += argv[i];
    }
    return line;
}

struct CliOptions {
    PipelineConfig cfg;
    std::string method = "kmeans";
    std::string flow = "Exports";
    std::string norm = "l1";
    std::size_t cluster_k = 0; // 0: silhouette-selected
    double bandwidth = 0.0;    // 0: Silverman's rule
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--out", opt.cfg.out_dir, "run directory for all artifacts");
    cmd->add_option("--seed", opt.cfg.seed, "pipeline seed; per-stage seeds are derived from it");
}

void add_synth_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--countries", opt.cfg.synth.n_countries, "number of countries");
    cmd->add_option("--commodities", opt.cfg.synth.n_commodities, "number of HS-6 commodity codes");
    cmd->add_option("--months", opt.cfg.synth.months, "number of months starting 2015-01");
    cmd->add_option("--noise-sigma", opt.cfg.synth.noise_sigma, "log-normal noise sigma");
}

void add_data_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--trade", opt.cfg.trade_path, "trade CSV (omit to use the synthetic fixture)");
    cmd->add_option("--gravity-csv", opt.cfg.gravity_path, "gravity covariate CSV");
    cmd->add_option("--years", opt.cfg.years, "years to keep (default: all)");
    cmd->add_option("--flow", opt.flow, "Exports or Imports")->check(CLI::IsMember({"Exports", "Imports"}));
}

void add_model_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--method", opt.method, "clustering method")
        ->check(CLI::IsMember({"kmeans", "agglomerative", "dbscan", "gmm", "meanshift"}));
    cmd->add_option("--k", opt.cluster_k, "cluster count (0: silhouette-selected)");
    cmd->add_option("--eps", opt.cfg.cluster_params.eps, "DBSCAN eps");
    cmd->add_option("--min-pts", opt.cfg.cluster_params.min_pts, "DBSCAN min_pts");
    cmd->add_option("--bandwidth", opt.bandwidth, "mean-shift bandwidth (0: Silverman)");
    cmd->add_flag("--raw-scores,!--log-scores", opt.cfg.log_scores, "cluster raw instead of log scores")
        ->default_val(true);
    cmd->add_option("--constant-g", opt.cfg.gravity.constant_G, "gravitational constant");
    cmd->add_option("--distance-exponent", opt.cfg.gravity.distance_exponent, "distance exponent");
    cmd->add_option("--train-frac", opt.cfg.train_frac, "train fraction of country pairs");
    cmd->add_flag("--directed-single", opt.cfg.directed_single, "emit one directed triple per pair");
    cmd->add_option("--dim", opt.cfg.transe.dimension, "embedding dimension");
    cmd->add_option("--margin", opt.cfg.transe.margin, "margin gamma");
    cmd->add_option("--lr", opt.cfg.transe.learning_rate, "TransE learning rate");
    cmd->add_option("--epochs", opt.cfg.transe.epochs, "TransE epochs");
    cmd->add_option("--batch", opt.cfg.transe.batch_size, "TransE batch size");
    cmd->add_option("--norm", opt.norm, "TransE norm")->check(CLI::IsMember({"l1", "l2"}));
    cmd->add_option("--max-depth", opt.cfg.dtree.max_depth, "decision tree max depth");
    cmd->add_option("--min-leaf", opt.cfg.dtree.min_leaf, "decision tree min leaf size");
    cmd->add_option("--gnn-hidden", opt.cfg.gnn.hidden_dim, "GNN hidden width");
    cmd->add_option("--gnn-epochs", opt.cfg.gnn.epochs, "GNN epochs");
    cmd->add_option("--gnn-lr", opt.cfg.gnn.learning_rate, "GNN learning rate");
    cmd->add_option("--gnn-ratio", opt.cfg.gnn.negative_ratio, "negatives per positive");
    cmd->add_option("--gnn-threshold", opt.cfg.gnn.threshold, "link score threshold");
    cmd->add_option("--neighbors", opt.cfg.neighbors_k, "k for the neighbor lists");
}

void finalize(CliOptions& opt) {
    opt.cfg.flow = gravitykg::ingest::flow_from_string(opt.flow);
    opt.cfg.method = gravitykg::cluster::method_from_string(opt.method);
    opt.cfg.transe.norm = opt.norm == "l2" ? gravitykg::Norm::L2 : gravitykg::Norm::L1;
    if (opt.cluster_k > 0) opt.cfg.cluster_params.k = opt.cluster_k;
    if (opt.bandwidth > 0.0) opt.cfg.cluster_params.bandwidth = opt.bandwidth;
    opt.cfg.synthetic = opt.cfg.trade_path.empty();
    if (!opt.cfg.synthetic && opt.cfg.gravity_path.empty())
        throw gravitykg::ConfigError("--gravity-csv is required with --trade");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gravity-model knowledge graphs for trade-flow prediction"};
    app.require_subcommand(1);
    app.set_config("--config");

    CliOptions opt;
    std::string stage;

    auto* synth = app.add_subcommand("synth", "generate the synthetic dataset");
    add_common_flags(synth, opt);
    add_synth_flags(synth, opt);

    auto* ingest_cmd = app.add_subcommand("ingest", "parse and join the trade and gravity CSVs");
    auto* gravity_cmd = app.add_subcommand("gravity", "score every country pair");
    auto* cluster_cmd = app.add_subcommand("cluster", "partition gravity scores into bands");
    auto* build_cmd = app.add_subcommand("build-kg", "emit per-year knowledge graphs and splits");
    auto* train_cmd = app.add_subcommand("train", "train translational embeddings per year");
    auto* dtree_cmd = app.add_subcommand("dtree", "fit the four regression-tree variants");
    auto* gnn_cmd = app.add_subcommand("gnn", "edge prediction with basic vs embedding features");
    auto* project_cmd = app.add_subcommand("project", "3-D projection and neighbor lists");
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage end to end");

    for (CLI::App* cmd : {ingest_cmd, gravity_cmd, cluster_cmd, build_cmd, train_cmd, dtree_cmd, gnn_cmd,
                          project_cmd, pipeline_cmd}) {
        add_common_flags(cmd, opt);
        add_data_flags(cmd, opt);
        add_model_flags(cmd, opt);
    }
    add_synth_flags(pipeline_cmd, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        finalize(opt);
        const auto& cfg = opt.cfg;
        namespace pl = gravitykg::pipeline;
        if (synth->parsed()) {
            opt.cfg.synth.validate();
            pl::stage_synth(cfg);
            std::cout << "synthetic dataset written to " << cfg.out_dir << "\n";
        } else if (ingest_cmd->parsed()) {
            pl::stage_ingest(cfg);
        } else if (gravity_cmd->parsed()) {
            pl::stage_gravity(cfg);
        } else if (cluster_cmd->parsed()) {
            pl::stage_cluster(cfg);
        } else if (build_cmd->parsed()) {
            pl::stage_build_kg(cfg);
        } else if (train_cmd->parsed()) {
            pl::stage_train(cfg);
        } else if (dtree_cmd->parsed()) {
            const auto result = pl::stage_dtree(cfg);
            for (const auto& row : result.rows)
                std::cout << row.name << ": raw MAE " << row.raw.mae << ", log1p MAE " << row.log1p.mae
                          << ", log1p R2 " << row.log1p.r_square << "\n";
        } else if (gnn_cmd->parsed()) {
            const auto result = pl::stage_gnn(cfg);
            for (const auto& row : result.rows)
                std::cout << row.features << ": final MSE " << row.final_train_mse << ", accuracy "
                          << row.test_confusion.accuracy << "\n";
        } else if (project_cmd->parsed()) {
            pl::stage_project(cfg);
        } else if (pipeline_cmd->parsed()) {
            pl::run_pipeline(cfg, join_args(argc, argv));
            std::cout << "pipeline complete; metrics at " << (pl::Paths(cfg.out_dir).metrics()).string()
                      << "\n";
        }
    } catch (const gravitykg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gravitykg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
