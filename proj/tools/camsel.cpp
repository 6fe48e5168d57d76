// camsel: representative-class selection and multi-layer CAM fusion.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "camsel/error.hpp"
#include "camsel/pipeline.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::optional<std::string> mode;
    std::optional<std::size_t> k;
    std::optional<std::string> layer_mode;
    std::optional<std::string> out;
    std::optional<std::size_t> num_clusters;
    std::optional<std::size_t> min_size;
    std::optional<std::size_t> restarts;
    std::optional<std::vector<std::size_t>> positions;
    std::optional<std::string> probs, sim, clusters, selection, dumps, maps, fused, groundtruth, matrix, scenario;
};

camsel::PipelineConfig resolve(const Overrides& o) {
    nlohmann::json j = nlohmann::json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw camsel::Error(camsel::ErrorCode::Io, "cannot open config", o.config);
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw camsel::Error(camsel::ErrorCode::MalformedJson, e.what(), o.config);
        }
    }
    auto set = [&](const char* key, const auto& value) {
        if (value) j[key] = *value;
    };
    set("seed", o.seed);
    set("threshold", o.threshold);
    set("selection_mode", o.mode);
    set("cluster_k", o.k);
    set("layer_mode", o.layer_mode);
    set("out", o.out);
    set("num_clusters", o.num_clusters);
    set("min_cluster_size", o.min_size);
    set("cluster_restarts", o.restarts);
    set("rank_positions", o.positions);
    set("probabilities", o.probs);
    set("similarity", o.sim);
    set("clusters", o.clusters);
    set("selection", o.selection);
    set("dumps", o.dumps);
    set("maps", o.maps);
    set("fused", o.fused);
    set("groundtruth", o.groundtruth);
    set("matrix", o.matrix);
    set("scenario", o.scenario);
    return camsel::PipelineConfig::from_json(j);
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON config file; flags override its values");
    cmd->add_option("--seed", o.seed, "Seed for every random draw");
    cmd->add_option("--out", o.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camsel: representative-class selection and multi-layer CAM fusion"};
    app.require_subcommand(1);
    Overrides o;
    std::optional<std::size_t> target;
    std::size_t top = 1;

    auto* generate = app.add_subcommand("generate", "Write a synthetic scenario (probabilities, dumps, groundtruth)");
    add_common(generate, o);
    generate->add_option("--scenario", o.scenario, "Scenario JSON file");

    auto* build_sim = app.add_subcommand("build-sim", "Build the similarity matrix from a probability log");
    add_common(build_sim, o);
    build_sim->add_option("--probs", o.probs, "Probability log CSV");

    auto* cluster = app.add_subcommand("cluster", "Cluster classes with the size-constrained k-means");
    add_common(cluster, o);
    cluster->add_option("--sim", o.sim, "Similarity CSV");
    cluster->add_option("--n", o.num_clusters, "Number of clusters");
    cluster->add_option("--min-size", o.min_size, "Minimum cluster size");
    cluster->add_option("--restarts", o.restarts, "Seeded restarts");

    auto* select = app.add_subcommand("select", "Pick representative classes for each target");
    add_common(select, o);
    select->add_option("--sim", o.sim, "Similarity CSV");
    select->add_option("--clusters", o.clusters, "clusters.json (cluster mode; computed when absent)");
    select->add_option("--mode", o.mode, "random|rank-a|rank-b|cluster")
        ->check(CLI::IsMember({"random", "rank-a", "rank-b", "cluster"}));
    select->add_option("--k", o.k, "Rank of the class picked inside each cluster (1..4)");
    select->add_option("--positions", o.positions, "Custom 1-based rank positions");
    select->add_option("--n", o.num_clusters, "Number of clusters / random picks");
    select->add_option("--min-size", o.min_size, "Minimum cluster size");
    select->add_option("--target", target, "Only this target class index");

    auto* cam = app.add_subcommand("cam", "Compute per-pair maps from feature/gradient dumps");
    add_common(cam, o);
    cam->add_option("--dumps", o.dumps, "Dump directory");
    cam->add_option("--layer-mode", o.layer_mode, "multi|final")->check(CLI::IsMember({"multi", "final"}));

    auto* fuse = app.add_subcommand("fuse", "Fuse the pair maps of each target's representatives");
    add_common(fuse, o);
    fuse->add_option("--maps", o.maps, "Pair map directory");
    fuse->add_option("--selection", o.selection, "selection.json");

    auto* eval = app.add_subcommand("eval", "Score fused maps against groundtruth masks");
    add_common(eval, o);
    eval->add_option("--fused", o.fused, "Fused map directory");
    eval->add_option("--groundtruth", o.groundtruth, "Groundtruth directory");
    eval->add_option("--threshold", o.threshold, "Foreground threshold");

    auto* table1 = app.add_subcommand("table1", "Top-k evaluation over a pair mIoU matrix");
    add_common(table1, o);
    table1->add_option("--matrix", o.matrix, "Pair matrix CSV");
    table1->add_option("--top", top, "k")->check(CLI::PositiveNumber);
    table1->add_option("--maps", o.maps, "Pair map directory (k > 1)");
    table1->add_option("--groundtruth", o.groundtruth, "Groundtruth directory (k > 1)");
    table1->add_option("--threshold", o.threshold, "Foreground threshold");

    auto* run = app.add_subcommand("run", "Selection, maps, fusion, evaluation and ablation in one pass");
    add_common(run, o);
    run->add_option("--scenario", o.scenario, "Generate inputs from this scenario first");
    run->add_option("--probs", o.probs, "Probability log CSV");
    run->add_option("--dumps", o.dumps, "Dump directory");
    run->add_option("--groundtruth", o.groundtruth, "Groundtruth directory");
    run->add_option("--mode", o.mode, "random|rank-a|rank-b|cluster")
        ->check(CLI::IsMember({"random", "rank-a", "rank-b", "cluster"}));
    run->add_option("--k", o.k, "Rank of the class picked inside each cluster (1..4)");
    run->add_option("--n", o.num_clusters, "Number of clusters");
    run->add_option("--min-size", o.min_size, "Minimum cluster size");
    run->add_option("--layer-mode", o.layer_mode, "multi|final")->check(CLI::IsMember({"multi", "final"}));
    run->add_option("--threshold", o.threshold, "Foreground threshold");

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = resolve(o);
        camsel::CommandOutcome outcome;
        if (*generate) {
            outcome = camsel::cmd_generate(config);
        } else if (*build_sim) {
            outcome = camsel::cmd_build_sim(config);
        } else if (*cluster) {
            outcome = camsel::cmd_cluster(config);
        } else if (*select) {
            outcome = camsel::cmd_select(config, target);
        } else if (*cam) {
            outcome = camsel::cmd_cam(config);
        } else if (*fuse) {
            outcome = camsel::cmd_fuse(config);
        } else if (*eval) {
            outcome = camsel::cmd_eval(config);
        } else if (*table1) {
            if (!o.out) config.out.clear();
            outcome = camsel::cmd_table1(config, top);
        } else {
            outcome = camsel::cmd_run(config);
        }
        std::cout << outcome.summary << "\n";
        return 0;
    } catch (const camsel::Error& e) {
        nlohmann::json err{{"error", camsel::to_string(e.code())}, {"message", e.what()}};
        if (!e.context().empty()) err["context"] = e.context();
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    }
}
