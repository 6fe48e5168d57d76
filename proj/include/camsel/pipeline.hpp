#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "camsel/cam.hpp"
#include "camsel/evaluate.hpp"
#include "camsel/selection.hpp"

namespace camsel {

enum class SelectionMode { Random, RankA, RankB, Cluster };

std::string to_string(SelectionMode m);
SelectionMode selection_mode_from_string(const std::string& s);

/// Everything a pipeline command needs. Defaults follow the published setup:
/// four clusters of at least four classes, threshold 0.15.
struct PipelineConfig {
    std::vector<std::string> class_names;
    std::size_t num_clusters = 4;
    std::size_t min_cluster_size = 4;
    std::size_t cluster_k = 1;
    std::size_t cluster_restarts = 8;
    std::optional<std::vector<std::size_t>> rank_positions;  // overrides the rank-a/rank-b preset
    SelectionMode selection_mode = SelectionMode::Cluster;
    double threshold = kDefaultThreshold;
    std::uint64_t seed = 0;
    LayerMode layer_mode = LayerMode::Multi;

    // Stage inputs; each is required only by the stages that read it.
    std::string probabilities;
    std::string similarity;
    std::string clusters;
    std::string selection;
    std::string dumps;
    std::string maps;   // pair maps: <image_id>/<target>_vs_<comparison>.camt
    std::string fused;  // fused maps: <image_id>/<target>.camt
    std::string groundtruth;
    std::string matrix;
    std::optional<nlohmann::json> scenario;  // run: generate these inputs first

    std::string out = "out";

    static PipelineConfig from_json(const nlohmann::json& j);
    /// Excludes `out`, so relocating the output does not change the hash.
    nlohmann::json to_json() const;
    std::vector<std::size_t> positions() const;  // effective rank positions
};

PipelineConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t v);

/// Writes artifacts under an output directory and records them for the
/// manifest.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path out_dir);

    const std::filesystem::path& root() const noexcept { return root_; }
    void text(const std::string& rel, std::string_view content);
    void bytes(const std::string& rel, std::span<const std::uint8_t> content);
    void json(const std::string& rel, const nlohmann::json& content);
    void map(const std::string& rel_stem, const ActivationMap& m);  // .camt and .pgm
    /// Lists an already-written file or directory under root as an output.
    void record(const std::string& rel);
    void input(const std::string& label, const std::filesystem::path& path);
    void note(const std::string& key, nlohmann::json value);

    /// Writes manifest.json: command, config hash, inputs, outputs.
    void finish(const std::string& command, const PipelineConfig& config);

private:
    std::filesystem::path root_;
    nlohmann::json inputs_ = nlohmann::json::array();
    std::map<std::string, nlohmann::json> outputs_;
    nlohmann::json notes_ = nlohmann::json::object();
};

/// Hash of a file, or of every file under a directory (sorted relative paths
/// and contents).
std::uint64_t hash_path(const std::filesystem::path& path);

/// "<image_id>/<target>" -- the unit scored against one groundtruth mask.
std::string sample_id(const std::string& image_id, std::size_t target);

struct PairMaps {
    PairMapSet maps;                                       // sample -> comparison -> map
    std::map<std::string, ActivationMap> baseline;         // sample -> "vs all" map
    std::map<std::string, std::size_t> class_of;           // sample -> target class
};

PairMaps compute_pair_maps(const std::filesystem::path& dumps, LayerMode mode);

/// Reads <dir>/<image_id>/<target>_vs_<comparison>.camt maps.
PairMaps load_pair_maps(const std::filesystem::path& dir);

/// groundtruth/<image_id>/<target>.pgm for every sample in class_of.
std::map<std::string, BinaryMask> load_groundtruth(const std::filesystem::path& dir,
                                                   const std::map<std::string, std::size_t>& class_of);

std::vector<RepresentativeSet> select_all(const PipelineConfig& config, SelectionMode mode,
                                          const SimilarityMatrix& b, const Clustering* clustering);

/// Per sample: fuse the pair maps of the target's representative set.
std::map<std::string, ActivationMap> fuse_selected(const PairMaps& pair_maps,
                                                   const std::vector<RepresentativeSet>& sets);

struct CommandOutcome {
    std::string summary;  // one line for stdout
};

CommandOutcome cmd_generate(const PipelineConfig& config);
CommandOutcome cmd_build_sim(const PipelineConfig& config);
CommandOutcome cmd_cluster(const PipelineConfig& config);
CommandOutcome cmd_select(const PipelineConfig& config, std::optional<std::size_t> target = std::nullopt);
CommandOutcome cmd_cam(const PipelineConfig& config);
CommandOutcome cmd_fuse(const PipelineConfig& config);
CommandOutcome cmd_eval(const PipelineConfig& config);
CommandOutcome cmd_table1(const PipelineConfig& config, std::size_t top);
CommandOutcome cmd_run(const PipelineConfig& config);

}  // namespace camsel
