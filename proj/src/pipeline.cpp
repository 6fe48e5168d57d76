#include "camsel/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>

#include "camsel/csv.hpp"
#include "camsel/error.hpp"
#include "camsel/random.hpp"
#include "camsel/scenario.hpp"
#include "camsel/similarity.hpp"

namespace camsel {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(SelectionMode m) {
    switch (m) {
        case SelectionMode::Random: return "random";
        case SelectionMode::RankA: return "rank-a";
        case SelectionMode::RankB: return "rank-b";
        case SelectionMode::Cluster: return "cluster";
    }
    return "unknown";
}

SelectionMode selection_mode_from_string(const std::string& s) {
    if (s == "random") return SelectionMode::Random;
    if (s == "rank-a") return SelectionMode::RankA;
    if (s == "rank-b") return SelectionMode::RankB;
    if (s == "cluster") return SelectionMode::Cluster;
    throw Error(ErrorCode::InvalidArgument, "unknown selection mode '" + s + "' (random|rank-a|rank-b|cluster)");
}

namespace {

const std::set<std::string> kConfigKeys{
    "class_names", "num_clusters", "min_cluster_size", "cluster_k", "cluster_restarts", "rank_positions",
    "selection_mode", "threshold", "seed", "layer_mode", "probabilities", "similarity", "clusters", "selection",
    "dumps", "maps", "fused", "groundtruth", "matrix", "scenario", "out"};

void check_config(const PipelineConfig& c) {
    if (c.cluster_k < 1 || c.cluster_k > 4) throw Error(ErrorCode::OutOfRange, "cluster_k must be in 1..4");
    if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) throw Error(ErrorCode::OutOfRange, "threshold must be in [0,1]");
    if (c.num_clusters < 2) throw Error(ErrorCode::InvalidArgument, "num_clusters must be at least 2");
    if (c.min_cluster_size < 1) throw Error(ErrorCode::InvalidArgument, "min_cluster_size must be at least 1");
    if (c.cluster_restarts < 1) throw Error(ErrorCode::InvalidArgument, "cluster_restarts must be at least 1");
}

const std::string& require(const std::string& value, const char* key) {
    if (value.empty()) throw Error(ErrorCode::MissingInput, std::string("config value '") + key + "' is required");
    return value;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::MalformedJson, "config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kConfigKeys.contains(key)) throw Error(ErrorCode::MalformedJson, "unknown config key '" + key + "'");
    try {
        PipelineConfig c;
        c.class_names = j.value("class_names", c.class_names);
        c.num_clusters = j.value("num_clusters", c.num_clusters);
        c.min_cluster_size = j.value("min_cluster_size", c.min_cluster_size);
        c.cluster_k = j.value("cluster_k", c.cluster_k);
        c.cluster_restarts = j.value("cluster_restarts", c.cluster_restarts);
        if (j.contains("rank_positions")) c.rank_positions = j.at("rank_positions").get<std::vector<std::size_t>>();
        if (j.contains("selection_mode"))
            c.selection_mode = selection_mode_from_string(j.at("selection_mode").get<std::string>());
        c.threshold = j.value("threshold", c.threshold);
        c.seed = j.value("seed", c.seed);
        if (j.contains("layer_mode")) c.layer_mode = layer_mode_from_string(j.at("layer_mode").get<std::string>());
        c.probabilities = j.value("probabilities", c.probabilities);
        c.similarity = j.value("similarity", c.similarity);
        c.clusters = j.value("clusters", c.clusters);
        c.selection = j.value("selection", c.selection);
        c.dumps = j.value("dumps", c.dumps);
        c.maps = j.value("maps", c.maps);
        c.fused = j.value("fused", c.fused);
        c.groundtruth = j.value("groundtruth", c.groundtruth);
        c.matrix = j.value("matrix", c.matrix);
        c.out = j.value("out", c.out);
        if (j.contains("scenario")) {
            const auto& s = j.at("scenario");
            if (s.is_string()) {
                std::ifstream in(s.get<std::string>());
                if (!in) throw Error(ErrorCode::Io, "cannot open scenario", s.get<std::string>());
                c.scenario = json::parse(in);
            } else {
                c.scenario = s;
            }
        }
        check_config(c);
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedJson, std::string("bad config: ") + e.what());
    }
}

json PipelineConfig::to_json() const {
    json j{{"class_names", class_names},
           {"num_clusters", num_clusters},
           {"min_cluster_size", min_cluster_size},
           {"cluster_k", cluster_k},
           {"cluster_restarts", cluster_restarts},
           {"selection_mode", camsel::to_string(selection_mode)},
           {"threshold", threshold},
           {"seed", seed},
           {"layer_mode", camsel::to_string(layer_mode)}};
    if (rank_positions) j["rank_positions"] = *rank_positions;
    for (const auto& [key, value] :
         {std::pair{"probabilities", &probabilities}, {"similarity", &similarity}, {"clusters", &clusters},
          {"selection", &selection}, {"dumps", &dumps}, {"maps", &maps}, {"fused", &fused},
          {"groundtruth", &groundtruth}, {"matrix", &matrix}})
        if (!value->empty()) j[key] = *value;
    if (scenario) j["scenario"] = *scenario;
    return j;
}

std::vector<std::size_t> PipelineConfig::positions() const {
    if (rank_positions) return *rank_positions;
    return selection_mode == SelectionMode::RankB ? kRankBPositions : kRankAPositions;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config", path.string());
    try {
        return PipelineConfig::from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedJson, e.what(), path.string());
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), e.context().empty() ? path.string() : e.context());
    }
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view text) {
    return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t hash_path(const fs::path& path) {
    if (fs::is_regular_file(path)) return fnv1a64(read_file_bytes(path));
    if (!fs::is_directory(path)) throw Error(ErrorCode::MissingInput, "input not found", path.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path))
        if (e.is_regular_file()) files.push_back(e.path().lexically_relative(path));
    std::sort(files.begin(), files.end());
    std::string digest;
    for (const auto& f : files) digest += f.generic_string() + "\n" + hex64(fnv1a64(read_file_bytes(path / f))) + "\n";
    return fnv1a64(digest);
}

ArtifactWriter::ArtifactWriter(fs::path out_dir) : root_(std::move(out_dir)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (!fs::is_directory(root_)) throw Error(ErrorCode::Io, "cannot create output directory", root_.string());
}

void ArtifactWriter::bytes(const std::string& rel, std::span<const std::uint8_t> content) {
    write_file_bytes(root_ / rel, content);
    outputs_[rel] = {{"path", rel}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}};
}

void ArtifactWriter::text(const std::string& rel, std::string_view content) {
    bytes(rel, std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
}

void ArtifactWriter::json(const std::string& rel, const nlohmann::json& content) { text(rel, content.dump(2) + "\n"); }

void ArtifactWriter::map(const std::string& rel_stem, const ActivationMap& m) {
    bytes(rel_stem + ".camt", encode_tensor(map_to_tensor(m)));
    bytes(rel_stem + ".pgm", encode_map_pgm(m));
}

void ArtifactWriter::record(const std::string& rel) {
    outputs_[rel] = {{"path", rel}, {"fnv1a64", hex64(hash_path(root_ / rel))}};
}

void ArtifactWriter::input(const std::string& label, const fs::path& path) {
    std::string shown = path.generic_string();
    const auto rel = path.lexically_normal().lexically_relative(root_.lexically_normal());
    if (!rel.empty() && *rel.begin() != "..") shown = "$out/" + rel.generic_string();
    inputs_.push_back({{"name", label}, {"path", shown}, {"fnv1a64", hex64(hash_path(path))}});
}

void ArtifactWriter::note(const std::string& key, nlohmann::json value) { notes_[key] = std::move(value); }

void ArtifactWriter::finish(const std::string& command, const PipelineConfig& config) {
    const auto cfg = config.to_json();
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& [_, entry] : outputs_) outputs.push_back(entry);
    nlohmann::json manifest{{"command", command},
                            {"config", cfg},
                            {"config_hash", hex64(fnv1a64(cfg.dump()))},
                            {"inputs", inputs_},
                            {"outputs", outputs}};
    if (!notes_.empty()) manifest["notes"] = notes_;
    csv::write_text(root_ / "manifest.json", manifest.dump(2) + "\n");
}

std::string sample_id(const std::string& image_id, std::size_t target) {
    return image_id + "/" + std::to_string(target);
}

namespace {

std::vector<std::string> resolve_names(const PipelineConfig& config, std::size_t n) {
    if (config.class_names.empty()) return default_class_names(n);
    if (config.class_names.size() != n)
        throw Error(ErrorCode::LengthMismatch, "config lists " + std::to_string(config.class_names.size()) +
                                                   " class names but the data has " + std::to_string(n) + " classes");
    return config.class_names;
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::optional<std::size_t> parse_size(std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

}  // namespace

PairMaps compute_pair_maps(const fs::path& dumps, LayerMode mode) {
    PairMaps out;
    for (const auto& key : list_pair_dumps(dumps)) {
        const auto id = sample_id(key.image_id, key.target);
        auto m = generate_pair_map(load_pair_dump(dumps, key), mode);
        out.class_of[id] = key.target;
        if (key.comparison == kAllClasses) {
            out.baseline.insert_or_assign(id, std::move(m));
        } else {
            out.maps[id].insert_or_assign(key.comparison, std::move(m));
        }
    }
    if (out.class_of.empty()) throw Error(ErrorCode::EmptyInput, "no pair dumps found", dumps.string());
    return out;
}

PairMaps load_pair_maps(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingInput, "map directory not found", dir.string());
    PairMaps out;
    for (const auto& image : fs::directory_iterator(dir)) {
        if (!image.is_directory()) continue;
        for (const auto& entry : fs::directory_iterator(image.path())) {
            if (entry.path().extension() != ".camt") continue;
            const auto stem = entry.path().stem().string();
            const auto sep = stem.find("_vs_");
            if (sep == std::string::npos) continue;
            const auto target = parse_size(std::string_view(stem).substr(0, sep));
            const auto rest = std::string_view(stem).substr(sep + 4);
            if (!target) continue;
            const auto id = sample_id(image.path().filename().string(), *target);
            auto m = tensor_to_map(read_tensor(entry.path()));
            out.class_of[id] = *target;
            if (rest == "all") {
                out.baseline.insert_or_assign(id, std::move(m));
            } else if (auto comparison = parse_size(rest)) {
                out.maps[id].insert_or_assign(*comparison, std::move(m));
            }
        }
    }
    if (out.class_of.empty()) throw Error(ErrorCode::EmptyInput, "no pair maps found", dir.string());
    return out;
}

std::map<std::string, BinaryMask> load_groundtruth(const fs::path& dir,
                                                   const std::map<std::string, std::size_t>& class_of) {
    std::map<std::string, BinaryMask> gts;
    for (const auto& [id, target] : class_of) {
        const auto slash = id.rfind('/');
        const fs::path path = dir / id.substr(0, slash) / (std::to_string(target) + ".pgm");
        if (!fs::exists(path)) throw Error(ErrorCode::MissingInput, "missing groundtruth mask", path.string());
        gts.emplace(id, read_mask_pgm(path));
    }
    return gts;
}

std::vector<RepresentativeSet> select_all(const PipelineConfig& config, SelectionMode mode,
                                          const SimilarityMatrix& b, const Clustering* clustering) {
    std::vector<RepresentativeSet> sets;
    const std::size_t n = b.size();
    for (std::size_t t = 0; t < n; ++t) {
        switch (mode) {
            case SelectionMode::Random:
                sets.push_back(select_random(n, t, config.num_clusters, derive_seed(config.seed, t)));
                break;
            case SelectionMode::RankA:
            case SelectionMode::RankB: {
                std::vector<std::size_t> positions = config.rank_positions.value_or(
                    mode == SelectionMode::RankB ? kRankBPositions : kRankAPositions);
                sets.push_back(select_by_rank(rank_classes(b, t), positions));
                break;
            }
            case SelectionMode::Cluster:
                if (!clustering) throw Error(ErrorCode::MissingInput, "cluster selection needs a clustering");
                sets.push_back(select_from_clusters(*clustering, b, t, config.cluster_k));
                break;
        }
    }
    return sets;
}

std::map<std::string, ActivationMap> fuse_selected(const PairMaps& pair_maps,
                                                   const std::vector<RepresentativeSet>& sets) {
    std::map<std::size_t, const RepresentativeSet*> by_target;
    for (const auto& s : sets) by_target[s.target] = &s;
    std::map<std::string, ActivationMap> fused;
    for (const auto& [id, by_comparison] : pair_maps.maps) {
        const std::size_t target = pair_maps.class_of.at(id);
        auto it = by_target.find(target);
        if (it == by_target.end()) continue;
        std::vector<ActivationMap> selected;
        for (std::size_t r : it->second->members) {
            auto m = by_comparison.find(r);
            if (m == by_comparison.end())
                throw Error(ErrorCode::MissingInput, "no pair map against class " + std::to_string(r), id);
            selected.push_back(m->second);
        }
        fused.emplace(id, fuse_classes(selected));
    }
    return fused;
}

namespace {

SimilarityMatrix load_similarity(const PipelineConfig& config) {
    auto b = read_similarity_csv(require(config.similarity, "similarity"));
    if (!config.class_names.empty() && config.class_names != b.class_names())
        throw Error(ErrorCode::InvalidArgument, "class names differ between config and similarity CSV",
                    config.similarity);
    return b;
}

ClusterResult run_clustering(const PipelineConfig& config, const SimilarityMatrix& b) {
    ClusterOptions options;
    options.num_clusters = config.num_clusters;
    options.min_size = config.min_cluster_size;
    options.seed = config.seed;
    options.restarts = config.cluster_restarts;
    return cluster_classes(symmetrize(b), options);
}

json selection_json(SelectionMode mode, const std::vector<RepresentativeSet>& sets, const SimilarityMatrix& b) {
    json arr = json::array();
    for (const auto& s : sets) {
        auto j = to_json(s);
        j["target_name"] = b.class_names()[s.target];
        std::vector<std::string> names;
        for (std::size_t m : s.members) names.push_back(b.class_names()[m]);
        j["member_names"] = names;
        arr.push_back(j);
    }
    return {{"mode", to_string(mode)}, {"sets", arr}};
}

std::vector<RepresentativeSet> read_selection(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open selection", path.string());
    try {
        const auto j = json::parse(in);
        std::vector<RepresentativeSet> sets;
        for (const auto& s : j.at("sets")) sets.push_back(representative_set_from_json(s));
        return sets;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedJson, e.what(), path.string());
    }
}

std::map<std::string, ActivationMap> load_fused_maps(const fs::path& dir, std::map<std::string, std::size_t>& class_of) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingInput, "fused map directory not found", dir.string());
    std::map<std::string, ActivationMap> maps;
    for (const auto& image : fs::directory_iterator(dir)) {
        if (!image.is_directory()) continue;
        for (const auto& entry : fs::directory_iterator(image.path())) {
            if (entry.path().extension() != ".camt") continue;
            const auto target = parse_size(entry.path().stem().string());
            if (!target) continue;
            const auto id = sample_id(image.path().filename().string(), *target);
            maps.emplace(id, tensor_to_map(read_tensor(entry.path())));
            class_of[id] = *target;
        }
    }
    if (maps.empty()) throw Error(ErrorCode::EmptyInput, "no fused maps found", dir.string());
    return maps;
}

std::size_t class_count(const PipelineConfig& config, const std::map<std::string, std::size_t>& class_of) {
    if (!config.class_names.empty()) return config.class_names.size();
    std::size_t n = 0;
    for (const auto& [_, c] : class_of) n = std::max(n, c + 1);
    return n;
}

void write_report(ArtifactWriter& w, const std::string& stem, const EvalReport& r) {
    w.text(stem + ".csv", report_csv_text(r));
    w.json(stem + ".json", to_json(r));
}

}  // namespace

CommandOutcome cmd_generate(const PipelineConfig& config) {
    if (!config.scenario) throw Error(ErrorCode::MissingInput, "config value 'scenario' is required");
    const auto scenario = scenario_from_json(*config.scenario);
    ArtifactWriter w(config.out);
    const auto generated = generate_scenario(scenario, config.seed, w.root());
    w.json("scenario.json", to_json(scenario));
    for (const char* rel : {"probabilities.csv", "dumps", "groundtruth"}) w.record(rel);
    w.finish("generate", config);
    return {"generate: classes=" + std::to_string(scenario.num_classes()) +
            " images=" + std::to_string(generated.images.size()) +
            " records=" + std::to_string(generated.records.size()) + " out=" + w.root().generic_string()};
}

CommandOutcome cmd_build_sim(const PipelineConfig& config) {
    const fs::path path = require(config.probabilities, "probabilities");
    std::size_t n = 0;
    const auto records = read_probability_log(path, &n);
    SimilarityBuild built = [&] {
        try {
            return build_similarity(records, n, resolve_names(config, n));
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), e.context().empty() ? path.string() : path.string() + ": " + e.context());
        }
    }();
    ArtifactWriter w(config.out);
    w.input("probabilities", path);
    w.text("similarity.csv", similarity_csv_text(built.matrix));
    if (!built.warnings.empty()) w.note("warnings", built.warnings);
    w.finish("build-sim", config);
    return {"build-sim: n=" + std::to_string(n) + " records=" + std::to_string(records.size()) +
            " warnings=" + std::to_string(built.warnings.size())};
}

CommandOutcome cmd_cluster(const PipelineConfig& config) {
    const auto b = load_similarity(config);
    const auto result = run_clustering(config, b);
    ArtifactWriter w(config.out);
    w.input("similarity", config.similarity);
    w.json("clusters.json", to_json(result.clustering, config.seed, b.class_names()));
    w.note("clustering", {{"passes", result.passes}, {"restart", result.restart},
                          {"converged", result.converged}, {"objective", result.objective}});
    w.finish("cluster", config);
    std::string sizes;
    for (std::size_t s : result.clustering.sizes()) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
    return {"cluster: N=" + std::to_string(config.num_clusters) + " sizes=[" + sizes + "]" +
            " converged=" + (result.converged ? "true" : "false")};
}

CommandOutcome cmd_select(const PipelineConfig& config, std::optional<std::size_t> target) {
    const auto b = load_similarity(config);
    ArtifactWriter w(config.out);
    w.input("similarity", config.similarity);
    std::optional<Clustering> clustering;
    if (config.selection_mode == SelectionMode::Cluster) {
        if (!config.clusters.empty()) {
            std::ifstream in(config.clusters);
            if (!in) throw Error(ErrorCode::Io, "cannot open clusters", config.clusters);
            try {
                clustering = clustering_from_json(json::parse(in));
            } catch (const json::exception& e) {
                throw Error(ErrorCode::MalformedJson, e.what(), config.clusters);
            }
            w.input("clusters", config.clusters);
        } else {
            clustering = run_clustering(config, b).clustering;
            w.json("clusters.json", to_json(*clustering, config.seed, b.class_names()));
        }
    }
    auto sets = select_all(config, config.selection_mode, b, clustering ? &*clustering : nullptr);
    if (target) {
        if (*target >= b.size()) throw Error(ErrorCode::OutOfRange, "target class out of range");
        sets = {sets[*target]};
    }
    w.json("selection.json", selection_json(config.selection_mode, sets, b));
    w.finish("select", config);
    return {"select: mode=" + to_string(config.selection_mode) + " targets=" + std::to_string(sets.size())};
}

CommandOutcome cmd_cam(const PipelineConfig& config) {
    const fs::path dumps = require(config.dumps, "dumps");
    const auto pairs = compute_pair_maps(dumps, config.layer_mode);
    ArtifactWriter w(config.out);
    w.input("dumps", dumps);
    std::size_t count = 0;
    for (const auto& [id, by_comparison] : pairs.maps) {
        const auto image = id.substr(0, id.rfind('/'));
        const std::size_t target = pairs.class_of.at(id);
        for (const auto& [r, m] : by_comparison) {
            w.map("maps/" + image + "/" + pair_dir_name(target, r), m);
            ++count;
        }
    }
    for (const auto& [id, m] : pairs.baseline) {
        w.map("maps/" + id.substr(0, id.rfind('/')) + "/" + pair_dir_name(pairs.class_of.at(id), kAllClasses), m);
        ++count;
    }
    w.finish("cam", config);
    return {"cam: maps=" + std::to_string(count) + " layer_mode=" + to_string(config.layer_mode)};
}

CommandOutcome cmd_fuse(const PipelineConfig& config) {
    const fs::path maps_dir = require(config.maps, "maps");
    const fs::path selection_path = require(config.selection, "selection");
    const auto pairs = load_pair_maps(maps_dir);
    const auto sets = read_selection(selection_path);
    const auto fused = fuse_selected(pairs, sets);
    ArtifactWriter w(config.out);
    w.input("maps", maps_dir);
    w.input("selection", selection_path);
    for (const auto& [id, m] : fused) w.map("fused/" + id, m);
    w.finish("fuse", config);
    return {"fuse: samples=" + std::to_string(fused.size())};
}

CommandOutcome cmd_eval(const PipelineConfig& config) {
    const fs::path fused_dir = require(config.fused, "fused");
    const fs::path gt_dir = require(config.groundtruth, "groundtruth");
    std::map<std::string, std::size_t> class_of;
    const auto maps = load_fused_maps(fused_dir, class_of);
    const auto gts = load_groundtruth(gt_dir, class_of);
    const std::size_t n = class_count(config, class_of);
    const auto names = resolve_names(config, n);
    const auto report = miou_per_class(maps, gts, class_of, names, config.threshold);
    ArtifactWriter w(config.out);
    w.input("fused", fused_dir);
    w.input("groundtruth", gt_dir);
    write_report(w, "report", report);
    w.finish("eval", config);
    return {"eval: avg=" + fixed4(report.average) + " classes=" + std::to_string(report.per_class.size()) +
            " threshold=" + csv::format_double(config.threshold)};
}

CommandOutcome cmd_table1(const PipelineConfig& config, std::size_t top) {
    const fs::path matrix_path = require(config.matrix, "matrix");
    const auto file = read_pair_matrix_csv(matrix_path);
    const auto& pm = file.matrix;
    EvalReport report;
    if (top == 1) {
        report = top1_report(pm, config.threshold);
    } else {
        const auto pairs = load_pair_maps(require(config.maps, "maps"));
        const auto gts = load_groundtruth(require(config.groundtruth, "groundtruth"), pairs.class_of);
        report = topk_fused_eval(top, pm, pairs.maps, gts, pairs.class_of, config.threshold);
    }
    std::string line = "table1: top=" + std::to_string(top) + " avg=" + fixed4(report.average) +
                       " classes=" + std::to_string(report.per_class.size());
    const std::string label = "Top" + std::to_string(top);
    if (const auto* ref = file.find(label); ref && ref->average) line += " reference=" + fixed4(*ref->average);

    if (!config.out.empty()) {
        ArtifactWriter w(config.out);
        w.input("matrix", matrix_path);
        write_report(w, "table1_top" + std::to_string(top), report);
        w.finish("table1", config);
    }
    return {line};
}

CommandOutcome cmd_run(const PipelineConfig& original) {
    PipelineConfig config = original;
    ArtifactWriter w(config.out);

    if (config.scenario) {
        const auto scenario = scenario_from_json(*config.scenario);
        const fs::path inputs = w.root() / "inputs";
        generate_scenario(scenario, config.seed, inputs);
        w.json("inputs/scenario.json", to_json(scenario));
        for (const char* rel : {"inputs/probabilities.csv", "inputs/dumps", "inputs/groundtruth"}) w.record(rel);
        config.probabilities = (inputs / "probabilities.csv").string();
        config.dumps = (inputs / "dumps").string();
        config.groundtruth = (inputs / "groundtruth").string();
        if (config.class_names.empty()) config.class_names = scenario.class_names;
    }

    // S: similarity, clustering, selection
    const fs::path probs_path = require(config.probabilities, "probabilities");
    std::size_t n = 0;
    const auto records = read_probability_log(probs_path, &n);
    const auto built = build_similarity(records, n, resolve_names(config, n));
    const auto& b = built.matrix;
    w.input("probabilities", probs_path);
    w.text("similarity.csv", similarity_csv_text(b));
    if (!built.warnings.empty()) w.note("warnings", built.warnings);

    std::optional<ClusterResult> clustering;
    if (config.num_clusters * config.min_cluster_size <= n) {
        clustering = run_clustering(config, b);
        w.json("clusters.json", to_json(clustering->clustering, config.seed, b.class_names()));
    } else if (config.selection_mode == SelectionMode::Cluster) {
        throw Error(ErrorCode::Infeasible, "cannot form " + std::to_string(config.num_clusters) +
                                               " clusters of at least " + std::to_string(config.min_cluster_size) +
                                               " from " + std::to_string(n) + " classes");
    }
    const Clustering* cl = clustering ? &clustering->clustering : nullptr;
    const auto sets = select_all(config, config.selection_mode, b, cl);
    w.json("selection.json", selection_json(config.selection_mode, sets, b));

    // A: per-pair maps in both layer modes
    const fs::path dumps = require(config.dumps, "dumps");
    w.input("dumps", dumps);
    const PairMaps multi = compute_pair_maps(dumps, LayerMode::Multi);
    const PairMaps final_only = compute_pair_maps(dumps, LayerMode::FinalOnly);
    const PairMaps& chosen = config.layer_mode == LayerMode::Multi ? multi : final_only;

    const fs::path gt_dir = require(config.groundtruth, "groundtruth");
    w.input("groundtruth", gt_dir);
    const auto gts = load_groundtruth(gt_dir, chosen.class_of);

    const auto pm = pair_matrix_from_maps(chosen.maps, gts, chosen.class_of, b.class_names(), config.threshold);
    w.text("pair_matrix.csv", pair_matrix_csv_text(pm));

    // F: fuse the selected pair maps and score
    const auto fused = fuse_selected(chosen, sets);
    for (const auto& [id, m] : fused) w.map("fused/" + id, m);
    const auto report = miou_per_class(fused, gts, chosen.class_of, b.class_names(), config.threshold);
    write_report(w, "report", report);

    // Fused vs single-pair comparison per class
    json per_class = json::array();
    bool beats_all = true;
    double best_single_avg = 0.0;
    std::size_t scored = 0;
    for (const auto& s : report.per_class) {
        const auto c = static_cast<std::size_t>(
            std::find(b.class_names().begin(), b.class_names().end(), s.name) - b.class_names().begin());
        std::optional<double> best;
        for (std::size_t r = 0; r < n; ++r)
            if (auto v = pm.at(r, c); v && (!best || *v > *best)) best = v;
        json row{{"class", s.name}, {"fused", s.miou}};
        if (best) {
            row["best_single_pair"] = *best;
            beats_all = beats_all && s.miou > *best;
            best_single_avg += *best;
            ++scored;
        }
        per_class.push_back(row);
    }
    if (scored) best_single_avg /= static_cast<double>(scored);

    // Ablation rows
    std::string ablation = "mode,average,status\n";
    auto add_row = [&](const std::string& label, auto&& compute) {
        try {
            const double avg = compute();
            ablation += label + "," + csv::format_double(avg) + ",ok\n";
        } catch (const Error& e) {
            ablation += label + ",,skipped (" + std::string(to_string(e.code())) + ")\n";
        }
    };
    auto fused_average = [&](SelectionMode mode, const PairMaps& maps) {
        const auto mode_sets = select_all(config, mode, b, cl);
        return miou_per_class(fuse_selected(maps, mode_sets), gts, maps.class_of, b.class_names(), config.threshold)
            .average;
    };
    add_row("Baseline", [&] {
        if (final_only.baseline.empty()) throw Error(ErrorCode::MissingInput, "no baseline dumps");
        return miou_per_class(final_only.baseline, gts, final_only.class_of, b.class_names(), config.threshold)
            .average;
    });
    add_row("Random+F", [&] { return fused_average(SelectionMode::Random, final_only); });
    add_row("Rank-a+F", [&] { return fused_average(SelectionMode::RankA, final_only); });
    add_row("Rank-a+A+F", [&] { return fused_average(SelectionMode::RankA, multi); });
    const std::string sk = "S-" + std::to_string(config.cluster_k);
    add_row(sk + "+F", [&] { return fused_average(SelectionMode::Cluster, final_only); });
    add_row(sk + "+A+F", [&] { return fused_average(SelectionMode::Cluster, multi); });
    w.text("ablation.csv", ablation);

    w.json("summary.json", {{"selection_mode", to_string(config.selection_mode)},
                            {"layer_mode", to_string(config.layer_mode)},
                            {"fused_average", report.average},
                            {"best_single_pair_average", best_single_avg},
                            {"fused_beats_every_single_pair", beats_all},
                            {"per_class", per_class}});
    if (clustering)
        w.note("clustering", {{"passes", clustering->passes}, {"restart", clustering->restart},
                              {"converged", clustering->converged}, {"objective", clustering->objective}});
    w.finish("run", original);
    return {"run: mode=" + to_string(config.selection_mode) + " avg=" + fixed4(report.average) +
            " best_single=" + fixed4(best_single_avg) + " fused_beats_every_pair=" + (beats_all ? "true" : "false")};
}

}  // namespace camsel
