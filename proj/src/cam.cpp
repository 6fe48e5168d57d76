#include "camsel/cam.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "camsel/error.hpp"

namespace camsel {

void LayerDump::validate() const {
    if (features.rank() != 3) throw Error(ErrorCode::DimensionMismatch, "layer features must be [C,H,W]");
    if (features.dims() != gradients.dims())
        throw Error(ErrorCode::DimensionMismatch,
                    "layer " + std::to_string(layer_id) + " features and gradients differ in shape");
}

void PairDump::validate() const {
    if (layers.empty()) throw Error(ErrorCode::EmptyInput, "pair dump has no layers", image_id);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].validate();
        if (l > 0 && layers[l].layer_id <= layers[l - 1].layer_id)
            throw Error(ErrorCode::InvalidArgument, "layer ids must be strictly increasing", image_id);
    }
}

std::string to_string(LayerMode m) { return m == LayerMode::Multi ? "multi" : "final"; }

LayerMode layer_mode_from_string(const std::string& s) {
    if (s == "multi") return LayerMode::Multi;
    if (s == "final") return LayerMode::FinalOnly;
    throw Error(ErrorCode::InvalidArgument, "unknown layer mode '" + s + "' (expected multi or final)");
}

ActivationMap normalize_minmax(std::size_t height, std::size_t width, std::span<const double> raw) {
    if (raw.size() != height * width) throw Error(ErrorCode::LengthMismatch, "raw map size does not match dims");
    std::vector<float> out(raw.size(), 0.0f);
    if (raw.empty()) return ActivationMap(height, width, std::move(out));
    for (double v : raw)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "map contains NaN or Inf");
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double range = *hi - *lo;
    if (range > 0.0) {
        for (std::size_t i = 0; i < raw.size(); ++i)
            out[i] = static_cast<float>(std::clamp((raw[i] - *lo) / range, 0.0, 1.0));
    }
    return ActivationMap(height, width, std::move(out));
}

ActivationMap grad_cam_layer(const LayerDump& d) {
    d.validate();
    const std::size_t channels = d.channels();
    const std::size_t plane = d.height() * d.width();
    const auto features = d.features.data();
    const auto gradients = d.gradients.data();

    std::vector<double> raw(plane, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
        double alpha = 0.0;
        for (std::size_t p = 0; p < plane; ++p) alpha += gradients[c * plane + p];
        alpha /= static_cast<double>(plane);
        for (std::size_t p = 0; p < plane; ++p) raw[p] += alpha * features[c * plane + p];
    }
    for (double& v : raw) v = std::max(v, 0.0);
    return normalize_minmax(d.height(), d.width(), raw);
}

ActivationMap fuse_layers(std::span<const ActivationMap> maps, std::size_t height, std::size_t width) {
    if (maps.empty()) throw Error(ErrorCode::EmptyInput, "no layer maps to fuse");
    const std::size_t plane = height * width;
    std::vector<double> sum(plane, 0.0);
    std::vector<float> deepest;
    for (const auto& m : maps) {
        const auto resized = resize_bilinear(m, height, width);
        for (std::size_t p = 0; p < plane; ++p) sum[p] += resized.values()[p];
        if (&m == &maps.back()) deepest.assign(resized.values().begin(), resized.values().end());
    }
    for (std::size_t p = 0; p < plane; ++p) sum[p] *= deepest[p];
    return normalize_minmax(height, width, sum);
}

ActivationMap fuse_classes(std::span<const ActivationMap> maps) {
    if (maps.empty()) throw Error(ErrorCode::EmptyInput, "no class maps to fuse");
    const std::size_t height = maps.front().height();
    const std::size_t width = maps.front().width();
    std::vector<double> mean(height * width, 0.0);
    for (const auto& m : maps) {
        if (m.height() != height || m.width() != width)
            throw Error(ErrorCode::DimensionMismatch, "class maps differ in size");
        for (std::size_t p = 0; p < mean.size(); ++p) mean[p] += m.values()[p];
    }
    for (double& v : mean) v /= static_cast<double>(maps.size());
    return normalize_minmax(height, width, mean);
}

std::pair<std::size_t, std::size_t> fusion_resolution(const PairDump& p) {
    p.validate();
    const LayerDump* best = &p.layers.front();
    for (const auto& l : p.layers)
        if (l.height() * l.width() > best->height() * best->width()) best = &l;
    return {best->height(), best->width()};
}

ActivationMap generate_pair_map(const PairDump& p, std::size_t height, std::size_t width, LayerMode mode) {
    p.validate();
    if (mode == LayerMode::FinalOnly) return resize_bilinear(grad_cam_layer(p.layers.back()), height, width);
    std::vector<ActivationMap> maps;
    maps.reserve(p.layers.size());
    for (const auto& l : p.layers) maps.push_back(grad_cam_layer(l));
    return fuse_layers(maps, height, width);
}

ActivationMap generate_pair_map(const PairDump& p, LayerMode mode) {
    const auto [h, w] = fusion_resolution(p);
    return generate_pair_map(p, h, w, mode);
}

std::string pair_dir_name(std::size_t target, std::size_t comparison) {
    return std::to_string(target) + "_vs_" + (comparison == kAllClasses ? "all" : std::to_string(comparison));
}

namespace {

std::optional<std::size_t> parse_number(std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::optional<std::pair<std::size_t, std::size_t>> parse_pair_dir(const std::string& name) {
    const auto sep = name.find("_vs_");
    if (sep == std::string::npos) return std::nullopt;
    const auto target = parse_number(std::string_view(name).substr(0, sep));
    const auto rest = std::string_view(name).substr(sep + 4);
    if (!target) return std::nullopt;
    if (rest == "all") return std::pair{*target, kAllClasses};
    const auto comparison = parse_number(rest);
    if (!comparison) return std::nullopt;
    return std::pair{*target, *comparison};
}

// layer<k>_features.camt -> k
std::optional<std::size_t> parse_layer_file(const std::string& name) {
    constexpr std::string_view prefix = "layer", suffix = "_features.camt";
    if (name.size() <= prefix.size() + suffix.size() || !name.starts_with(prefix) || !name.ends_with(suffix))
        return std::nullopt;
    return parse_number(std::string_view(name).substr(prefix.size(), name.size() - prefix.size() - suffix.size()));
}

}  // namespace

std::vector<PairKey> list_pair_dumps(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw Error(ErrorCode::MissingInput, "dump directory not found", root.string());
    std::vector<PairKey> keys;
    for (const auto& image : fs::directory_iterator(root)) {
        if (!image.is_directory()) continue;
        for (const auto& pair : fs::directory_iterator(image.path())) {
            if (!pair.is_directory()) continue;
            if (auto parsed = parse_pair_dir(pair.path().filename().string()))
                keys.push_back({image.path().filename().string(), parsed->first, parsed->second});
        }
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

PairDump load_pair_dump(const std::filesystem::path& root, const PairKey& key) {
    namespace fs = std::filesystem;
    const fs::path dir = root / key.image_id / pair_dir_name(key.target, key.comparison);
    if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingInput, "pair dump not found", dir.string());
    std::map<std::size_t, fs::path> layers;
    for (const auto& entry : fs::directory_iterator(dir))
        if (auto k = parse_layer_file(entry.path().filename().string())) layers[*k] = entry.path();
    if (layers.empty()) throw Error(ErrorCode::EmptyInput, "pair dump has no layer files", dir.string());

    PairDump p{key.image_id, key.target, key.comparison, {}};
    for (const auto& [k, features_path] : layers) {
        const fs::path gradients_path = dir / ("layer" + std::to_string(k) + "_gradients.camt");
        if (!fs::exists(gradients_path))
            throw Error(ErrorCode::MissingInput, "gradients file missing", gradients_path.string());
        LayerDump l{k, read_tensor(features_path), read_tensor(gradients_path)};
        try {
            l.validate();
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), features_path.string());
        }
        p.layers.push_back(std::move(l));
    }
    return p;
}

void save_pair_dump(const std::filesystem::path& root, const PairDump& p) {
    p.validate();
    const auto dir = root / p.image_id / pair_dir_name(p.target, p.comparison);
    for (const auto& l : p.layers) {
        const std::string stem = "layer" + std::to_string(l.layer_id);
        write_tensor(l.features, dir / (stem + "_features.camt"));
        write_tensor(l.gradients, dir / (stem + "_gradients.camt"));
    }
}

}  // namespace camsel
