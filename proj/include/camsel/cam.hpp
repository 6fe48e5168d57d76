#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camsel/tensorio.hpp"

namespace camsel {

/// Feature and gradient tensors, both [C,H,W], tapped at one network layer.
struct LayerDump {
    std::size_t layer_id = 1;  // 1 = earliest
    Tensor features;
    Tensor gradients;

    void validate() const;
    std::size_t channels() const { return features.dims()[0]; }
    std::size_t height() const { return features.dims()[1]; }
    std::size_t width() const { return features.dims()[2]; }
};

/// All tapped layers for one image under the binary model (target vs comparison).
struct PairDump {
    std::string image_id;
    std::size_t target = 0;
    std::size_t comparison = 0;
    std::vector<LayerDump> layers;  // strictly increasing layer_id

    void validate() const;
};

enum class LayerMode { Multi, FinalOnly };

std::string to_string(LayerMode m);
LayerMode layer_mode_from_string(const std::string& s);

/// Min-max rescale to [0,1]; a constant input yields the all-zero map.
ActivationMap normalize_minmax(std::size_t height, std::size_t width, std::span<const double> raw);

/// Channel weights are spatially averaged gradients; the map is the
/// rectified weighted channel sum, min-max normalized.
ActivationMap grad_cam_layer(const LayerDump& d);

/// Resize every map to height x width, sum them, multiply the sum by the
/// last (deepest) map elementwise and normalize.
ActivationMap fuse_layers(std::span<const ActivationMap> maps, std::size_t height, std::size_t width);

/// Elementwise mean of same-sized maps, min-max normalized.
ActivationMap fuse_classes(std::span<const ActivationMap> maps);

/// Largest layer resolution (ties: earliest layer).
std::pair<std::size_t, std::size_t> fusion_resolution(const PairDump& p);

ActivationMap generate_pair_map(const PairDump& p, std::size_t height, std::size_t width,
                                LayerMode mode = LayerMode::Multi);
ActivationMap generate_pair_map(const PairDump& p, LayerMode mode = LayerMode::Multi);

// On-disk layout, relative to a dump root:
//   <image_id>/<target>_vs_<comparison>/layer<k>_features.camt
//   <image_id>/<target>_vs_<comparison>/layer<k>_gradients.camt
// <comparison> is a class index, or "all" for the multi-class baseline model.
inline constexpr std::size_t kAllClasses = static_cast<std::size_t>(-1);

std::string pair_dir_name(std::size_t target, std::size_t comparison);

struct PairKey {
    std::string image_id;
    std::size_t target = 0;
    std::size_t comparison = 0;

    auto operator<=>(const PairKey&) const = default;
};

std::vector<PairKey> list_pair_dumps(const std::filesystem::path& root);
PairDump load_pair_dump(const std::filesystem::path& root, const PairKey& key);
void save_pair_dump(const std::filesystem::path& root, const PairDump& p);

}  // namespace camsel
