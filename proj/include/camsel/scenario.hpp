#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "camsel/cam.hpp"
#include "camsel/similarity.hpp"
#include "camsel/tensorio.hpp"

namespace camsel {

/// Half-open pixel rectangle [y0,y1) x [x0,x1).
struct Rect {
    std::size_t y0 = 0, x0 = 0, y1 = 0, x1 = 0;

    std::size_t area() const { return (y1 - y0) * (x1 - x0); }
    bool contains(std::size_t y, std::size_t x) const { return y >= y0 && y < y1 && x >= x0 && x < x1; }
    bool overlaps(const Rect& o) const { return y0 < o.y1 && o.y0 < y1 && x0 < o.x1 && o.x0 < x1; }
};

/// A piece of an object that a binary model separates from the listed
/// comparison classes.
struct ObjectPart {
    std::vector<Rect> rects;
    std::vector<std::size_t> against;
};

struct ClassLayout {
    std::vector<ObjectPart> parts;  // union = object region; parts[0] is what the multi-class model sees
};

/// Desk-scale stand-in for a trained model: a planted confusion structure and
/// per-class objects split into complementary parts.
struct SyntheticScenario {
    std::vector<std::string> class_names;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t images_per_class = 2;
    std::size_t records_per_class = 24;
    std::size_t num_layers = 3;
    std::size_t max_shift = 2;  // per-image object offset, in pixels
    std::vector<std::vector<std::size_t>> groups;  // confusion blocks; partition of the classes
    double self_mass = 0.5;
    double group_mass = 0.4;  // shared by the other members of the true class's group
    double jitter = 0.2;      // relative multiplicative noise on each probability
    bool baseline = true;     // also emit "<t>_vs_all" dumps
    std::vector<ClassLayout> classes;

    std::size_t num_classes() const { return class_names.size(); }
    void validate() const;
};

/// Every class gets one vertical strip per group; strip g is separated from
/// the members of group g.
SyntheticScenario make_complementary_scenario(std::vector<std::string> class_names,
                                              std::vector<std::vector<std::size_t>> groups, std::size_t height = 32,
                                              std::size_t width = 32);

SyntheticScenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticScenario& s);

/// Object mask of one class shifted by (dy, dx).
BinaryMask object_mask(const SyntheticScenario& s, std::size_t cls, std::size_t dy, std::size_t dx);

/// Map the pair (cls vs comparison) is built to produce: the union of the
/// parts separated from `comparison` (kAllClasses: parts[0] only).
BinaryMask expected_pair_mask(const SyntheticScenario& s, std::size_t cls, std::size_t comparison, std::size_t dy,
                              std::size_t dx);

/// Features and gradients whose Grad-CAM equals expected_pair_mask.
PairDump synthesize_pair_dump(const SyntheticScenario& s, const std::string& image_id, std::size_t cls,
                              std::size_t comparison, std::size_t dy, std::size_t dx, std::uint64_t noise_seed);

struct GeneratedImage {
    std::string image_id;
    std::size_t cls = 0;
    std::size_t dy = 0, dx = 0;
};

struct GeneratedScenario {
    std::vector<ProbabilityRecord> records;
    std::vector<GeneratedImage> images;
};

/// Writes probabilities.csv, dumps/ and groundtruth/ under out_dir.
GeneratedScenario generate_scenario(const SyntheticScenario& s, std::uint64_t seed,
                                    const std::filesystem::path& out_dir);

/// Deterministic probability records following the planted groups.
std::vector<ProbabilityRecord> synthesize_records(const SyntheticScenario& s, std::uint64_t seed);

}  // namespace camsel
