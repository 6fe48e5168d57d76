#include "camsel/scenario.hpp"

#include <algorithm>
#include <set>

#include "camsel/error.hpp"
#include "camsel/random.hpp"

namespace camsel {

void SyntheticScenario::validate() const {
    const std::size_t n = num_classes();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "scenario needs at least two classes");
    if (height == 0 || width == 0) throw Error(ErrorCode::InvalidArgument, "scenario image size must be positive");
    if (num_layers == 0) throw Error(ErrorCode::InvalidArgument, "scenario needs at least one layer");
    if (images_per_class == 0 || records_per_class == 0)
        throw Error(ErrorCode::InvalidArgument, "scenario needs images and records for every class");
    if (classes.size() != n) throw Error(ErrorCode::LengthMismatch, "one layout per class is required");
    if (self_mass < 0.0 || group_mass < 0.0 || self_mass + group_mass > 1.0 || jitter < 0.0 || jitter >= 1.0)
        throw Error(ErrorCode::InvalidArgument, "scenario probability masses are inconsistent");

    std::vector<int> group_of(n, -1);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t c : groups[g]) {
            if (c >= n) throw Error(ErrorCode::OutOfRange, "group member out of range");
            if (group_of[c] >= 0) throw Error(ErrorCode::InvalidArgument, "class appears in two groups", class_names[c]);
            group_of[c] = static_cast<int>(g);
        }
    }
    if (std::count(group_of.begin(), group_of.end(), -1) != 0)
        throw Error(ErrorCode::InvalidArgument, "groups must cover every class");

    for (std::size_t c = 0; c < n; ++c) {
        const auto& parts = classes[c].parts;
        if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "class has no object parts", class_names[c]);
        std::vector<Rect> all;
        for (const auto& part : parts) {
            if (part.rects.empty()) throw Error(ErrorCode::InvalidArgument, "part has no rectangles", class_names[c]);
            for (std::size_t r : part.against)
                if (r >= n || r == c)
                    throw Error(ErrorCode::OutOfRange, "part lists an invalid comparison class", class_names[c]);
            for (const auto& rect : part.rects) {
                if (rect.y0 >= rect.y1 || rect.x0 >= rect.x1)
                    throw Error(ErrorCode::InvalidArgument, "empty part rectangle", class_names[c]);
                if (rect.y1 + max_shift > height || rect.x1 + max_shift > width)
                    throw Error(ErrorCode::OutOfRange, "part rectangle leaves the image", class_names[c]);
                for (const auto& other : all)
                    if (rect.overlaps(other)) throw Error(ErrorCode::InvalidArgument, "overlapping parts", class_names[c]);
                all.push_back(rect);
            }
        }
    }
}

SyntheticScenario make_complementary_scenario(std::vector<std::string> class_names,
                                              std::vector<std::vector<std::size_t>> groups, std::size_t height,
                                              std::size_t width) {
    SyntheticScenario s;
    s.class_names = std::move(class_names);
    s.groups = std::move(groups);
    s.height = height;
    s.width = width;
    const std::size_t n = s.class_names.size();
    const std::size_t strips = s.groups.size();
    if (strips == 0) throw Error(ErrorCode::InvalidArgument, "need at least one group");

    for (std::size_t c = 0; c < n; ++c) {
        // Object height varies per class; strips split the object width.
        const std::size_t y0 = height / 4;
        const std::size_t y1 = std::max(y0 + 1, height - s.max_shift - (c % 3) * (height / 16));
        const std::size_t x0 = width / 8;
        const std::size_t x1 = width - s.max_shift - width / 8;
        if (x1 <= x0 + strips) throw Error(ErrorCode::InvalidArgument, "image too narrow for one strip per group");
        ClassLayout layout;
        for (std::size_t g = 0; g < strips; ++g) {
            // Uneven strips: each strip is one unit wider than the previous.
            const std::size_t units = strips * (strips + 1) / 2;
            const std::size_t before = g * (g + 1) / 2;
            const std::size_t sx0 = x0 + (x1 - x0) * before / units;
            const std::size_t sx1 = x0 + (x1 - x0) * (before + g + 1) / units;
            ObjectPart part{{Rect{y0, sx0, y1, sx1}}, {}};
            for (std::size_t r : s.groups[g])
                if (r != c) part.against.push_back(r);
            layout.parts.push_back(std::move(part));
        }
        s.classes.push_back(std::move(layout));
    }
    s.validate();
    return s;
}

namespace {

Rect rect_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<std::size_t>>();
    if (v.size() != 4) throw Error(ErrorCode::MalformedJson, "rect must be [y0, x0, y1, x1]");
    return {v[0], v[1], v[2], v[3]};
}

}  // namespace

SyntheticScenario scenario_from_json(const nlohmann::json& j) {
    try {
        const auto names = j.at("class_names").get<std::vector<std::string>>();
        const auto groups = j.at("groups").get<std::vector<std::vector<std::size_t>>>();
        const std::size_t height = j.value("height", std::size_t{32});
        const std::size_t width = j.value("width", std::size_t{32});

        SyntheticScenario s;
        if (j.contains("classes")) {
            s.class_names = names;
            s.groups = groups;
            s.height = height;
            s.width = width;
            for (const auto& cj : j.at("classes")) {
                ClassLayout layout;
                for (const auto& pj : cj.at("parts")) {
                    ObjectPart part;
                    for (const auto& rj : pj.at("rects")) part.rects.push_back(rect_from_json(rj));
                    part.against = pj.at("against").get<std::vector<std::size_t>>();
                    layout.parts.push_back(std::move(part));
                }
                s.classes.push_back(std::move(layout));
            }
        } else {
            s = make_complementary_scenario(names, groups, height, width);
        }
        s.images_per_class = j.value("images_per_class", s.images_per_class);
        s.records_per_class = j.value("records_per_class", s.records_per_class);
        s.num_layers = j.value("num_layers", s.num_layers);
        s.max_shift = j.value("max_shift", s.max_shift);
        s.self_mass = j.value("self_mass", s.self_mass);
        s.group_mass = j.value("group_mass", s.group_mass);
        s.jitter = j.value("jitter", s.jitter);
        s.baseline = j.value("baseline", s.baseline);
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedJson, std::string("bad scenario JSON: ") + e.what());
    }
}

nlohmann::json to_json(const SyntheticScenario& s) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& layout : s.classes) {
        nlohmann::json parts = nlohmann::json::array();
        for (const auto& part : layout.parts) {
            nlohmann::json rects = nlohmann::json::array();
            for (const auto& r : part.rects) rects.push_back({r.y0, r.x0, r.y1, r.x1});
            parts.push_back({{"rects", rects}, {"against", part.against}});
        }
        classes.push_back({{"parts", parts}});
    }
    return {{"class_names", s.class_names},
            {"height", s.height},
            {"width", s.width},
            {"images_per_class", s.images_per_class},
            {"records_per_class", s.records_per_class},
            {"num_layers", s.num_layers},
            {"max_shift", s.max_shift},
            {"groups", s.groups},
            {"self_mass", s.self_mass},
            {"group_mass", s.group_mass},
            {"jitter", s.jitter},
            {"baseline", s.baseline},
            {"classes", classes}};
}

namespace {

std::vector<std::uint8_t> paint(const SyntheticScenario& s, const std::vector<const ObjectPart*>& parts,
                                std::size_t dy, std::size_t dx) {
    std::vector<std::uint8_t> bits(s.height * s.width, 0);
    for (const auto* part : parts)
        for (const auto& r : part->rects)
            for (std::size_t y = r.y0; y < r.y1; ++y)
                for (std::size_t x = r.x0; x < r.x1; ++x) bits[(y + dy) * s.width + (x + dx)] = 1;
    return bits;
}

bool separates(const ObjectPart& part, std::size_t comparison, std::size_t index) {
    if (comparison == kAllClasses) return index == 0;
    return std::find(part.against.begin(), part.against.end(), comparison) != part.against.end();
}

// Zero-mean +/-0.5 alternation over the flat plane; an odd trailing pixel gets 0.
// All terms are exact in float so the spatial mean of (g + wobble) is exactly g.
float wobble(std::size_t i, std::size_t plane) {
    if (plane % 2 == 1 && i == plane - 1) return 0.0f;
    return i % 2 == 0 ? 0.5f : -0.5f;
}

}  // namespace

BinaryMask object_mask(const SyntheticScenario& s, std::size_t cls, std::size_t dy, std::size_t dx) {
    std::vector<const ObjectPart*> parts;
    for (const auto& p : s.classes.at(cls).parts) parts.push_back(&p);
    return BinaryMask(s.height, s.width, paint(s, parts, dy, dx));
}

BinaryMask expected_pair_mask(const SyntheticScenario& s, std::size_t cls, std::size_t comparison, std::size_t dy,
                              std::size_t dx) {
    std::vector<const ObjectPart*> parts;
    const auto& layout = s.classes.at(cls).parts;
    for (std::size_t p = 0; p < layout.size(); ++p)
        if (separates(layout[p], comparison, p)) parts.push_back(&layout[p]);
    return BinaryMask(s.height, s.width, paint(s, parts, dy, dx));
}

PairDump synthesize_pair_dump(const SyntheticScenario& s, const std::string& image_id, std::size_t cls,
                              std::size_t comparison, std::size_t dy, std::size_t dx, std::uint64_t noise_seed) {
    const auto& layout = s.classes.at(cls).parts;
    const std::size_t parts = layout.size();
    const std::size_t channels = parts + 1;  // last channel: background clutter
    const std::size_t plane = s.height * s.width;

    std::vector<std::vector<std::uint8_t>> part_masks;
    std::vector<std::uint8_t> object(plane, 0);
    for (const auto& part : layout) {
        part_masks.push_back(paint(s, {&part}, dy, dx));
        for (std::size_t i = 0; i < plane; ++i) object[i] |= part_masks.back()[i];
    }

    Rng rng(noise_seed);
    PairDump dump{image_id, cls, comparison, {}};
    for (std::size_t layer = 1; layer <= s.num_layers; ++layer) {
        const bool deepest = layer == s.num_layers;
        std::vector<float> features(channels * plane, 0.0f);
        std::vector<float> gradients(channels * plane, 0.0f);
        for (std::size_t c = 0; c < parts; ++c) {
            // Shallow layers respond to the whole object; the deepest layer
            // only to the parts that separate this pair.
            const float weight = !deepest ? 1.0f : (separates(layout[c], comparison, c) ? 1.0f : -0.5f);
            for (std::size_t i = 0; i < plane; ++i) {
                features[c * plane + i] = part_masks[c][i];
                gradients[c * plane + i] = weight + wobble(i, plane);
            }
        }
        const float clutter_weight = deepest ? 0.0f : 0.25f;
        for (std::size_t i = 0; i < plane; ++i) {
            features[parts * plane + i] = object[i] ? 0.0f : static_cast<float>(uniform_unit(rng));
            gradients[parts * plane + i] = clutter_weight + wobble(i, plane);
        }
        dump.layers.push_back({layer, Tensor({channels, s.height, s.width}, std::move(features)),
                               Tensor({channels, s.height, s.width}, std::move(gradients))});
    }
    return dump;
}

std::vector<ProbabilityRecord> synthesize_records(const SyntheticScenario& s, std::uint64_t seed) {
    s.validate();
    const std::size_t n = s.num_classes();
    std::vector<std::size_t> group_of(n);
    for (std::size_t g = 0; g < s.groups.size(); ++g)
        for (std::size_t c : s.groups[g]) group_of[c] = g;

    Rng rng(seed);
    std::vector<ProbabilityRecord> records;
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<std::size_t> mates, others;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == c) continue;
            (group_of[j] == group_of[c] ? mates : others).push_back(j);
        }
        double group_mass = mates.empty() ? 0.0 : s.group_mass;
        double rest = 1.0 - s.self_mass - group_mass;
        if (others.empty()) {
            group_mass += rest;
            rest = 0.0;
        }
        std::vector<double> base(n, 0.0);
        base[c] = s.self_mass;
        for (std::size_t j : mates) base[j] = group_mass / static_cast<double>(mates.size());
        for (std::size_t j : others) base[j] = rest / static_cast<double>(others.size());

        for (std::size_t k = 0; k < s.records_per_class; ++k) {
            std::vector<double> probs(n);
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                probs[j] = base[j] * (1.0 + s.jitter * (2.0 * uniform_unit(rng) - 1.0));
                total += probs[j];
            }
            for (double& p : probs) p /= total;
            char id[64];
            std::snprintf(id, sizeof id, "rec_%03zu_%04zu", c, k);
            records.push_back({id, c, std::move(probs)});
        }
    }
    return records;
}

GeneratedScenario generate_scenario(const SyntheticScenario& s, std::uint64_t seed,
                                    const std::filesystem::path& out_dir) {
    s.validate();
    GeneratedScenario out;
    out.records = synthesize_records(s, seed);
    write_probability_log(out.records, out_dir / "probabilities.csv");

    Rng rng(seed ^ 0x5DEECE66Dull);
    const std::size_t n = s.num_classes();
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t k = 0; k < s.images_per_class; ++k) {
            char id[64];
            std::snprintf(id, sizeof id, "img_%03zu_%03zu", c, k);
            const auto dy = static_cast<std::size_t>(uniform_index(rng, s.max_shift + 1));
            const auto dx = static_cast<std::size_t>(uniform_index(rng, s.max_shift + 1));
            const std::uint64_t noise_seed = rng();
            out.images.push_back({id, c, dy, dx});

            write_mask_pgm(object_mask(s, c, dy, dx),
                           out_dir / "groundtruth" / id / (std::to_string(c) + ".pgm"));
            std::vector<std::size_t> comparisons;
            for (std::size_t r = 0; r < n; ++r)
                if (r != c) comparisons.push_back(r);
            if (s.baseline) comparisons.push_back(kAllClasses);
            for (std::size_t r : comparisons)
                save_pair_dump(out_dir / "dumps", synthesize_pair_dump(s, id, c, r, dy, dx, noise_seed));
        }
    }
    return out;
}

}  // namespace camsel
