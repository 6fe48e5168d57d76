#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "camsel/cam.hpp"
#include "camsel/error.hpp"
#include "camsel/evaluate.hpp"
#include "camsel/pipeline.hpp"
#include "camsel/selection.hpp"
#include "camsel/similarity.hpp"
#include "camsel/tensorio.hpp"

namespace py = pybind11;
using namespace camsel;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
    std::vector<std::size_t> dims(a.shape(), a.shape() + a.ndim());
    return Tensor(std::move(dims), std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray from_tensor(const Tensor& t) {
    FloatArray out(std::vector<py::ssize_t>(t.dims().begin(), t.dims().end()));
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

ActivationMap to_map(const FloatArray& a) {
    if (a.ndim() != 2) throw Error(ErrorCode::DimensionMismatch, "map must be a 2-D array");
    return ActivationMap(a.shape(0), a.shape(1), std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray from_map(const ActivationMap& m) {
    FloatArray out({m.height(), m.width()});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

BinaryMask to_mask(const py::array& a) {
    auto b = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>::ensure(a.attr("astype")("bool"));
    if (b.ndim() != 2) throw Error(ErrorCode::DimensionMismatch, "mask must be a 2-D array");
    return BinaryMask(b.shape(0), b.shape(1), std::vector<std::uint8_t>(b.data(), b.data() + b.size()));
}

py::array_t<bool> from_mask(const BinaryMask& m) {
    py::array_t<bool> out({m.height(), m.width()});
    auto* dst = out.mutable_data();
    for (std::size_t i = 0; i < m.bits().size(); ++i) dst[i] = m.bits()[i] != 0;
    return out;
}

SimilarityMatrix to_similarity(const DoubleArray& a, std::vector<std::string> names) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw Error(ErrorCode::DimensionMismatch, "B must be square");
    return SimilarityMatrix(a.shape(0), std::vector<double>(a.data(), a.data() + a.size()), std::move(names));
}

DoubleArray from_similarity(const SimilarityMatrix& b) {
    DoubleArray out({b.size(), b.size()});
    std::copy(b.values().begin(), b.values().end(), out.mutable_data());
    return out;
}

LayerDump to_layer(std::size_t id, const FloatArray& features, const FloatArray& gradients) {
    LayerDump d{id, to_tensor(features), to_tensor(gradients)};
    d.validate();
    return d;
}

py::dict set_to_dict(const RepresentativeSet& s) {
    py::dict d;
    d["target"] = s.target;
    d["members"] = s.members;
    d["strategy"] = to_string(s.strategy);
    return d;
}

}  // namespace

PYBIND11_MODULE(_camsel, m) {
    m.doc() = "Representative-class selection and multi-layer CAM fusion.";

    static py::exception<Error> camsel_error(m, "CamselError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            std::string msg = std::string(to_string(e.code())) + ": " + e.what();
            if (!e.context().empty()) msg += " (" + e.context() + ")";
            py::set_error(camsel_error, msg.c_str());
        }
    });

    m.attr("DEFAULT_THRESHOLD") = kDefaultThreshold;
    m.attr("RANK_A_POSITIONS") = kRankAPositions;
    m.attr("RANK_B_POSITIONS") = kRankBPositions;

    // tensors
    m.def("encode_tensor", [](const FloatArray& a) {
        auto bytes = encode_tensor(to_tensor(a));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    });
    m.def("decode_tensor", [](const py::bytes& b) {
        const std::string s = b;
        return from_tensor(decode_tensor(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())));
    });
    m.def("read_tensor", [](const std::filesystem::path& p) { return from_tensor(read_tensor(p)); });
    m.def("write_tensor", [](const FloatArray& a, const std::filesystem::path& p) { write_tensor(to_tensor(a), p); });
    m.def("read_mask_pgm", [](const std::filesystem::path& p) { return from_mask(read_mask_pgm(p)); });
    m.def("write_mask_pgm", [](const py::array& a, const std::filesystem::path& p) { write_mask_pgm(to_mask(a), p); });
    m.def("resize_bilinear", [](const FloatArray& a, std::size_t h, std::size_t w) {
        return from_map(resize_bilinear(to_map(a), h, w));
    });

    // similarity and selection
    m.def(
        "build_similarity",
        [](const DoubleArray& probs, const std::vector<std::size_t>& labels) {
            if (probs.ndim() != 2) throw Error(ErrorCode::DimensionMismatch, "probs must be [records, classes]");
            const auto rows = static_cast<std::size_t>(probs.shape(0));
            const auto n = static_cast<std::size_t>(probs.shape(1));
            if (labels.size() != rows) throw Error(ErrorCode::LengthMismatch, "one label per probability row");
            std::vector<ProbabilityRecord> records;
            for (std::size_t i = 0; i < rows; ++i)
                records.push_back({"r" + std::to_string(i), labels[i],
                                   std::vector<double>(probs.data() + i * n, probs.data() + (i + 1) * n)});
            return from_similarity(build_similarity(records, n).matrix);
        },
        py::arg("probs"), py::arg("labels"), "Summed probabilities by true class, zero diagonal.");
    m.def(
        "rank_classes",
        [](const DoubleArray& b, std::size_t target) { return rank_classes(to_similarity(b, {}), target).order; },
        py::arg("similarity"), py::arg("target"));
    m.def(
        "symmetrize", [](const DoubleArray& b) { return from_similarity(symmetrize(to_similarity(b, {}))); },
        py::arg("similarity"));
    m.def(
        "select_random",
        [](std::size_t n, std::size_t target, std::size_t count, std::uint64_t seed) {
            return set_to_dict(select_random(n, target, count, seed));
        },
        py::arg("n"), py::arg("target"), py::arg("count") = 4, py::arg("seed") = 0);
    m.def(
        "select_by_rank",
        [](const DoubleArray& b, std::size_t target, const std::vector<std::size_t>& positions) {
            return set_to_dict(select_by_rank(rank_classes(to_similarity(b, {}), target), positions));
        },
        py::arg("similarity"), py::arg("target"), py::arg("positions") = kRankAPositions);
    m.def(
        "cluster_classes",
        [](const DoubleArray& b, std::size_t num_clusters, std::size_t min_size, std::uint64_t seed,
           std::size_t restarts) {
            ClusterOptions o;
            o.num_clusters = num_clusters;
            o.min_size = min_size;
            o.seed = seed;
            o.restarts = restarts;
            const auto r = cluster_classes(symmetrize(to_similarity(b, {})), o);
            py::dict d;
            d["assignment"] = r.clustering.assignment;
            d["members"] = r.clustering.members();
            d["passes"] = r.passes;
            d["converged"] = r.converged;
            d["objective"] = r.objective;
            return d;
        },
        py::arg("similarity"), py::arg("num_clusters") = 4, py::arg("min_size") = 4, py::arg("seed") = 0,
        py::arg("restarts") = 8);
    m.def(
        "select_from_clusters",
        [](const std::vector<std::size_t>& assignment, std::size_t num_clusters, const DoubleArray& b,
           std::size_t target, std::size_t k) {
            Clustering c{assignment, num_clusters, 1};
            return set_to_dict(select_from_clusters(c, to_similarity(b, {}), target, k));
        },
        py::arg("assignment"), py::arg("num_clusters"), py::arg("similarity"), py::arg("target"), py::arg("k") = 1);

    // maps
    m.def(
        "grad_cam_layer",
        [](const FloatArray& features, const FloatArray& gradients) {
            return from_map(grad_cam_layer(to_layer(1, features, gradients)));
        },
        py::arg("features"), py::arg("gradients"), "Grad-CAM of one [C,H,W] layer, normalized to [0,1].");
    m.def(
        "generate_pair_map",
        [](const std::vector<std::pair<FloatArray, FloatArray>>& layers, const std::string& mode) {
            PairDump p;
            for (std::size_t i = 0; i < layers.size(); ++i)
                p.layers.push_back(to_layer(i + 1, layers[i].first, layers[i].second));
            return from_map(generate_pair_map(p, layer_mode_from_string(mode)));
        },
        py::arg("layers"), py::arg("mode") = "multi", "layers: (features, gradients) pairs, earliest first.");
    m.def(
        "fuse_layers",
        [](const std::vector<FloatArray>& maps, std::size_t h, std::size_t w) {
            std::vector<ActivationMap> ms;
            for (const auto& a : maps) ms.push_back(to_map(a));
            return from_map(fuse_layers(ms, h, w));
        },
        py::arg("maps"), py::arg("height"), py::arg("width"));
    m.def(
        "fuse_classes",
        [](const std::vector<FloatArray>& maps) {
            std::vector<ActivationMap> ms;
            for (const auto& a : maps) ms.push_back(to_map(a));
            return from_map(fuse_classes(ms));
        },
        py::arg("maps"));

    // evaluation
    m.def(
        "threshold_map", [](const FloatArray& a, double t) { return from_mask(threshold_map(to_map(a), t)); },
        py::arg("map"), py::arg("threshold") = kDefaultThreshold);
    m.def(
        "iou", [](const py::array& pred, const py::array& gt) { return iou(to_mask(pred), to_mask(gt)); },
        py::arg("pred"), py::arg("gt"), "None when both masks are empty.");
    m.def(
        "top1_from_matrix",
        [](const std::filesystem::path& csv) {
            const auto r = top1_report(read_pair_matrix_csv(csv).matrix);
            py::dict per_class;
            for (const auto& s : r.per_class) per_class[py::str(s.name)] = s.miou;
            py::dict d;
            d["per_class"] = per_class;
            d["average"] = r.average;
            return d;
        },
        py::arg("path"));

    // pipeline
    m.def(
        "run",
        [](const std::string& config_json) {
            py::gil_scoped_release release;
            return cmd_run(PipelineConfig::from_json(nlohmann::json::parse(config_json))).summary;
        },
        py::arg("config_json"), "Full pipeline from a JSON config string; returns the summary line.");
}
