#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "camsel/tensorio.hpp"

namespace camsel {

inline constexpr double kDefaultThreshold = 0.15;

/// Foreground iff value >= threshold.
BinaryMask threshold_map(const ActivationMap& m, double threshold);

/// Intersection over union. Empty when both masks are empty (the sample is
/// then left out of any average).
std::optional<double> iou(const BinaryMask& pred, const BinaryMask& gt);

struct ClassScore {
    std::string name;
    double miou = 0.0;
    std::size_t count = 0;  // samples contributing a defined IoU
};

struct EvalReport {
    std::vector<ClassScore> per_class;  // class-index order; classes with no defined IoU are absent
    double average = 0.0;               // unweighted mean over per_class
    double threshold = kDefaultThreshold;

    const ClassScore* find(const std::string& name) const;
};

/// Samples are keyed by an opaque id; class_of maps each id to a class index
/// into class_names.
EvalReport miou_per_class(const std::map<std::string, ActivationMap>& maps,
                          const std::map<std::string, BinaryMask>& gts,
                          const std::map<std::string, std::size_t>& class_of,
                          const std::vector<std::string>& class_names, double threshold);

/// Entry (r, c): mIoU for target class c when compared against class r.
/// The diagonal is absent.
class PairMatrix {
public:
    PairMatrix(std::vector<std::string> class_names, std::vector<std::optional<double>> values);

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& class_names() const noexcept { return names_; }
    std::optional<double> at(std::size_t comparison, std::size_t target) const {
        return values_[comparison * names_.size() + target];
    }

private:
    std::vector<std::string> names_;
    std::vector<std::optional<double>> values_;
};

/// Label row carried alongside a pair matrix (e.g. published summary rows).
struct ReferenceRow {
    std::string label;
    std::vector<double> values;
    std::optional<double> average;
};

struct PairMatrixFile {
    PairMatrix matrix;
    std::vector<ReferenceRow> references;

    const ReferenceRow* find(const std::string& label) const;
};

/// Header row: corner label, class names, optional trailing "avg". Rows named
/// after a class are matrix rows ("-" on the diagonal); any other label is a
/// reference row.
PairMatrixFile read_pair_matrix_csv(const std::filesystem::path& path);
std::string pair_matrix_csv_text(const PairMatrix& pm);

/// The k comparison classes with the highest value in column `target`,
/// best first; ties go to the lower index.
std::vector<std::size_t> topk_select_from_matrix(const PairMatrix& pm, std::size_t target, std::size_t k);

/// Per class: the best single comparison class (column maximum).
EvalReport top1_report(const PairMatrix& pm, double threshold = kDefaultThreshold);

/// sample id -> comparison class -> pair map.
using PairMapSet = std::map<std::string, std::map<std::size_t, ActivationMap>>;

/// Per sample: fuse the maps of the k best comparison classes (chosen from
/// pm), threshold, score against groundtruth.
EvalReport topk_fused_eval(std::size_t k, const PairMatrix& pm, const PairMapSet& pair_maps,
                           const std::map<std::string, BinaryMask>& gts,
                           const std::map<std::string, std::size_t>& class_of, double threshold);

/// Scores every available (sample, comparison) map and aggregates per
/// (comparison, target class) cell.
PairMatrix pair_matrix_from_maps(const PairMapSet& pair_maps, const std::map<std::string, BinaryMask>& gts,
                                 const std::map<std::string, std::size_t>& class_of,
                                 const std::vector<std::string>& class_names, double threshold);

std::string report_csv_text(const EvalReport& r);
nlohmann::json to_json(const EvalReport& r);

}  // namespace camsel
