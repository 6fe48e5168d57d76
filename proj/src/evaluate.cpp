#include "camsel/evaluate.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "camsel/cam.hpp"
#include "camsel/csv.hpp"
#include "camsel/error.hpp"

namespace camsel {

BinaryMask threshold_map(const ActivationMap& m, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw Error(ErrorCode::OutOfRange, "threshold must lie in [0,1]");
    std::vector<std::uint8_t> bits(m.values().size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = m.values()[i] >= threshold ? 1 : 0;
    return BinaryMask(m.height(), m.width(), std::move(bits));
}

std::optional<double> iou(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width())
        throw Error(ErrorCode::DimensionMismatch, "prediction and groundtruth masks differ in size");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.bits().size(); ++i) {
        inter += pred.bits()[i] & gt.bits()[i];
        uni += pred.bits()[i] | gt.bits()[i];
    }
    if (uni == 0) return std::nullopt;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

const ClassScore* EvalReport::find(const std::string& name) const {
    auto it = std::find_if(per_class.begin(), per_class.end(), [&](const ClassScore& s) { return s.name == name; });
    return it == per_class.end() ? nullptr : &*it;
}

namespace {

EvalReport aggregate(const std::vector<std::vector<double>>& scores, const std::vector<std::string>& class_names,
                     double threshold) {
    EvalReport report;
    report.threshold = threshold;
    for (std::size_t c = 0; c < scores.size(); ++c) {
        if (scores[c].empty()) continue;
        const double mean = std::accumulate(scores[c].begin(), scores[c].end(), 0.0) /
                            static_cast<double>(scores[c].size());
        report.per_class.push_back({class_names[c], mean, scores[c].size()});
    }
    if (report.per_class.empty()) throw Error(ErrorCode::EmptyInput, "no sample produced a defined IoU");
    double total = 0.0;
    for (const auto& s : report.per_class) total += s.miou;
    report.average = total / static_cast<double>(report.per_class.size());
    return report;
}

std::size_t class_index(const std::map<std::string, std::size_t>& class_of, const std::string& id,
                        std::size_t n) {
    auto it = class_of.find(id);
    if (it == class_of.end()) throw Error(ErrorCode::MissingInput, "no class for sample", id);
    if (it->second >= n) throw Error(ErrorCode::OutOfRange, "class index out of range", id);
    return it->second;
}

const BinaryMask& groundtruth(const std::map<std::string, BinaryMask>& gts, const std::string& id) {
    auto it = gts.find(id);
    if (it == gts.end()) throw Error(ErrorCode::MissingInput, "missing groundtruth", id);
    return it->second;
}

std::optional<double> score(const ActivationMap& m, const BinaryMask& gt, double threshold, const std::string& id) {
    try {
        return iou(threshold_map(m, threshold), gt);
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), id);
    }
}

}  // namespace

EvalReport miou_per_class(const std::map<std::string, ActivationMap>& maps,
                          const std::map<std::string, BinaryMask>& gts,
                          const std::map<std::string, std::size_t>& class_of,
                          const std::vector<std::string>& class_names, double threshold) {
    std::vector<std::vector<double>> scores(class_names.size());
    for (const auto& [id, m] : maps) {
        const std::size_t c = class_index(class_of, id, class_names.size());
        if (auto v = score(m, groundtruth(gts, id), threshold, id)) scores[c].push_back(*v);
    }
    return aggregate(scores, class_names, threshold);
}

PairMatrix::PairMatrix(std::vector<std::string> class_names, std::vector<std::optional<double>> values)
    : names_(std::move(class_names)), values_(std::move(values)) {
    const std::size_t n = names_.size();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "pair matrix needs at least two classes");
    if (values_.size() != n * n) throw Error(ErrorCode::LengthMismatch, "pair matrix is not n x n");
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            auto& v = values_[r * n + c];
            if (r == c) {
                v.reset();
            } else if (v && !(*v >= 0.0 && *v <= 1.0)) {
                throw Error(ErrorCode::OutOfRange, "pair matrix value outside [0,1]", names_[r] + "/" + names_[c]);
            }
        }
    }
}

const ReferenceRow* PairMatrixFile::find(const std::string& label) const {
    auto it = std::find_if(references.begin(), references.end(), [&](const ReferenceRow& r) { return r.label == label; });
    return it == references.end() ? nullptr : &*it;
}

PairMatrixFile read_pair_matrix_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string where = path.string();
    if (table.rows.empty()) throw Error(ErrorCode::EmptyInput, "pair matrix CSV is empty", where);

    std::vector<std::string> names(table.rows.front().begin() + 1, table.rows.front().end());
    const bool has_avg = !names.empty() && names.back() == "avg";
    if (has_avg) names.pop_back();
    const std::size_t n = names.size();
    const std::size_t width = 1 + n + (has_avg ? 1 : 0);

    std::vector<std::optional<double>> values(n * n);
    std::vector<bool> seen(n, false);
    std::vector<ReferenceRow> references;
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string at = where + ":" + std::to_string(table.line_numbers[r]);
        if (row.size() != width)
            throw Error(ErrorCode::MalformedCsv, "expected " + std::to_string(width) + " fields", at);
        const auto it = std::find(names.begin(), names.end(), row[0]);
        if (it != names.end()) {
            const auto i = static_cast<std::size_t>(it - names.begin());
            if (seen[i]) throw Error(ErrorCode::MalformedCsv, "duplicate row for class " + row[0], at);
            seen[i] = true;
            for (std::size_t c = 0; c < n; ++c)
                if (c != i && row[c + 1] != "-") values[i * n + c] = csv::parse_double(row[c + 1], at);
        } else {
            ReferenceRow ref{row[0], {}, std::nullopt};
            for (std::size_t c = 0; c < n; ++c) ref.values.push_back(csv::parse_double(row[c + 1], at));
            if (has_avg && row.back() != "-") ref.average = csv::parse_double(row.back(), at);
            references.push_back(std::move(ref));
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!seen[i]) throw Error(ErrorCode::MalformedCsv, "no row for class " + names[i], where);
    return {PairMatrix(std::move(names), std::move(values)), std::move(references)};
}

std::string pair_matrix_csv_text(const PairMatrix& pm) {
    std::string out = "comparison";
    for (const auto& name : pm.class_names()) out += "," + name;
    out += '\n';
    for (std::size_t r = 0; r < pm.size(); ++r) {
        out += pm.class_names()[r];
        for (std::size_t c = 0; c < pm.size(); ++c) {
            const auto v = pm.at(r, c);
            out += "," + (v ? csv::format_double(*v) : std::string("-"));
        }
        out += '\n';
    }
    return out;
}

std::vector<std::size_t> topk_select_from_matrix(const PairMatrix& pm, std::size_t target, std::size_t k) {
    if (target >= pm.size()) throw Error(ErrorCode::OutOfRange, "target class out of range");
    if (k == 0 || k > pm.size() - 1)
        throw Error(ErrorCode::OutOfRange, "k must be in 1.." + std::to_string(pm.size() - 1));
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < pm.size(); ++r)
        if (r != target && pm.at(r, target)) rows.push_back(r);
    if (rows.size() < k)
        throw Error(ErrorCode::MissingInput, "column has only " + std::to_string(rows.size()) + " values",
                    pm.class_names()[target]);
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return *pm.at(a, target) > *pm.at(b, target); });
    rows.resize(k);
    return rows;
}

EvalReport top1_report(const PairMatrix& pm, double threshold) {
    std::vector<std::vector<double>> scores(pm.size());
    for (std::size_t c = 0; c < pm.size(); ++c) {
        std::optional<double> best;
        for (std::size_t r = 0; r < pm.size(); ++r)
            if (auto v = pm.at(r, c); v && (!best || *v > *best)) best = v;
        if (best) scores[c].push_back(*best);
    }
    return aggregate(scores, pm.class_names(), threshold);
}

EvalReport topk_fused_eval(std::size_t k, const PairMatrix& pm, const PairMapSet& pair_maps,
                           const std::map<std::string, BinaryMask>& gts,
                           const std::map<std::string, std::size_t>& class_of, double threshold) {
    std::vector<std::vector<double>> scores(pm.size());
    for (const auto& [id, by_comparison] : pair_maps) {
        const std::size_t c = class_index(class_of, id, pm.size());
        std::vector<ActivationMap> selected;
        for (std::size_t r : topk_select_from_matrix(pm, c, k)) {
            auto it = by_comparison.find(r);
            if (it == by_comparison.end())
                throw Error(ErrorCode::MissingInput, "missing pair map against " + pm.class_names()[r], id);
            selected.push_back(it->second);
        }
        if (auto v = score(fuse_classes(selected), groundtruth(gts, id), threshold, id)) scores[c].push_back(*v);
    }
    return aggregate(scores, pm.class_names(), threshold);
}

PairMatrix pair_matrix_from_maps(const PairMapSet& pair_maps, const std::map<std::string, BinaryMask>& gts,
                                 const std::map<std::string, std::size_t>& class_of,
                                 const std::vector<std::string>& class_names, double threshold) {
    const std::size_t n = class_names.size();
    std::vector<std::vector<double>> cells(n * n);
    for (const auto& [id, by_comparison] : pair_maps) {
        const std::size_t c = class_index(class_of, id, n);
        for (const auto& [r, m] : by_comparison) {
            if (r >= n || r == c) continue;
            if (auto v = score(m, groundtruth(gts, id), threshold, id)) cells[r * n + c].push_back(*v);
        }
    }
    std::vector<std::optional<double>> values(n * n);
    for (std::size_t i = 0; i < n * n; ++i)
        if (!cells[i].empty())
            values[i] = std::accumulate(cells[i].begin(), cells[i].end(), 0.0) / static_cast<double>(cells[i].size());
    return PairMatrix(class_names, std::move(values));
}

std::string report_csv_text(const EvalReport& r) {
    std::string out = "class,miou,count\n";
    std::size_t total = 0;
    for (const auto& s : r.per_class) {
        out += s.name + "," + csv::format_double(s.miou) + "," + std::to_string(s.count) + "\n";
        total += s.count;
    }
    out += "__avg__," + csv::format_double(r.average) + "," + std::to_string(total) + "\n";
    return out;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& s : r.per_class) per_class.push_back({{"class", s.name}, {"miou", s.miou}, {"count", s.count}});
    return {{"threshold", r.threshold}, {"average", r.average}, {"per_class", per_class}};
}

}  // namespace camsel
