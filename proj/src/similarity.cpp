#include "camsel/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "camsel/csv.hpp"
#include "camsel/error.hpp"

namespace camsel {

void validate_record(const ProbabilityRecord& r, std::size_t n) {
    if (r.probs.size() != n)
        throw Error(ErrorCode::LengthMismatch,
                    "record has " + std::to_string(r.probs.size()) + " probabilities, expected " + std::to_string(n),
                    r.image_id);
    if (r.true_class >= n)
        throw Error(ErrorCode::InvalidRecord, "true_class " + std::to_string(r.true_class) + " out of range",
                    r.image_id);
    double sum = 0.0;
    for (double p : r.probs) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0)
            throw Error(ErrorCode::InvalidRecord, "probability outside [0,1]", r.image_id);
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilitySumTolerance)
        throw Error(ErrorCode::InvalidRecord, "probabilities sum to " + csv::format_double(sum), r.image_id);
}

std::vector<std::string> default_class_names(std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) names.push_back("class" + std::to_string(i));
    return names;
}

SimilarityMatrix::SimilarityMatrix(std::size_t n, std::vector<double> values, std::vector<std::string> class_names)
    : n_(n), values_(std::move(values)), names_(std::move(class_names)) {
    if (n_ == 0) throw Error(ErrorCode::InvalidArgument, "similarity matrix needs at least one class");
    if (values_.size() != n_ * n_) throw Error(ErrorCode::LengthMismatch, "similarity matrix is not n x n");
    if (names_.empty()) names_ = default_class_names(n_);
    if (names_.size() != n_) throw Error(ErrorCode::LengthMismatch, "class name count differs from matrix size");
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            double& v = values_[i * n_ + j];
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "similarity entry is not finite");
            if (i == j) {
                v = 0.0;
            } else if (v < 0.0) {
                throw Error(ErrorCode::OutOfRange, "similarity entries must be non-negative", names_[i]);
            }
        }
    }
}

SimilarityBuild build_similarity(const std::vector<ProbabilityRecord>& records, std::size_t n,
                                 std::vector<std::string> class_names) {
    if (records.empty()) throw Error(ErrorCode::EmptyInput, "no probability records");
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "class count must be positive");
    if (class_names.empty()) class_names = default_class_names(n);

    std::vector<double> values(n * n, 0.0);
    std::vector<std::size_t> counts(n, 0);
    std::vector<double> diagonal(n, 0.0);
    for (const auto& r : records) {
        validate_record(r, n);
        const std::size_t i = r.true_class;
        ++counts[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                diagonal[i] += r.probs[j];
            } else {
                values[i * n + j] += r.probs[j];
            }
        }
    }

    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[i] == 0 && i < class_names.size())
            warnings.push_back("class '" + class_names[i] + "' has no records; its row is all zero");
    }
    return {SimilarityMatrix(n, std::move(values), std::move(class_names)), std::move(counts), std::move(diagonal),
            std::move(warnings)};
}

ClassRanking rank_classes(const SimilarityMatrix& b, std::size_t target) {
    if (target >= b.size())
        throw Error(ErrorCode::OutOfRange, "class index " + std::to_string(target) + " out of range");
    ClassRanking ranking{target, {}};
    ranking.order.reserve(b.size() - 1);
    for (std::size_t j = 0; j < b.size(); ++j)
        if (j != target) ranking.order.push_back(j);
    std::stable_sort(ranking.order.begin(), ranking.order.end(),
                     [&](std::size_t a, std::size_t c) { return b.at(target, a) > b.at(target, c); });
    return ranking;
}

SimilarityMatrix symmetrize(const SimilarityMatrix& b) {
    const std::size_t n = b.size();
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) values[i * n + j] = (b.at(i, j) + b.at(j, i)) / 2.0;
    return SimilarityMatrix(n, std::move(values), b.class_names());
}

std::vector<ProbabilityRecord> read_probability_log(const std::filesystem::path& path, std::size_t* n_out) {
    const auto table = csv::read(path);
    const std::string where = path.string();
    if (table.rows.empty()) throw Error(ErrorCode::EmptyInput, "probability log is empty", where);
    const auto& header = table.rows.front();
    if (header.size() < 3 || header[0] != "image_id" || header[1] != "true_class")
        throw Error(ErrorCode::MalformedCsv, "header must start with image_id,true_class", where);
    const std::size_t n = header.size() - 2;
    for (std::size_t j = 0; j < n; ++j)
        if (header[j + 2] != "p_" + std::to_string(j))
            throw Error(ErrorCode::MalformedCsv, "expected column p_" + std::to_string(j), where);

    std::vector<ProbabilityRecord> records;
    records.reserve(table.rows.size() - 1);
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string at = where + ":" + std::to_string(table.line_numbers[r]);
        if (row.size() != header.size())
            throw Error(ErrorCode::MalformedCsv, "expected " + std::to_string(header.size()) + " fields", at);
        ProbabilityRecord rec{row[0], csv::parse_index(row[1], at), {}};
        rec.probs.reserve(n);
        for (std::size_t j = 0; j < n; ++j) rec.probs.push_back(csv::parse_double(row[j + 2], at));
        records.push_back(std::move(rec));
    }
    if (n_out) *n_out = n;
    return records;
}

void write_probability_log(const std::vector<ProbabilityRecord>& records, const std::filesystem::path& path) {
    if (records.empty()) throw Error(ErrorCode::EmptyInput, "no probability records to write");
    const std::size_t n = records.front().probs.size();
    std::string out = "image_id,true_class";
    for (std::size_t j = 0; j < n; ++j) out += ",p_" + std::to_string(j);
    out += '\n';
    for (const auto& r : records) {
        if (r.probs.size() != n) throw Error(ErrorCode::LengthMismatch, "ragged probability records", r.image_id);
        out += r.image_id + "," + std::to_string(r.true_class);
        for (double p : r.probs) out += "," + csv::format_double(p);
        out += '\n';
    }
    csv::write_text(path, out);
}

SimilarityMatrix read_similarity_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string where = path.string();
    if (table.rows.empty()) throw Error(ErrorCode::EmptyInput, "similarity CSV is empty", where);
    const auto& names = table.rows.front();
    const std::size_t n = names.size();
    if (table.rows.size() != n + 1)
        throw Error(ErrorCode::MalformedCsv,
                    "expected " + std::to_string(n) + " matrix rows, found " + std::to_string(table.rows.size() - 1),
                    where);
    std::vector<double> values;
    values.reserve(n * n);
    for (std::size_t r = 1; r <= n; ++r) {
        const std::string at = where + ":" + std::to_string(table.line_numbers[r]);
        if (table.rows[r].size() != n) throw Error(ErrorCode::MalformedCsv, "row is not length n", at);
        for (const auto& f : table.rows[r]) values.push_back(csv::parse_double(f, at));
    }
    return SimilarityMatrix(n, std::move(values), names);
}

std::string similarity_csv_text(const SimilarityMatrix& b) {
    std::string out;
    for (std::size_t j = 0; j < b.size(); ++j) out += (j ? "," : "") + b.class_names()[j];
    out += '\n';
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out += (j ? "," : "") + csv::format_double(b.at(i, j));
        out += '\n';
    }
    return out;
}

void write_similarity_csv(const SimilarityMatrix& b, const std::filesystem::path& path) {
    csv::write_text(path, similarity_csv_text(b));
}

}  // namespace camsel
