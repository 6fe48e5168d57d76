#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace camsel {

/// One image's softmax output together with its labelled class.
struct ProbabilityRecord {
    std::string image_id;
    std::size_t true_class = 0;
    std::vector<double> probs;
};

/// Tolerance on the softmax sum of a record.
inline constexpr double kProbabilitySumTolerance = 1e-4;

/// Throws InvalidRecord unless probs has length n, lies in [0,1] and sums to 1.
void validate_record(const ProbabilityRecord& r, std::size_t n);

/// n x n class similarity. Off-diagonal entries are non-negative and the
/// diagonal is stored as zero.
class SimilarityMatrix {
public:
    SimilarityMatrix(std::size_t n, std::vector<double> values, std::vector<std::string> class_names = {});

    std::size_t size() const noexcept { return n_; }
    double at(std::size_t row, std::size_t col) const { return values_[row * n_ + col]; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<std::string>& class_names() const noexcept { return names_; }

    bool operator==(const SimilarityMatrix&) const = default;

private:
    std::size_t n_;
    std::vector<double> values_;
    std::vector<std::string> names_;
};

std::vector<std::string> default_class_names(std::size_t n);

struct SimilarityBuild {
    SimilarityMatrix matrix;
    std::vector<std::size_t> record_counts;  // per true class
    std::vector<double> diagonal_mass;       // self-probability discarded from each row
    std::vector<std::string> warnings;       // classes without any record
};

/// Confusion-mass similarity: entry (i, j) sums probs[j] over the records
/// labelled i.
SimilarityBuild build_similarity(const std::vector<ProbabilityRecord>& records, std::size_t n,
                                 std::vector<std::string> class_names = {});

/// All classes other than the target, most similar first. Ties go to the
/// lower class index.
struct ClassRanking {
    std::size_t target = 0;
    std::vector<std::size_t> order;
};

ClassRanking rank_classes(const SimilarityMatrix& b, std::size_t target);

/// (B + B^T) / 2 with a zero diagonal.
SimilarityMatrix symmetrize(const SimilarityMatrix& b);

// Probability log CSV: image_id,true_class,p_0,...,p_{n-1}
std::vector<ProbabilityRecord> read_probability_log(const std::filesystem::path& path, std::size_t* n_out = nullptr);
void write_probability_log(const std::vector<ProbabilityRecord>& records, const std::filesystem::path& path);

// Similarity CSV: one row of class names, then n rows of n numbers.
SimilarityMatrix read_similarity_csv(const std::filesystem::path& path);
void write_similarity_csv(const SimilarityMatrix& b, const std::filesystem::path& path);
std::string similarity_csv_text(const SimilarityMatrix& b);

}  // namespace camsel
