#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "camsel/similarity.hpp"

namespace camsel {

/// Partition of n classes into N clusters, each holding at least min_size
/// classes.
struct Clustering {
    std::vector<std::size_t> assignment;
    std::size_t num_clusters = 0;
    std::size_t min_size = 1;

    std::vector<std::size_t> sizes() const;
    std::vector<std::vector<std::size_t>> members() const;  // ascending class indices per cluster
    void validate() const;

    bool operator==(const Clustering&) const = default;
};

enum class SelectionStrategy { Random, Rank, Cluster };

/// Comparison classes chosen for one target, with how they were chosen.
struct RepresentativeSet {
    std::size_t target = 0;
    std::vector<std::size_t> members;
    SelectionStrategy strategy = SelectionStrategy::Random;
    std::uint64_t seed = 0;              // Random
    std::vector<std::size_t> positions;  // Rank, 1-based
    std::size_t cluster_k = 0;           // Cluster

    bool operator==(const RepresentativeSet&) const = default;
};

inline const std::vector<std::size_t> kRankAPositions{3, 9, 14, 17};
inline const std::vector<std::size_t> kRankBPositions{3, 8, 13, 18};

/// N distinct classes other than target, drawn without replacement.
RepresentativeSet select_random(std::size_t n, std::size_t target, std::size_t count, std::uint64_t seed);

/// members[k] = ranking.order[positions[k] - 1].
RepresentativeSet select_by_rank(const ClassRanking& ranking, const std::vector<std::size_t>& positions);

struct ClusterMove {
    std::size_t restart = 0;
    std::size_t pass = 0;
    std::size_t cls = 0;
    std::size_t from = 0;
    std::size_t to = 0;
};

struct ClusterOptions {
    std::size_t num_clusters = 4;
    std::size_t min_size = 4;
    std::uint64_t seed = 0;
    std::size_t max_iter = 100;
    /// Independent runs from derived seeds; the run with the highest
    /// objective wins (ties: earliest). Run 0 uses `seed` itself, so
    /// restarts = 1 is a single plain run.
    std::size_t restarts = 8;
    /// Called after every applied move with the cluster sizes at that point.
    std::function<void(const ClusterMove&, std::span<const std::size_t>)> on_move;
};

struct ClusterResult {
    Clustering clustering;
    std::size_t passes = 0;  // of the winning run
    std::size_t moves = 0;
    bool converged = false;
    std::size_t restart = 0;
    double objective = 0.0;
};

/// Sum over classes of the mean similarity to the other members of the
/// class's own cluster.
double clustering_objective(const SimilarityMatrix& symmetric, const Clustering& c);


/// Seeded round-robin partition used to start cluster_classes.
Clustering initial_partition(std::size_t n, std::size_t num_clusters, std::size_t min_size, std::uint64_t seed);

/// k-means variant over a similarity matrix. A class's affinity to a cluster
/// is its mean similarity to the other members of that cluster; a class moves
/// to the cluster of highest affinity only when that is strictly higher than
/// its current affinity and the source cluster stays at or above min_size.
ClusterResult cluster_classes(const SimilarityMatrix& symmetric, const ClusterOptions& options);

/// For each cluster (ascending id): drop the target, sort by B[target][.]
/// descending, take the k-th (1-based), clamped to the last candidate.
RepresentativeSet select_from_clusters(const Clustering& clustering, const SimilarityMatrix& b, std::size_t target,
                                       std::size_t k);

std::string to_string(SelectionStrategy s);
SelectionStrategy strategy_from_string(const std::string& s);

nlohmann::json to_json(const Clustering& c, std::uint64_t seed, const std::vector<std::string>& class_names);
Clustering clustering_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RepresentativeSet& s);
RepresentativeSet representative_set_from_json(const nlohmann::json& j);

}  // namespace camsel
