#include "camsel/selection.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "camsel/error.hpp"
#include "camsel/random.hpp"

namespace camsel {

std::vector<std::size_t> Clustering::sizes() const {
    std::vector<std::size_t> s(num_clusters, 0);
    for (std::size_t c : assignment) ++s.at(c);
    return s;
}

std::vector<std::vector<std::size_t>> Clustering::members() const {
    std::vector<std::vector<std::size_t>> m(num_clusters);
    for (std::size_t i = 0; i < assignment.size(); ++i) m.at(assignment[i]).push_back(i);
    return m;
}

void Clustering::validate() const {
    if (num_clusters == 0) throw Error(ErrorCode::InvalidArgument, "clustering has no clusters");
    if (min_size == 0) throw Error(ErrorCode::InvalidArgument, "min_size must be positive");
    for (std::size_t c : assignment)
        if (c >= num_clusters) throw Error(ErrorCode::OutOfRange, "cluster id " + std::to_string(c) + " out of range");
    const auto s = sizes();
    for (std::size_t c = 0; c < num_clusters; ++c)
        if (s[c] < min_size)
            throw Error(ErrorCode::Infeasible, "cluster " + std::to_string(c) + " has " + std::to_string(s[c]) +
                                                   " classes, below min_size " + std::to_string(min_size));
}

RepresentativeSet select_random(std::size_t n, std::size_t target, std::size_t count, std::uint64_t seed) {
    if (target >= n) throw Error(ErrorCode::OutOfRange, "target class out of range");
    if (count > n - 1)
        throw Error(ErrorCode::Infeasible, "cannot pick " + std::to_string(count) + " classes out of " +
                                               std::to_string(n - 1) + " candidates");
    std::vector<std::size_t> pool;
    pool.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
        if (j != target) pool.push_back(j);
    Rng rng(seed);
    // Partial Fisher-Yates: the first `count` slots are the sample.
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    RepresentativeSet s;
    s.target = target;
    s.members = std::move(pool);
    s.strategy = SelectionStrategy::Random;
    s.seed = seed;
    return s;
}

RepresentativeSet select_by_rank(const ClassRanking& ranking, const std::vector<std::size_t>& positions) {
    std::set<std::size_t> seen;
    RepresentativeSet s;
    s.target = ranking.target;
    s.strategy = SelectionStrategy::Rank;
    s.positions = positions;
    for (std::size_t p : positions) {
        if (p == 0 || p > ranking.order.size())
            throw Error(ErrorCode::OutOfRange, "rank position " + std::to_string(p) + " outside 1.." +
                                                   std::to_string(ranking.order.size()));
        if (!seen.insert(p).second)
            throw Error(ErrorCode::InvalidArgument, "rank position " + std::to_string(p) + " repeated");
        s.members.push_back(ranking.order[p - 1]);
    }
    return s;
}

Clustering initial_partition(std::size_t n, std::size_t num_clusters, std::size_t min_size, std::uint64_t seed) {
    if (num_clusters < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 clusters");
    if (min_size == 0) throw Error(ErrorCode::InvalidArgument, "min_size must be positive");
    if (num_clusters * min_size > n)
        throw Error(ErrorCode::Infeasible, std::to_string(num_clusters) + " clusters of at least " +
                                               std::to_string(min_size) + " do not fit " + std::to_string(n) +
                                               " classes");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(std::span(order), rng);
    Clustering c{std::vector<std::size_t>(n), num_clusters, min_size};
    for (std::size_t k = 0; k < n; ++k) c.assignment[order[k]] = k % num_clusters;
    return c;
}

double clustering_objective(const SimilarityMatrix& symmetric, const Clustering& c) {
    const auto sizes = c.sizes();
    double total = 0.0;
    for (std::size_t i = 0; i < c.assignment.size(); ++i) {
        const std::size_t others = sizes[c.assignment[i]] - 1;
        if (others == 0) continue;
        double sum = 0.0;
        for (std::size_t j = 0; j < c.assignment.size(); ++j)
            if (j != i && c.assignment[j] == c.assignment[i]) sum += symmetric.at(i, j);
        total += sum / static_cast<double>(others);
    }
    return total;
}

namespace {

ClusterResult cluster_once(const SimilarityMatrix& symmetric, const ClusterOptions& options, std::size_t restart) {
    const std::size_t n = symmetric.size();
    ClusterResult result{initial_partition(n, options.num_clusters, options.min_size,
                                           derive_seed(options.seed, restart))};
    result.restart = restart;
    auto& assignment = result.clustering.assignment;
    const std::size_t k = options.num_clusters;

    std::vector<std::size_t> sizes = result.clustering.sizes();
    std::vector<double> sums(k);
    std::vector<double> affinity(k);

    while (result.passes < options.max_iter) {
        ++result.passes;
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::fill(sums.begin(), sums.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) sums[assignment[j]] += symmetric.at(i, j);

            const std::size_t current = assignment[i];
            for (std::size_t c = 0; c < k; ++c) {
                const std::size_t others = sizes[c] - (c == current ? 1 : 0);
                affinity[c] = others ? sums[c] / static_cast<double>(others) : 0.0;
            }
            // max_element keeps the first of equal values: lowest cluster id.
            const auto best = static_cast<std::size_t>(std::max_element(affinity.begin(), affinity.end()) -
                                                       affinity.begin());
            if (best == current || !(affinity[best] > affinity[current])) continue;
            if (sizes[current] - 1 < options.min_size) continue;

            assignment[i] = best;
            --sizes[current];
            ++sizes[best];
            ++result.moves;
            moved = true;
            if (options.on_move) options.on_move({restart, result.passes, i, current, best}, sizes);
        }
        if (!moved) {
            result.converged = true;
            break;
        }
    }
    result.objective = clustering_objective(symmetric, result.clustering);
    return result;
}

}  // namespace

ClusterResult cluster_classes(const SimilarityMatrix& symmetric, const ClusterOptions& options) {
    if (options.restarts == 0) throw Error(ErrorCode::InvalidArgument, "restarts must be at least 1");
    ClusterResult best = cluster_once(symmetric, options, 0);
    for (std::size_t r = 1; r < options.restarts; ++r) {
        auto candidate = cluster_once(symmetric, options, r);
        if (candidate.objective > best.objective) best = std::move(candidate);
    }
    return best;
}

RepresentativeSet select_from_clusters(const Clustering& clustering, const SimilarityMatrix& b, std::size_t target,
                                       std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "cluster position k must be at least 1");
    if (target >= b.size()) throw Error(ErrorCode::OutOfRange, "target class out of range");
    if (clustering.assignment.size() != b.size())
        throw Error(ErrorCode::DimensionMismatch, "clustering and similarity matrix disagree on class count");
    clustering.validate();

    RepresentativeSet s;
    s.target = target;
    s.strategy = SelectionStrategy::Cluster;
    s.cluster_k = k;
    for (auto candidates : clustering.members()) {
        std::erase(candidates, target);
        if (candidates.empty()) throw Error(ErrorCode::Infeasible, "a cluster contains only the target class");
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](std::size_t a, std::size_t c) { return b.at(target, a) > b.at(target, c); });
        s.members.push_back(candidates[std::min(k, candidates.size()) - 1]);
    }
    return s;
}

std::string to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::Random: return "random";
        case SelectionStrategy::Rank: return "rank";
        case SelectionStrategy::Cluster: return "cluster";
    }
    return "unknown";
}

SelectionStrategy strategy_from_string(const std::string& s) {
    if (s == "random") return SelectionStrategy::Random;
    if (s == "rank") return SelectionStrategy::Rank;
    if (s == "cluster") return SelectionStrategy::Cluster;
    throw Error(ErrorCode::InvalidArgument, "unknown selection strategy '" + s + "'");
}

nlohmann::json to_json(const Clustering& c, std::uint64_t seed, const std::vector<std::string>& class_names) {
    return {{"n", c.assignment.size()}, {"N", c.num_clusters},      {"min_size", c.min_size},
            {"seed", seed},             {"assignment", c.assignment}, {"class_names", class_names}};
}

Clustering clustering_from_json(const nlohmann::json& j) {
    try {
        Clustering c{j.at("assignment").get<std::vector<std::size_t>>(), j.at("N").get<std::size_t>(),
                     j.at("min_size").get<std::size_t>()};
        if (j.at("n").get<std::size_t>() != c.assignment.size())
            throw Error(ErrorCode::LengthMismatch, "clustering 'n' does not match assignment length");
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedJson, std::string("bad clustering JSON: ") + e.what());
    }
}

nlohmann::json to_json(const RepresentativeSet& s) {
    nlohmann::json strategy{{"kind", to_string(s.strategy)}};
    switch (s.strategy) {
        case SelectionStrategy::Random: strategy["seed"] = s.seed; break;
        case SelectionStrategy::Rank: strategy["positions"] = s.positions; break;
        case SelectionStrategy::Cluster: strategy["k"] = s.cluster_k; break;
    }
    return {{"target", s.target}, {"members", s.members}, {"strategy", strategy}};
}

RepresentativeSet representative_set_from_json(const nlohmann::json& j) {
    try {
        RepresentativeSet s;
        s.target = j.at("target").get<std::size_t>();
        s.members = j.at("members").get<std::vector<std::size_t>>();
        const auto& strategy = j.at("strategy");
        s.strategy = strategy_from_string(strategy.at("kind").get<std::string>());
        if (s.strategy == SelectionStrategy::Random) s.seed = strategy.at("seed").get<std::uint64_t>();
        if (s.strategy == SelectionStrategy::Rank) s.positions = strategy.at("positions").get<std::vector<std::size_t>>();
        if (s.strategy == SelectionStrategy::Cluster) s.cluster_k = strategy.at("k").get<std::size_t>();
        std::set<std::size_t> unique(s.members.begin(), s.members.end());
        if (unique.size() != s.members.size() || unique.contains(s.target))
            throw Error(ErrorCode::InvalidArgument, "representative members must be distinct and exclude the target");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedJson, std::string("bad representative set JSON: ") + e.what());
    }
}

}  // namespace camsel
