#include "doctest.h"

#include <numeric>
#include <random>
#include <set>

#include "../oracles.hpp"
#include "camsel/error.hpp"
#include "camsel/selection.hpp"

using namespace camsel;

TEST_CASE("select_random") {
    CHECK(select_random(2, 0, 1, 12345).members == std::vector<std::size_t>{1});
    CHECK(select_random(21, 3, 4, 77) == select_random(21, 3, 4, 77));
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto s = select_random(21, seed % 21, 4, seed);
        std::set<std::size_t> u(s.members.begin(), s.members.end());
        CHECK(u.size() == 4);
        CHECK_FALSE(u.contains(seed % 21));
        for (std::size_t m : u) CHECK(m < 21);
    }
    CHECK_THROWS_AS(select_random(3, 0, 3, 0), Error);
}

TEST_CASE("select_by_rank") {
    const ClassRanking r{0, {1, 2, 3, 4}};
    CHECK(select_by_rank(r, {1, 3}).members == std::vector<std::size_t>{1, 3});
    CHECK_THROWS_AS(select_by_rank(r, {0}), Error);
    CHECK_THROWS_AS(select_by_rank(r, {5}), Error);
    CHECK_THROWS_AS(select_by_rank(r, {2, 2}), Error);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> v(100);
    for (double& d : v) d = u(rng);
    const SimilarityMatrix b(10, v);
    for (std::size_t t = 0; t < 10; ++t) {
        const auto top = select_by_rank(rank_classes(b, t), {1, 2, 3});
        std::vector<double> row(10);
        for (std::size_t j = 0; j < 10; ++j) row[j] = b.at(t, j);
        const auto want = oracle::sorted_by_value(row, t);
        CHECK(top.members == std::vector<std::size_t>(want.begin(), want.begin() + 3));
    }
}

TEST_CASE("published rank presets on 21 classes") {
    std::vector<double> v(21 * 21, 0.0);
    for (std::size_t j = 1; j < 21; ++j) v[j] = 100.0 - static_cast<double>(j);
    const SimilarityMatrix b(21, v);
    CHECK(select_by_rank(rank_classes(b, 0), kRankAPositions).members == std::vector<std::size_t>{3, 9, 14, 17});
    CHECK(select_by_rank(rank_classes(b, 0), kRankBPositions).members == std::vector<std::size_t>{3, 8, 13, 18});
}

TEST_CASE("initial partition") {
    const auto c = initial_partition(10, 3, 3, 4);
    c.validate();
    for (std::size_t s : c.sizes()) CHECK(s >= 3);
    CHECK(initial_partition(10, 3, 3, 4) == c);
    CHECK_THROWS_AS(initial_partition(10, 3, 4, 0), Error);
    CHECK_THROWS_AS(initial_partition(10, 1, 1, 0), Error);
}

TEST_CASE("cluster_classes on planted blocks") {
    std::vector<std::size_t> block_of;
    for (std::size_t i = 0; i < 8; ++i) block_of.push_back(i / 4);
    const SimilarityMatrix bs(8, oracle::planted_blocks(block_of));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ClusterOptions o;
        o.num_clusters = 2;
        o.min_size = 2;
        o.seed = seed;
        const auto r = cluster_classes(bs, o);
        CHECK(oracle::same_partition(r.clustering.assignment, block_of));
        CHECK(r.converged);
        CHECK(r.passes <= o.max_iter);
    }
}

TEST_CASE("all-zero similarity keeps the initial partition") {
    const SimilarityMatrix zero(4, std::vector<double>(16, 0.0));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ClusterOptions o;
        o.num_clusters = 2;
        o.min_size = 2;
        o.seed = seed;
        const auto r = cluster_classes(zero, o);
        CHECK(r.clustering == initial_partition(4, 2, 2, seed));
        CHECK(r.moves == 0);
    }
}

TEST_CASE("cluster_classes invariants on random matrices") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 12 + rng() % 9;
        std::vector<double> v(n * n);
        for (double& d : v) d = u(rng);
        const auto bs = symmetrize(SimilarityMatrix(n, v));
        ClusterOptions o;
        o.num_clusters = 3;
        o.min_size = 3;
        o.seed = trial;
        bool sizes_ok = true;
        o.on_move = [&](const ClusterMove&, std::span<const std::size_t> sizes) {
            for (std::size_t s : sizes) sizes_ok = sizes_ok && s >= o.min_size;
        };
        const auto r = cluster_classes(bs, o);
        CHECK(sizes_ok);
        CHECK(r.passes <= o.max_iter);
        r.clustering.validate();

        std::vector<double> scaled = bs.values();
        for (double& d : scaled) d *= 3.5;
        ClusterOptions o2 = o;
        o2.on_move = nullptr;
        CHECK(cluster_classes(SimilarityMatrix(n, scaled), o2).clustering == r.clustering);
    }
}

TEST_CASE("select_from_clusters") {
    SUBCASE("exclusion then head") {
        // cluster 0 = {0,1,2}, cluster 1 = {3,4}
        const Clustering c{{0, 0, 0, 1, 1}, 2, 1};
        std::vector<double> v(25, 0.0);
        v[0 * 5 + 1] = 0.2;
        v[0 * 5 + 2] = 0.9;
        v[0 * 5 + 3] = 0.1;
        v[0 * 5 + 4] = 0.5;
        const SimilarityMatrix b(5, v);
        CHECK(select_from_clusters(c, b, 0, 1).members == std::vector<std::size_t>{2, 4});
        CHECK(select_from_clusters(c, b, 0, 2).members == std::vector<std::size_t>{1, 3});
        CHECK(select_from_clusters(c, b, 0, 4).members == std::vector<std::size_t>{1, 3});
        CHECK_THROWS_AS(select_from_clusters(c, b, 0, 0), Error);
    }
    SUBCASE("matches a per-cluster sort oracle") {
        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> u(0, 1);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> v(144);
            for (double& d : v) d = u(rng);
            const SimilarityMatrix b(12, v);
            const auto c = initial_partition(12, 3, 3, trial);
            const std::size_t t = rng() % 12;
            const auto got = select_from_clusters(c, b, t, 2);
            REQUIRE(got.members.size() == 3);
            for (std::size_t g = 0; g < 3; ++g) {
                std::vector<std::size_t> cand;
                for (std::size_t j = 0; j < 12; ++j)
                    if (c.assignment[j] == g && j != t) cand.push_back(j);
                std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t bb) {
                    return b.at(t, a) != b.at(t, bb) ? b.at(t, a) > b.at(t, bb) : a < bb;
                });
                CHECK(got.members[g] == cand[std::min<std::size_t>(1, cand.size() - 1)]);
            }
        }
    }
    SUBCASE("candidates over all k cover every other class") {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> u(0, 1);
        std::vector<double> v(100);
        for (double& d : v) d = u(rng);
        const SimilarityMatrix b(10, v);
        const auto c = initial_partition(10, 3, 3, 1);
        std::set<std::size_t> seen;
        for (std::size_t k = 1; k <= 4; ++k)
            for (std::size_t m : select_from_clusters(c, b, 5, k).members) seen.insert(m);
        CHECK(seen.size() == 9);
        CHECK_FALSE(seen.contains(5));
    }
}

TEST_CASE("json round trips") {
    const auto c = initial_partition(8, 2, 3, 5);
    const auto names = default_class_names(8);
    const auto j = to_json(c, 5, names);
    CHECK(j.at("N") == 2);
    CHECK(clustering_from_json(j) == c);

    const auto s = select_random(8, 2, 3, 99);
    CHECK(representative_set_from_json(to_json(s)) == s);
    const auto r = select_by_rank(ClassRanking{0, {1, 2, 3}}, {1, 3});
    CHECK(representative_set_from_json(to_json(r)) == r);
    CHECK(strategy_from_string(to_string(SelectionStrategy::Cluster)) == SelectionStrategy::Cluster);
}
