#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mgl/rng.hpp"
#include "mgl/sbm.hpp"

using namespace mgl;

namespace {

// Empirical density of edges between (or within) two block index sets.
double pair_density(const SparseAdjacency& a, const SbmConfig& cfg, int block_a, int block_b) {
    long long pairs = 0, hits = 0;
    for (int i = 0; i < cfg.n; ++i) {
        const int bi = cfg.block_of(i);
        for (int j = i + 1; j < cfg.n; ++j) {
            const int bj = cfg.block_of(j);
            if (std::min(bi, bj) != block_a || std::max(bi, bj) != block_b) continue;
            ++pairs;
            if (a.has_edge(i, j)) ++hits;
        }
    }
    return pairs == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("blocks partition nodes with the remainder in the last block") {
    SbmConfig cfg;
    cfg.n = 10;
    cfg.k = 3;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < cfg.n; ++i) {
        const int b = cfg.block_of(i);
        REQUIRE(b >= 0);
        REQUIRE(b < 3);
        ++counts[static_cast<std::size_t>(b)];
        if (i > 0) REQUIRE(b >= cfg.block_of(i - 1));  // contiguous blocks
    }
    REQUIRE(counts == std::vector<int>{3, 3, 4});
}

TEST_CASE("config validation rejects inconsistent settings") {
    SbmConfig cfg;
    REQUIRE_NOTHROW(cfg.validate());
    cfg.n = 1;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.k = 0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.p_out = 0.2;  // must stay below p_in
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.feature_noise = -1.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.v = 0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("block pairs enumerate in lexicographic order") {
    REQUIRE(block_pairs(3) == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
    REQUIRE(block_pairs(1).empty());
    REQUIRE(block_pairs(4).size() == 6);
}

TEST_CASE("samples carry planted labels and matching shapes") {
    SbmConfig cfg;
    cfg.n = 60;
    cfg.k = 3;
    cfg.v = 2;
    cfg.d_feat = 5;
    Rng rng(1);
    const auto res = synth_multiplex_sbm(cfg, rng);
    REQUIRE(res.graph.num_nodes() == 60);
    REQUIRE(res.graph.num_layers() == 2);
    REQUIRE(res.graph.features.cols == 5);
    REQUIRE(res.graph.labels.has_value());
    for (int i = 0; i < cfg.n; ++i)
        REQUIRE((*res.graph.labels)[static_cast<std::size_t>(i)] == cfg.block_of(i));
    REQUIRE(res.merged_pairs == std::vector<std::pair<int, int>>{{-1, -1}, {-1, -1}});
}

TEST_CASE("sampling is deterministic in the generator state") {
    SbmConfig cfg;
    cfg.n = 40;
    Rng a(9), b(9);
    const auto ra = synth_multiplex_sbm(cfg, a);
    const auto rb = synth_multiplex_sbm(cfg, b);
    REQUIRE(ra.graph.features.values == rb.graph.features.values);
    for (int v = 0; v < cfg.v; ++v)
        REQUIRE(ra.graph.layers[static_cast<std::size_t>(v)].entries().size() ==
                rb.graph.layers[static_cast<std::size_t>(v)].entries().size());
}

TEST_CASE("edge densities track p_in and p_out") {
    SbmConfig cfg;
    cfg.n = 240;
    cfg.k = 3;
    cfg.v = 1;
    cfg.p_in = 0.2;
    cfg.p_out = 0.02;

    double within = 0.0, across = 0.0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        Rng rng(static_cast<std::uint64_t>(100 + t));
        const auto res = synth_multiplex_sbm(cfg, rng);
        const auto& a = res.graph.layers[0];
        within += (pair_density(a, cfg, 0, 0) + pair_density(a, cfg, 1, 1) +
                   pair_density(a, cfg, 2, 2)) / 3.0;
        across += (pair_density(a, cfg, 0, 1) + pair_density(a, cfg, 0, 2) +
                   pair_density(a, cfg, 1, 2)) / 3.0;
    }
    within /= trials;
    across /= trials;
    REQUIRE(std::fabs(within - cfg.p_in) < 0.15 * cfg.p_in);
    REQUIRE(std::fabs(across - cfg.p_out) < 0.15 * cfg.p_out);
}

TEST_CASE("complementary layers merge one rotating block pair") {
    SbmConfig cfg;
    cfg.n = 240;
    cfg.k = 3;
    cfg.v = 4;
    cfg.p_in = 0.2;
    cfg.p_out = 0.02;
    cfg.complementary = true;

    Rng rng(55);
    const auto res = synth_multiplex_sbm(cfg, rng);
    // Round-robin over the 3 pairs of 3 blocks, wrapping at layer 3.
    REQUIRE(res.merged_pairs ==
            std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}, {0, 1}});

    // The merged pair sits at intra-block density; the others stay sparse.
    double merged_density = 0.0, separated_density = 0.0;
    int separated_count = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        Rng r(static_cast<std::uint64_t>(500 + t));
        const auto rr = synth_multiplex_sbm(cfg, r);
        for (int layer = 0; layer < cfg.v; ++layer) {
            const auto [ma, mb] = rr.merged_pairs[static_cast<std::size_t>(layer)];
            const auto& a = rr.graph.layers[static_cast<std::size_t>(layer)];
            merged_density += pair_density(a, cfg, ma, mb);
            for (const auto& [pa, pb] : block_pairs(cfg.k))
                if (pa != ma || pb != mb) {
                    separated_density += pair_density(a, cfg, pa, pb);
                    ++separated_count;
                }
        }
    }
    merged_density /= trials * cfg.v;
    separated_density /= separated_count;
    REQUIRE(std::fabs(merged_density - cfg.p_in) < 0.15 * cfg.p_in);
    REQUIRE(std::fabs(separated_density - cfg.p_out) < 0.15 * cfg.p_out);
}

TEST_CASE("feature noise scales the spread around block means") {
    SbmConfig tight;
    tight.n = 90;
    tight.k = 3;
    tight.v = 1;
    tight.d_feat = 8;
    tight.feature_noise = 0.1;
    SbmConfig loose = tight;
    loose.feature_noise = 2.0;

    auto block_spread = [](const SbmConfig& cfg, const MultiplexGraph& g) {
        double total = 0.0;
        for (int b = 0; b < cfg.k; ++b) {
            std::vector<double> mean(static_cast<std::size_t>(cfg.d_feat), 0.0);
            int count = 0;
            for (int i = 0; i < cfg.n; ++i)
                if (cfg.block_of(i) == b) {
                    ++count;
                    for (int j = 0; j < cfg.d_feat; ++j)
                        mean[static_cast<std::size_t>(j)] += g.features(i, j);
                }
            for (double& m : mean) m /= count;
            for (int i = 0; i < cfg.n; ++i)
                if (cfg.block_of(i) == b)
                    for (int j = 0; j < cfg.d_feat; ++j) {
                        const double u = g.features(i, j) - mean[static_cast<std::size_t>(j)];
                        total += u * u;
                    }
        }
        return total;
    };

    Rng r1(3), r2(3);
    const auto gt = synth_multiplex_sbm(tight, r1);
    const auto gl = synth_multiplex_sbm(loose, r2);
    REQUIRE(block_spread(loose, gl.graph) > 10.0 * block_spread(tight, gt.graph));
}
