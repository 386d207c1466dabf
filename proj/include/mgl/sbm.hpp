#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mgl/graph.hpp"
#include "mgl/rng.hpp"

namespace mgl {

// Stochastic block model over V layers with Gaussian features around
// per-block mean vectors.
struct SbmConfig {
    int n = 300;
    int k = 3;
    int v = 2;
    int d_feat = 16;
    double p_in = 0.1;
    double p_out = 0.01;
    double feature_noise = 1.0;
    // When set, each layer keeps one block pair at intra-block density so
    // that no single layer separates all blocks; the pairs rotate through
    // the layers round-robin.
    bool complementary = false;

    void validate() const {
        if (n < 2) throw std::invalid_argument("sbm: n must be >= 2, got " + std::to_string(n));
        if (k < 1 || k > n) throw std::invalid_argument("sbm: k must be in [1,n], got " + std::to_string(k));
        if (v < 1) throw std::invalid_argument("sbm: v must be >= 1, got " + std::to_string(v));
        if (d_feat < 1) throw std::invalid_argument("sbm: d_feat must be >= 1, got " + std::to_string(d_feat));
        if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0))
            throw std::invalid_argument("sbm: need 0 <= p_out < p_in <= 1, got p_in=" +
                                        std::to_string(p_in) + " p_out=" + std::to_string(p_out));
        if (feature_noise < 0.0) throw std::invalid_argument("sbm: feature_noise must be >= 0");
    }

    // Node i belongs to block i / floor(n/k), remainder folded into the last.
    int block_of(int i) const {
        const int base = n / k;
        const int b = i / base;
        return b >= k ? k - 1 : b;
    }
};

struct SbmResult {
    MultiplexGraph graph;  // labels hold the planted block ids
    // Per-layer block pair sampled at p_in across blocks; (-1,-1) when the
    // layer separates every pair (complementary off).
    std::vector<std::pair<int, int>> merged_pairs;
};

inline std::vector<std::pair<int, int>> block_pairs(int k) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) pairs.emplace_back(a, b);
    return pairs;
}

inline SbmResult synth_multiplex_sbm(const SbmConfig& cfg, Rng& rng) {
    cfg.validate();
    SbmResult res;

    std::vector<int> labels(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) labels[static_cast<std::size_t>(i)] = cfg.block_of(i);

    // Block means drawn once per run; k standard-normal vectors in d_feat
    // dimensions are nearly orthogonal without being hand-picked.
    DenseMatrix means(cfg.k, cfg.d_feat);
    for (double& m : means.values) m = rng.normal();

    DenseMatrix x(cfg.n, cfg.d_feat);
    for (int i = 0; i < cfg.n; ++i) {
        const int b = labels[static_cast<std::size_t>(i)];
        for (int j = 0; j < cfg.d_feat; ++j)
            x(i, j) = means(b, j) + cfg.feature_noise * rng.normal();
    }

    const auto pairs = block_pairs(cfg.k);
    res.merged_pairs.assign(static_cast<std::size_t>(cfg.v), {-1, -1});

    res.graph.features = std::move(x);
    res.graph.labels = labels;
    for (int layer = 0; layer < cfg.v; ++layer) {
        std::pair<int, int> merged{-1, -1};
        if (cfg.complementary && !pairs.empty())
            merged = pairs[static_cast<std::size_t>(layer) % pairs.size()];
        res.merged_pairs[static_cast<std::size_t>(layer)] = merged;

        std::vector<std::tuple<int, int, double>> edges;
        for (int i = 0; i < cfg.n; ++i) {
            const int bi = labels[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < cfg.n; ++j) {
                const int bj = labels[static_cast<std::size_t>(j)];
                double p = cfg.p_out;
                if (bi == bj || (std::min(bi, bj) == merged.first && std::max(bi, bj) == merged.second))
                    p = cfg.p_in;
                if (rng.uniform() < p) edges.emplace_back(i, j, 1.0);
            }
        }
        res.graph.layers.push_back(SparseAdjacency::from_undirected(cfg.n, edges));
    }
    res.graph.validate();
    return res;
}

}  // namespace mgl
