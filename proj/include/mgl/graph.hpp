#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mgl/matrix.hpp"
#include "mgl/rng.hpp"

namespace mgl {

struct Edge {
    int src;
    int dst;
    double weight;

    friend bool operator==(const Edge& a, const Edge& b) {
        return a.src == b.src && a.dst == b.dst && a.weight == b.weight;
    }
};

// Symmetric sparse adjacency with no self-loops. Both directions of every
// undirected edge are stored, sorted by (src, dst), without duplicates.
class SparseAdjacency {
public:
    SparseAdjacency() = default;
    explicit SparseAdjacency(int n) : n_(n), row_start_(static_cast<std::size_t>(n) + 1, 0) {}

    // Builds from undirected (i, j, w) triples given in any orientation.
    // Duplicates collapse keeping the maximum weight.
    static SparseAdjacency from_undirected(int n, const std::vector<std::tuple<int, int, double>>& edges) {
        SparseAdjacency a(n);
        std::vector<Edge> dir;
        dir.reserve(edges.size() * 2);
        for (const auto& [i, j, w] : edges) {
            if (i < 0 || i >= n || j < 0 || j >= n)
                throw std::invalid_argument("edge (" + std::to_string(i) + "," + std::to_string(j) +
                                            ") out of range for n=" + std::to_string(n));
            if (i == j)
                throw std::invalid_argument("self-loop at node " + std::to_string(i) + " not allowed");
            if (w < 0.0)
                throw std::invalid_argument("negative edge weight on (" + std::to_string(i) + "," +
                                            std::to_string(j) + ")");
            dir.push_back({i, j, w});
            dir.push_back({j, i, w});
        }
        std::sort(dir.begin(), dir.end(), [](const Edge& x, const Edge& y) {
            return std::tie(x.src, x.dst, x.weight) < std::tie(y.src, y.dst, y.weight);
        });
        // Collapse duplicates; sort order leaves the max weight last.
        for (const Edge& e : dir) {
            if (!a.entries_.empty() && a.entries_.back().src == e.src && a.entries_.back().dst == e.dst)
                a.entries_.back().weight = e.weight;
            else
                a.entries_.push_back(e);
        }
        a.rebuild_rows();
        return a;
    }

    int n() const { return n_; }
    const std::vector<Edge>& entries() const { return entries_; }
    int undirected_edge_count() const { return static_cast<int>(entries_.size() / 2); }

    // Entries of row i as a contiguous [begin, end) pair into entries().
    std::pair<const Edge*, const Edge*> row(int i) const {
        const auto b = static_cast<std::size_t>(row_start_[static_cast<std::size_t>(i)]);
        const auto e = static_cast<std::size_t>(row_start_[static_cast<std::size_t>(i) + 1]);
        return {entries_.data() + b, entries_.data() + e};
    }

    int degree(int i) const {
        return row_start_[static_cast<std::size_t>(i) + 1] - row_start_[static_cast<std::size_t>(i)];
    }

    bool has_edge(int i, int j) const {
        auto [b, e] = row(i);
        const Edge* it = std::lower_bound(b, e, j, [](const Edge& x, int v) { return x.dst < v; });
        return it != e && it->dst == j;
    }

    // Undirected edge list, one entry per edge with src < dst.
    std::vector<std::tuple<int, int, double>> undirected_edges() const {
        std::vector<std::tuple<int, int, double>> out;
        out.reserve(entries_.size() / 2);
        for (const Edge& e : entries_)
            if (e.src < e.dst) out.emplace_back(e.src, e.dst, e.weight);
        return out;
    }

private:
    void rebuild_rows() {
        row_start_.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (const Edge& e : entries_) ++row_start_[static_cast<std::size_t>(e.src) + 1];
        for (int i = 0; i < n_; ++i)
            row_start_[static_cast<std::size_t>(i) + 1] += row_start_[static_cast<std::size_t>(i)];
    }

    int n_ = 0;
    std::vector<Edge> entries_;
    std::vector<int> row_start_;
};

// Node features shared across V adjacency layers, plus optional class labels.
struct MultiplexGraph {
    DenseMatrix features;                     // N x D
    std::vector<SparseAdjacency> layers;      // each with n == N
    std::optional<std::vector<int>> labels;   // N class indices

    int num_nodes() const { return features.rows; }
    int num_layers() const { return static_cast<int>(layers.size()); }

    void validate() const {
        if (features.rows < 1 || features.cols < 1)
            throw std::invalid_argument("multiplex graph: features must be at least 1x1, got " +
                                        shape_str(features));
        if (layers.empty()) throw std::invalid_argument("multiplex graph: needs at least one layer");
        for (std::size_t v = 0; v < layers.size(); ++v)
            if (layers[v].n() != features.rows)
                throw std::invalid_argument("layer " + std::to_string(v) + " has n=" +
                                            std::to_string(layers[v].n()) + " but features have N=" +
                                            std::to_string(features.rows));
        if (labels && static_cast<int>(labels->size()) != features.rows)
            throw std::invalid_argument("labels length " + std::to_string(labels->size()) +
                                        " does not match N=" + std::to_string(features.rows));
    }
};

// High-order proximity weights: symmetric, strictly positive entries, zero
// diagonal. Stored as per-row (neighbor, weight) lists sorted by neighbor.
struct ProximityMatrix {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;

    double weight(int i, int j) const {
        const auto& r = rows[static_cast<std::size_t>(i)];
        auto it = std::lower_bound(r.begin(), r.end(), j,
                                   [](const std::pair<int, double>& p, int v) { return p.first < v; });
        return (it != r.end() && it->first == j) ? it->second : 0.0;
    }

    std::size_t entry_count() const {
        std::size_t c = 0;
        for (const auto& r : rows) c += r.size();
        return c;
    }
};

enum class ProximityMode { one_hop, two_hop, combined };

inline ProximityMode proximity_mode_from_string(const std::string& s) {
    if (s == "one_hop") return ProximityMode::one_hop;
    if (s == "two_hop") return ProximityMode::two_hop;
    if (s == "combined") return ProximityMode::combined;
    throw std::invalid_argument("unknown proximity mode '" + s + "' (one_hop|two_hop|combined)");
}

inline std::string to_string(ProximityMode m) {
    switch (m) {
        case ProximityMode::one_hop: return "one_hop";
        case ProximityMode::two_hop: return "two_hop";
        default: return "combined";
    }
}

// Multi-hop proximity weights from one adjacency layer:
//   one_hop    W = A
//   two_hop    W = A A^T          (co-neighbor walk counts)
//   combined   W = A + A A^T
// The diagonal is zeroed in every mode.
inline ProximityMatrix high_order(const SparseAdjacency& a, ProximityMode mode) {
    const int n = a.n();
    ProximityMatrix w;
    w.n = n;
    w.rows.resize(static_cast<std::size_t>(n));

    if (mode == ProximityMode::one_hop) {
        for (const Edge& e : a.entries())
            w.rows[static_cast<std::size_t>(e.src)].emplace_back(e.dst, e.weight);
        return w;
    }

    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    std::vector<int> touched;
    for (int i = 0; i < n; ++i) {
        touched.clear();
        auto [ib, ie] = a.row(i);
        for (const Edge* ek = ib; ek != ie; ++ek) {
            auto [kb, ke] = a.row(ek->dst);
            for (const Edge* ej = kb; ej != ke; ++ej) {
                if (acc[static_cast<std::size_t>(ej->dst)] == 0.0) touched.push_back(ej->dst);
                acc[static_cast<std::size_t>(ej->dst)] += ek->weight * ej->weight;
            }
        }
        if (mode == ProximityMode::combined) {
            for (const Edge* ek = ib; ek != ie; ++ek) {
                if (acc[static_cast<std::size_t>(ek->dst)] == 0.0) touched.push_back(ek->dst);
                acc[static_cast<std::size_t>(ek->dst)] += ek->weight;
            }
        }
        auto& out = w.rows[static_cast<std::size_t>(i)];
        std::sort(touched.begin(), touched.end());
        for (int j : touched) {
            if (j != i && acc[static_cast<std::size_t>(j)] > 0.0)
                out.emplace_back(j, acc[static_cast<std::size_t>(j)]);
            acc[static_cast<std::size_t>(j)] = 0.0;
        }
    }
    return w;
}

// Replaces ceil(eta * |E|) undirected edges with uniformly random non-edges.
// Edge count and symmetry are preserved; replacement edges are drawn from
// the complement of the *original* edge set, so at eta=1 no original edge
// survives.
inline SparseAdjacency inject_noise(const SparseAdjacency& a, double eta, Rng& rng) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("noise ratio eta=" + std::to_string(eta) + " outside [0,1]");
    auto edges = a.undirected_edges();
    const int m = static_cast<int>(edges.size());
    if (eta == 0.0) return a;
    if (m == 0) throw std::invalid_argument("inject_noise: graph has no edges");

    const int n = a.n();
    const int r = static_cast<int>(std::ceil(eta * m));
    const std::int64_t total_pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;
    const std::int64_t available = total_pairs - m;
    if (r > available)
        throw std::invalid_argument("inject_noise: only " + std::to_string(available) +
                                    " non-edges available, need " + std::to_string(r));

    // Pick r edges to drop via partial Fisher-Yates.
    for (int t = 0; t < r; ++t) {
        const int pick = t + rng.uniform_int(m - t);
        std::swap(edges[static_cast<std::size_t>(t)], edges[static_cast<std::size_t>(pick)]);
    }
    std::vector<std::tuple<int, int, double>> kept(edges.begin() + r, edges.end());

    auto pair_key = [n](int i, int j) { return static_cast<std::int64_t>(i) * n + j; };
    std::vector<std::int64_t> forbidden;
    forbidden.reserve(edges.size());
    for (const auto& [i, j, wgt] : edges) forbidden.push_back(pair_key(i, j));
    std::sort(forbidden.begin(), forbidden.end());
    auto is_forbidden = [&](int i, int j) {
        return std::binary_search(forbidden.begin(), forbidden.end(), pair_key(i, j));
    };

    std::vector<std::tuple<int, int, double>> inserted;
    inserted.reserve(static_cast<std::size_t>(r));
    if (available <= 2 * static_cast<std::int64_t>(r)) {
        // Dense regime: enumerate the complement and sample without rejection.
        std::vector<std::pair<int, int>> free_pairs;
        free_pairs.reserve(static_cast<std::size_t>(available));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (!is_forbidden(i, j)) free_pairs.emplace_back(i, j);
        const int f = static_cast<int>(free_pairs.size());
        for (int t = 0; t < r; ++t) {
            const int pick = t + rng.uniform_int(f - t);
            std::swap(free_pairs[static_cast<std::size_t>(t)], free_pairs[static_cast<std::size_t>(pick)]);
            inserted.emplace_back(free_pairs[static_cast<std::size_t>(t)].first,
                                  free_pairs[static_cast<std::size_t>(t)].second, 1.0);
        }
    } else {
        std::vector<std::int64_t> taken;
        while (static_cast<int>(inserted.size()) < r) {
            int i = rng.uniform_int(n);
            int j = rng.uniform_int(n);
            if (i == j) continue;
            if (i > j) std::swap(i, j);
            if (is_forbidden(i, j)) continue;
            const std::int64_t key = pair_key(i, j);
            if (std::find(taken.begin(), taken.end(), key) != taken.end()) continue;
            taken.push_back(key);
            inserted.emplace_back(i, j, 1.0);
        }
    }

    kept.insert(kept.end(), inserted.begin(), inserted.end());
    return SparseAdjacency::from_undirected(n, kept);
}

// Per-layer noise with substreams derived from (seed, layer index).
inline MultiplexGraph inject_noise_all(const MultiplexGraph& g, double eta, std::uint64_t seed) {
    MultiplexGraph noisy;
    noisy.features = g.features;
    noisy.labels = g.labels;
    noisy.layers.reserve(g.layers.size());
    for (std::size_t v = 0; v < g.layers.size(); ++v) {
        Rng rng(seed, static_cast<std::uint64_t>(v) + 1);
        noisy.layers.push_back(eta == 0.0 ? g.layers[v] : inject_noise(g.layers[v], eta, rng));
    }
    return noisy;
}

// Split of a graph into an induced subgraph on seen nodes plus the raw
// features (and labels) of the held-out unseen nodes.
struct OosSplit {
    MultiplexGraph train_graph;
    DenseMatrix unseen_features;
    std::optional<std::vector<int>> unseen_labels;
    std::vector<int> seen_index_map;    // new seen index -> original index
    std::vector<int> unseen_index_map;  // unseen position -> original index
};

// Draws ceil(ratio * N) nodes uniformly as unseen; the training graph is the
// induced subgraph on the remaining nodes with edges reindexed.
inline OosSplit oos_split(const MultiplexGraph& g, double ratio, Rng& rng) {
    if (!(ratio >= 0.0 && ratio < 1.0))
        throw std::invalid_argument("oos ratio " + std::to_string(ratio) + " outside [0,1)");
    const int n = g.num_nodes();
    const int n_unseen = static_cast<int>(std::ceil(ratio * n));
    const int n_seen = n - n_unseen;
    if (n_seen < 2)
        throw std::invalid_argument("oos_split: ratio " + std::to_string(ratio) + " leaves " +
                                    std::to_string(n_seen) + " seen nodes (need at least 2)");

    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int t = 0; t < n_unseen; ++t) {
        const int pick = t + rng.uniform_int(n - t);
        std::swap(perm[static_cast<std::size_t>(t)], perm[static_cast<std::size_t>(pick)]);
    }

    OosSplit split;
    split.unseen_index_map.assign(perm.begin(), perm.begin() + n_unseen);
    split.seen_index_map.assign(perm.begin() + n_unseen, perm.end());
    std::sort(split.unseen_index_map.begin(), split.unseen_index_map.end());
    std::sort(split.seen_index_map.begin(), split.seen_index_map.end());

    std::vector<int> new_index(static_cast<std::size_t>(n), -1);
    for (int s = 0; s < n_seen; ++s)
        new_index[static_cast<std::size_t>(split.seen_index_map[static_cast<std::size_t>(s)])] = s;

    split.train_graph.features = DenseMatrix(n_seen, g.features.cols);
    for (int s = 0; s < n_seen; ++s) {
        const int orig = split.seen_index_map[static_cast<std::size_t>(s)];
        std::copy(g.features.row(orig), g.features.row(orig) + g.features.cols,
                  split.train_graph.features.row(s));
    }
    split.unseen_features = DenseMatrix(n_unseen, g.features.cols);
    for (int u = 0; u < n_unseen; ++u) {
        const int orig = split.unseen_index_map[static_cast<std::size_t>(u)];
        std::copy(g.features.row(orig), g.features.row(orig) + g.features.cols,
                  split.unseen_features.row(u));
    }
    if (g.labels) {
        std::vector<int> seen_labels(static_cast<std::size_t>(n_seen));
        std::vector<int> unseen_labels(static_cast<std::size_t>(n_unseen));
        for (int s = 0; s < n_seen; ++s)
            seen_labels[static_cast<std::size_t>(s)] =
                (*g.labels)[static_cast<std::size_t>(split.seen_index_map[static_cast<std::size_t>(s)])];
        for (int u = 0; u < n_unseen; ++u)
            unseen_labels[static_cast<std::size_t>(u)] =
                (*g.labels)[static_cast<std::size_t>(split.unseen_index_map[static_cast<std::size_t>(u)])];
        split.train_graph.labels = std::move(seen_labels);
        split.unseen_labels = std::move(unseen_labels);
    }

    for (const SparseAdjacency& layer : g.layers) {
        std::vector<std::tuple<int, int, double>> edges;
        for (const auto& [i, j, w] : layer.undirected_edges()) {
            const int ni = new_index[static_cast<std::size_t>(i)];
            const int nj = new_index[static_cast<std::size_t>(j)];
            if (ni >= 0 && nj >= 0) edges.emplace_back(ni, nj, w);
        }
        split.train_graph.layers.push_back(SparseAdjacency::from_undirected(n_seen, edges));
    }
    return split;
}

}  // namespace mgl
