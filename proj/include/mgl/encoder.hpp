#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgl/graph.hpp"
#include "mgl/matrix.hpp"
#include "mgl/rng.hpp"

namespace mgl {

// Per-graph MLP encoder: tanh on hidden layers, linear final layer.
// Parameters are never shared across encoders.
struct MlpEncoder {
    std::vector<int> dims;                    // [D, h1, ..., d]
    std::vector<DenseMatrix> weights;         // weights[l] is dims[l] x dims[l+1]
    std::vector<std::vector<double>> biases;  // biases[l] has dims[l+1] entries
    std::uint64_t param_version = 0;          // bumped by every in-place update

    int num_layers() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
};

// Activations and pre-activations of one forward pass, consumed by exactly
// one backward pass. Records the encoder identity and parameter version so
// a stale or foreign cache is rejected.
struct ForwardCache {
    DenseMatrix input;
    std::vector<DenseMatrix> pre;   // pre[l] = H_{l-1} W_l + b_l
    std::vector<DenseMatrix> post;  // post[l] = tanh(pre[l]), last layer linear
    std::vector<DenseMatrix> agg;   // GCN only: propagated inputs per layer
    const void* encoder_id = nullptr;
    std::uint64_t param_version = 0;

    const DenseMatrix& output() const { return post.back(); }
};

struct Gradients {
    std::vector<DenseMatrix> d_weights;
    std::vector<std::vector<double>> d_biases;
    DenseMatrix d_input;
};

// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
inline MlpEncoder mlp_init(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("mlp_init: dims needs at least 2 entries");
    for (int d : dims)
        if (d < 1) throw std::invalid_argument("mlp_init: all dims must be positive");
    MlpEncoder enc;
    enc.dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int din = dims[l], dout = dims[l + 1];
        DenseMatrix w(din, dout);
        const double bound = std::sqrt(6.0 / (din + dout));
        for (double& v : w.values) v = rng.uniform(-bound, bound);
        enc.weights.push_back(std::move(w));
        enc.biases.emplace_back(static_cast<std::size_t>(dout), 0.0);
    }
    return enc;
}

namespace detail {

inline void add_bias_rows(DenseMatrix& m, const std::vector<double>& b) {
    for (int i = 0; i < m.rows; ++i) {
        double* r = m.row(i);
        for (int j = 0; j < m.cols; ++j) r[j] += b[static_cast<std::size_t>(j)];
    }
}

inline DenseMatrix tanh_of(const DenseMatrix& m) {
    DenseMatrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.values.size(); ++i) out.values[i] = std::tanh(m.values[i]);
    return out;
}

inline std::vector<double> column_sums(const DenseMatrix& m) {
    std::vector<double> s(static_cast<std::size_t>(m.cols), 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const double* r = m.row(i);
        for (int j = 0; j < m.cols; ++j) s[static_cast<std::size_t>(j)] += r[j];
    }
    return s;
}

// delta <- delta_next(post) * (1 - post^2), the tanh adjoint.
inline void apply_tanh_adjoint(DenseMatrix& delta, const DenseMatrix& post) {
    for (std::size_t i = 0; i < delta.values.size(); ++i)
        delta.values[i] *= 1.0 - post.values[i] * post.values[i];
}

inline void check_cache(const ForwardCache& cache, const void* encoder_id,
                        std::uint64_t param_version, const DenseMatrix& dz) {
    if (cache.encoder_id != encoder_id)
        throw std::invalid_argument("backward: cache was produced by a different encoder");
    if (cache.param_version != param_version)
        throw std::invalid_argument("backward: stale cache, parameters changed since forward");
    if (!dz.same_shape(cache.output()))
        throw std::invalid_argument("backward: dz shape " + shape_str(dz) +
                                    " does not match output " + shape_str(cache.output()));
}

}  // namespace detail

inline ForwardCache mlp_forward(const MlpEncoder& enc, const DenseMatrix& x) {
    if (x.cols != enc.input_dim())
        throw std::invalid_argument("mlp_forward: input has " + std::to_string(x.cols) +
                                    " columns, encoder expects " + std::to_string(enc.input_dim()));
    ForwardCache cache;
    cache.input = x;
    cache.encoder_id = &enc;
    cache.param_version = enc.param_version;
    const DenseMatrix* h = &cache.input;
    const int L = enc.num_layers();
    for (int l = 0; l < L; ++l) {
        DenseMatrix pre = matmul(*h, enc.weights[static_cast<std::size_t>(l)]);
        detail::add_bias_rows(pre, enc.biases[static_cast<std::size_t>(l)]);
        cache.post.push_back(l + 1 < L ? detail::tanh_of(pre) : pre);
        cache.pre.push_back(std::move(pre));
        h = &cache.post.back();
    }
    return cache;
}

// Exact gradients of <dz, forward(x)> with respect to every parameter and
// to the input.
inline Gradients mlp_backward(const MlpEncoder& enc, const ForwardCache& cache, const DenseMatrix& dz) {
    detail::check_cache(cache, &enc, enc.param_version, dz);
    const int L = enc.num_layers();
    Gradients g;
    g.d_weights.resize(static_cast<std::size_t>(L));
    g.d_biases.resize(static_cast<std::size_t>(L));

    DenseMatrix delta = dz;
    for (int l = L - 1; l >= 0; --l) {
        const DenseMatrix& below = l == 0 ? cache.input : cache.post[static_cast<std::size_t>(l - 1)];
        g.d_weights[static_cast<std::size_t>(l)] = matmul_tn(below, delta);
        g.d_biases[static_cast<std::size_t>(l)] = detail::column_sums(delta);
        delta = matmul_nt(delta, enc.weights[static_cast<std::size_t>(l)]);
        if (l > 0) detail::apply_tanh_adjoint(delta, cache.post[static_cast<std::size_t>(l - 1)]);
    }
    g.d_input = std::move(delta);
    return g;
}

// ---------------------------------------------------------------------------
// GCN baseline encoder: layer l computes activation(A_hat * H * W + b) with
// A_hat = D^{-1/2}(A+I)D^{-1/2}. Used only as a comparison encoder.

using PropagationMatrix = std::vector<std::vector<std::pair<int, double>>>;

inline PropagationMatrix build_gcn_propagation(const SparseAdjacency& a) {
    const int n = a.n();
    std::vector<double> deg(static_cast<std::size_t>(n), 1.0);  // self-loop
    for (const Edge& e : a.entries()) deg[static_cast<std::size_t>(e.src)] += e.weight;
    PropagationMatrix prop(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& row = prop[static_cast<std::size_t>(i)];
        auto [b, e] = a.row(i);
        row.reserve(static_cast<std::size_t>(e - b) + 1);
        bool self_added = false;
        const double di = deg[static_cast<std::size_t>(i)];
        for (const Edge* it = b; it != e; ++it) {
            if (!self_added && it->dst > i) {
                row.emplace_back(i, 1.0 / di);
                self_added = true;
            }
            row.emplace_back(it->dst, it->weight / std::sqrt(di * deg[static_cast<std::size_t>(it->dst)]));
        }
        if (!self_added) row.emplace_back(i, 1.0 / di);
    }
    return prop;
}

struct GcnEncoder {
    MlpEncoder params;       // identical parameter layout
    PropagationMatrix prop;  // symmetric, indices within N
};

inline GcnEncoder gcn_init(const std::vector<int>& dims, const SparseAdjacency& a, Rng& rng) {
    return GcnEncoder{mlp_init(dims, rng), build_gcn_propagation(a)};
}

// out = prop * h (sparse rows times dense).
inline DenseMatrix propagate(const PropagationMatrix& prop, const DenseMatrix& h) {
    const int n = static_cast<int>(prop.size());
    if (h.rows != n)
        throw std::invalid_argument("propagate: matrix has " + std::to_string(h.rows) +
                                    " rows, propagation expects " + std::to_string(n));
    DenseMatrix out(n, h.cols);
    for (int i = 0; i < n; ++i) {
        double* oi = out.row(i);
        for (const auto& [j, w] : prop[static_cast<std::size_t>(i)]) {
            const double* hj = h.row(j);
            for (int c = 0; c < h.cols; ++c) oi[c] += w * hj[c];
        }
    }
    return out;
}

inline ForwardCache gcn_forward(const GcnEncoder& enc, const DenseMatrix& x) {
    if (x.cols != enc.params.input_dim())
        throw std::invalid_argument("gcn_forward: input has " + std::to_string(x.cols) +
                                    " columns, encoder expects " + std::to_string(enc.params.input_dim()));
    ForwardCache cache;
    cache.input = x;
    cache.encoder_id = &enc;
    cache.param_version = enc.params.param_version;
    const DenseMatrix* h = &cache.input;
    const int L = enc.params.num_layers();
    for (int l = 0; l < L; ++l) {
        DenseMatrix agg = propagate(enc.prop, *h);
        DenseMatrix pre = matmul(agg, enc.params.weights[static_cast<std::size_t>(l)]);
        detail::add_bias_rows(pre, enc.params.biases[static_cast<std::size_t>(l)]);
        cache.agg.push_back(std::move(agg));
        cache.post.push_back(l + 1 < L ? detail::tanh_of(pre) : pre);
        cache.pre.push_back(std::move(pre));
        h = &cache.post.back();
    }
    return cache;
}

inline Gradients gcn_backward(const GcnEncoder& enc, const ForwardCache& cache, const DenseMatrix& dz) {
    detail::check_cache(cache, &enc, enc.params.param_version, dz);
    const int L = enc.params.num_layers();
    Gradients g;
    g.d_weights.resize(static_cast<std::size_t>(L));
    g.d_biases.resize(static_cast<std::size_t>(L));

    DenseMatrix delta = dz;
    for (int l = L - 1; l >= 0; --l) {
        g.d_weights[static_cast<std::size_t>(l)] = matmul_tn(cache.agg[static_cast<std::size_t>(l)], delta);
        g.d_biases[static_cast<std::size_t>(l)] = detail::column_sums(delta);
        // d/dH of <delta, A_hat H W>: A_hat^T delta W^T, and A_hat is symmetric.
        delta = propagate(enc.prop, matmul_nt(delta, enc.params.weights[static_cast<std::size_t>(l)]));
        if (l > 0) detail::apply_tanh_adjoint(delta, cache.post[static_cast<std::size_t>(l - 1)]);
    }
    g.d_input = std::move(delta);
    return g;
}

// ---------------------------------------------------------------------------
// Serialization: one text file per encoder, round-trip exact.
//   line 1: KIND L dims...       (KIND is MLP or GCN; L weight layers)
//   per layer: dims[l] weight rows, then one bias line
// GCN propagation is graph-derived and not stored.

namespace detail {
inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

inline void save_encoder(const std::string& path, const MlpEncoder& enc, const std::string& kind = "MLP") {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << kind << " " << enc.num_layers();
    for (int d : enc.dims) out << " " << d;
    out << "\n";
    for (int l = 0; l < enc.num_layers(); ++l) {
        const DenseMatrix& w = enc.weights[static_cast<std::size_t>(l)];
        for (int i = 0; i < w.rows; ++i) {
            for (int j = 0; j < w.cols; ++j) {
                if (j) out << " ";
                out << detail::fmt17(w(i, j));
            }
            out << "\n";
        }
        const auto& b = enc.biases[static_cast<std::size_t>(l)];
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (j) out << " ";
            out << detail::fmt17(b[j]);
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct LoadedEncoder {
    MlpEncoder encoder;
    std::string kind;  // "MLP" or "GCN"
};

inline LoadedEncoder load_encoder(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string kind;
    int L = 0;
    in >> kind >> L;
    if (!in || (kind != "MLP" && kind != "GCN"))
        throw std::runtime_error(path + ": bad encoder header");
    if (L < 1) throw std::runtime_error(path + ": bad layer count");
    LoadedEncoder out;
    out.kind = kind;
    out.encoder.dims.resize(static_cast<std::size_t>(L) + 1);
    for (int& d : out.encoder.dims) {
        in >> d;
        if (!in || d < 1) throw std::runtime_error(path + ": bad dims");
    }
    for (int l = 0; l < L; ++l) {
        const int din = out.encoder.dims[static_cast<std::size_t>(l)];
        const int dout = out.encoder.dims[static_cast<std::size_t>(l) + 1];
        DenseMatrix w(din, dout);
        for (double& v : w.values) {
            in >> v;
            if (!in) throw std::runtime_error(path + ": truncated weights in layer " + std::to_string(l));
        }
        std::vector<double> b(static_cast<std::size_t>(dout));
        for (double& v : b) {
            in >> v;
            if (!in) throw std::runtime_error(path + ": truncated biases in layer " + std::to_string(l));
        }
        out.encoder.weights.push_back(std::move(w));
        out.encoder.biases.push_back(std::move(b));
    }
    return out;
}

}  // namespace mgl
